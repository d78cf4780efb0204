#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "branchlab/random.hpp"

namespace branchlab
{

double sample_gaussian(double variance, RandomStream& rng);

/*!
 * Mean-zero alpha-stable draw, alpha in (1, 2], totally skewed to the right,
 * with E exp(-eta X) = exp(c eta^alpha / alpha) for eta >= 0.
 *
 * Chambers-Mallows-Stuck with beta = 1 and scale
 * (c |cos(pi alpha / 2)| / alpha)^(1/alpha); alpha = 2 gives N(0, c).
 */
double sample_spectrally_positive(double alpha, double c, RandomStream& rng);

/*!
 * Positive alpha-stable draw, alpha in (0, 1), with
 * E exp(-lambda X) = exp(-beta lambda^alpha). Kanter's representation of
 * the unit law scaled by beta^(1/alpha).
 */
double sample_one_sided(double alpha, double beta, RandomStream& rng);

struct LaplaceEstimate
{
    double estimate;
    double standard_error;
};

// Sample mean and standard error of exp(-eta X); +inf samples contribute 0.
LaplaceEstimate empirical_laplace(std::span<double const> samples, double eta);

//---------------------------------------------------------------------------//
//! One of the three limit marginals.
struct LimitLaw
{
    enum class Kind
    {
        gaussian,             //!< scale = variance
        spectrally_positive,  //!< scale = c
        one_sided             //!< scale = beta
    };

    Kind kind;
    double alpha;
    double scale;

    double sample(RandomStream& rng) const;

    // Target Laplace transform E exp(-eta X).
    double laplace(double eta) const;
};

char const* to_string(LimitLaw::Kind kind);

struct LaplaceCheck
{
    double eta;
    double estimate;
    double standard_error;
    double target;
    double z_score;
    bool pass;
};

/*!
 * Draw `draws` variates and compare the empirical Laplace transform with
 * the target at each eta; a check passes when |z| <= z_threshold.
 */
std::vector<LaplaceCheck> verify_laplace(LimitLaw const& law,
                                         std::span<double const> etas,
                                         std::size_t draws,
                                         RandomStream& rng,
                                         double z_threshold = 3.0);

}  // namespace branchlab
