#pragma once

#include "json.hpp"

#include "branchlab/offspring.hpp"

namespace branchlab
{

struct MeanVariance
{
    double m;       //!< E Z_t for Z_0 = 1
    double m2;      //!< E Z_t^2, +inf without a finite second moment
    double sigma2;  //!< Var Z_t
};

// Moments of Z_t started from one individual.
MeanVariance mean_and_variance(ProcessParams const& params, double t);

//---------------------------------------------------------------------------//
/*!
 * Finite-variance scaling: (Z^(n) - n m(t)) / sqrt(n) tends to a centered
 * Gaussian process with covariance m(|s-t|) sigma^2(s ^ t).
 */
struct GaussianLimitProfile
{
    double lambda;
    double tau2;

    double m(double t) const;
    double sigma2(double t) const;
    double covariance(double s, double t) const;
};

// Throws std::invalid_argument when tau^2 is infinite.
GaussianLimitProfile gaussian_profile(ProcessParams const& params);

double gaussian_covariance(GaussianLimitProfile const& profile,
                           double s,
                           double t);

//---------------------------------------------------------------------------//
/*!
 * Infinite-variance, finite-mean scaling: (Z^(n) - n m(t)) / a_n has Laplace
 * transform exp(c(t) eta^alpha / alpha).
 */
struct StableOUProfile
{
    double a;
    double lambda;
    double alpha;

    double m(double t) const;
    double c(double t) const;
};

// c(t) for rate a, Malthusian parameter lambda and index alpha.
double c_profile(ProcessParams const& params, double alpha, double t);

// Requires regular_variation_index(spec) to exist.
StableOUProfile stable_ou_profile(ProcessParams const& params);

/*!
 * Root a of a^alpha = alpha n Lambda(a), with Lambda the slowly varying part
 * of the finite-mean expansion (regular_variation_L). Searched in log space
 * on [1, 1e30]; throws std::runtime_error if the bracket fails.
 */
double normalizer_an(OffspringSpec const& spec, double alpha, double n);

//---------------------------------------------------------------------------//
/*!
 * Infinite-mean scaling: Z^(n) / n^(1/alpha(t)) has Laplace transform
 * exp(-beta(t) lambda^alpha(t)).
 */
struct CsbpProfile
{
    double a;
    double A;
    double B;

    double alpha(double t) const;
    double beta(double t) const;
};

// Rejects laws whose tail constant A is 0 or infinite.
CsbpProfile stable_profile(ProcessParams const& params);

//---------------------------------------------------------------------------//
//! Sibuya offspring: explosion law and scaling conditioned on Z_t < inf.
struct ExplosiveProfile
{
    double a;
    double offspring_alpha;

    double alpha_t(double t) const;
    double beta_t(double t) const;
    double p_infinity(double t) const;
    //! (n alpha(t) beta(t))^(1/alpha(t))
    double an(double n, double t) const;
    double mean_explosion_time() const;
};

ExplosiveProfile explosive_profile(ProcessParams const& params);

nlohmann::json to_json(GaussianLimitProfile const& p);
nlohmann::json to_json(StableOUProfile const& p);
nlohmann::json to_json(CsbpProfile const& p);
nlohmann::json to_json(ExplosiveProfile const& p);

}  // namespace branchlab
