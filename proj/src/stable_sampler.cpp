#include "branchlab/stable_sampler.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace branchlab
{

double sample_gaussian(double variance, RandomStream& rng)
{
    if (!(variance >= 0.0))
    {
        throw std::domain_error("sample_gaussian: negative variance");
    }
    if (variance == 0.0)
    {
        return 0.0;
    }
    return std::sqrt(variance) * rng.normal();
}

double sample_spectrally_positive(double alpha, double c, RandomStream& rng)
{
    if (!(alpha > 1.0 && alpha <= 2.0) || !(c > 0.0))
    {
        throw std::domain_error(
            "sample_spectrally_positive: need alpha in (1, 2] and c > 0");
    }
    if (alpha == 2.0)
    {
        return sample_gaussian(c, rng);
    }
    constexpr double pi = std::numbers::pi;
    double const v = pi * (rng.uniform() - 0.5);
    double const w = rng.exponential();
    double const tan_term = std::tan(0.5 * pi * alpha);
    double const b = std::atan(tan_term) / alpha;
    double const s = std::pow(1.0 + tan_term * tan_term, 0.5 / alpha);
    double const x = s * std::sin(alpha * (v + b))
                     / std::pow(std::cos(v), 1.0 / alpha)
                     * std::pow(std::cos(v - alpha * (v + b)) / w,
                                (1.0 - alpha) / alpha);
    double const gamma
        = std::pow(c * std::fabs(std::cos(0.5 * pi * alpha)) / alpha,
                   1.0 / alpha);
    return gamma * x;
}

double sample_one_sided(double alpha, double beta, RandomStream& rng)
{
    if (!(alpha > 0.0 && alpha < 1.0) || !(beta > 0.0))
    {
        throw std::domain_error(
            "sample_one_sided: need alpha in (0, 1) and beta > 0");
    }
    double const v = std::numbers::pi * rng.uniform();
    double const w = rng.exponential();
    double const x = std::sin(alpha * v) / std::pow(std::sin(v), 1.0 / alpha)
                     * std::pow(std::sin((1.0 - alpha) * v) / w,
                                (1.0 - alpha) / alpha);
    return std::pow(beta, 1.0 / alpha) * x;
}

LaplaceEstimate empirical_laplace(std::span<double const> samples, double eta)
{
    if (samples.empty())
    {
        throw std::invalid_argument("empirical_laplace: empty sample");
    }
    if (!(eta >= 0.0))
    {
        throw std::domain_error("empirical_laplace: eta must be nonnegative");
    }
    // Welford
    double mean = 0.0;
    double m2 = 0.0;
    std::size_t n = 0;
    for (double x : samples)
    {
        double const y = eta == 0.0 ? 1.0 : std::exp(-eta * x);
        ++n;
        double const d = y - mean;
        mean += d / static_cast<double>(n);
        m2 += d * (y - mean);
    }
    double const se
        = n > 1 ? std::sqrt(m2 / static_cast<double>(n - 1)
                            / static_cast<double>(n))
                : 0.0;
    return {mean, se};
}

//---------------------------------------------------------------------------//
double LimitLaw::sample(RandomStream& rng) const
{
    switch (kind)
    {
        case Kind::gaussian:
            return sample_gaussian(scale, rng);
        case Kind::spectrally_positive:
            return sample_spectrally_positive(alpha, scale, rng);
        case Kind::one_sided:
            return sample_one_sided(alpha, scale, rng);
    }
    return 0.0;
}

double LimitLaw::laplace(double eta) const
{
    switch (kind)
    {
        case Kind::gaussian:
            return std::exp(0.5 * scale * eta * eta);
        case Kind::spectrally_positive:
            return std::exp(scale * std::pow(eta, alpha) / alpha);
        case Kind::one_sided:
            return std::exp(-scale * std::pow(eta, alpha));
    }
    return 0.0;
}

char const* to_string(LimitLaw::Kind kind)
{
    switch (kind)
    {
        case LimitLaw::Kind::gaussian:
            return "gaussian";
        case LimitLaw::Kind::spectrally_positive:
            return "spectrally_positive";
        case LimitLaw::Kind::one_sided:
            return "one_sided";
    }
    return "?";
}

std::vector<LaplaceCheck> verify_laplace(LimitLaw const& law,
                                         std::span<double const> etas,
                                         std::size_t draws,
                                         RandomStream& rng,
                                         double z_threshold)
{
    std::vector<double> samples(draws);
    for (double& x : samples)
    {
        x = law.sample(rng);
    }
    std::vector<LaplaceCheck> out;
    for (double eta : etas)
    {
        auto const est = empirical_laplace(samples, eta);
        double const target = law.laplace(eta);
        double const z = est.standard_error > 0.0
                             ? (est.estimate - target) / est.standard_error
                             : (est.estimate == target
                                    ? 0.0
                                    : std::numeric_limits<double>::infinity());
        out.push_back({eta,
                       est.estimate,
                       est.standard_error,
                       target,
                       z,
                       std::fabs(z) <= z_threshold});
    }
    return out;
}

}  // namespace branchlab
