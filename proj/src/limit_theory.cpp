#include "branchlab/limit_theory.hpp"

#include <boost/math/tools/roots.hpp>
#include <cmath>
#include <stdexcept>

#include "branchlab/special_functions.hpp"

namespace branchlab
{
namespace
{
constexpr double kSeriesSwitch = 1e-8;

// (e^x - 1) / x with a 4-term Taylor branch near 0.
double expm1_ratio(double x)
{
    if (std::fabs(x) < kSeriesSwitch)
    {
        return 1.0 + x / 2.0 + x * x / 6.0 + x * x * x / 24.0;
    }
    return std::expm1(x) / x;
}

// (e^{lambda t} - 1) / lambda, equal to t when lambda = 0.
double growth_integral(double lambda, double t)
{
    return t * expm1_ratio(lambda * t);
}
}  // namespace

MeanVariance mean_and_variance(ProcessParams const& params, double t)
{
    if (t < 0.0)
    {
        throw std::domain_error("mean_and_variance: t must be nonnegative");
    }
    auto const mp = moment_profile(params);
    if (!std::isfinite(mp.lambda))
    {
        return {kInf, kInf, kInf};
    }
    double const m = std::exp(mp.lambda * t);
    if (!mp.second_moment_finite)
    {
        return {m, kInf, kInf};
    }
    double const g = growth_integral(mp.lambda, t);
    double const m2 = mp.tau2 * m * g + m;
    double const sigma2 = (mp.tau2 - mp.lambda) * m * g;
    return {m, m2, sigma2};
}

//---------------------------------------------------------------------------//
double GaussianLimitProfile::m(double t) const
{
    return std::exp(lambda * t);
}

double GaussianLimitProfile::sigma2(double t) const
{
    return (tau2 - lambda) * m(t) * growth_integral(lambda, t);
}

double GaussianLimitProfile::covariance(double s, double t) const
{
    return m(std::fabs(s - t)) * sigma2(std::min(s, t));
}

GaussianLimitProfile gaussian_profile(ProcessParams const& params)
{
    auto const mp = moment_profile(params);
    if (!mp.second_moment_finite || !std::isfinite(mp.lambda))
    {
        throw std::invalid_argument(
            "gaussian profile requires a finite second moment");
    }
    return {mp.lambda, mp.tau2};
}

double gaussian_covariance(GaussianLimitProfile const& profile,
                           double s,
                           double t)
{
    if (s < 0.0 || t < 0.0)
    {
        throw std::domain_error("gaussian_covariance: negative time");
    }
    return profile.covariance(s, t);
}

//---------------------------------------------------------------------------//
double StableOUProfile::m(double t) const
{
    return std::exp(lambda * t);
}

double StableOUProfile::c(double t) const
{
    // a e^{lambda t} (e^{lambda (alpha-1) t} - 1) / ((alpha-1) lambda)
    return a * std::exp(lambda * t)
           * growth_integral(lambda * (alpha - 1.0), t);
}

double c_profile(ProcessParams const& params, double alpha, double t)
{
    if (!(alpha > 1.0 && alpha <= 2.0))
    {
        throw std::domain_error("c_profile: alpha must lie in (1, 2]");
    }
    auto const mp = moment_profile(params);
    if (!std::isfinite(mp.lambda))
    {
        throw std::invalid_argument("c_profile: law has an infinite mean");
    }
    return StableOUProfile{params.a, mp.lambda, alpha}.c(t);
}

StableOUProfile stable_ou_profile(ProcessParams const& params)
{
    auto const alpha = regular_variation_index(params.offspring);
    auto const mp = moment_profile(params);
    if (!alpha || !std::isfinite(mp.lambda))
    {
        throw std::invalid_argument(
            "stable OU profile requires a finite-mean regularly varying law");
    }
    return {params.a, mp.lambda, *alpha};
}

double normalizer_an(OffspringSpec const& spec, double alpha, double n)
{
    if (!(n >= 1.0))
    {
        throw std::domain_error("normalizer_an: n must be >= 1");
    }
    // h(y) = alpha y - log(alpha n Lambda(e^y)), a = e^y
    double const log_an = std::log(alpha * n);
    auto h = [&](double y) {
        return alpha * y - log_an
               - std::log(regular_variation_L(spec, std::exp(y)));
    };
    double lo = 0.0;
    double hi = std::log(1e30);
    double h_lo = h(lo);
    double h_hi = h(hi);
    if (std::fabs(h_lo) <= 1e-12)
    {
        // root at a = 1 up to rounding of Lambda(1)
        return 1.0;
    }
    if (!(h_lo < 0.0 && h_hi > 0.0))
    {
        throw std::runtime_error("normalizer_an: root not bracketed in [1, 1e30]");
    }
    std::uintmax_t iterations = 200;
    auto const root = boost::math::tools::toms748_solve(
        h,
        lo,
        hi,
        h_lo,
        h_hi,
        boost::math::tools::eps_tolerance<double>(52),
        iterations);
    double y = 0.5 * (root.first + root.second);
    if (std::fabs(h(root.first)) < std::fabs(h(y)))
    {
        y = root.first;
    }
    if (std::fabs(h(root.second)) < std::fabs(h(y)))
    {
        y = root.second;
    }
    return std::exp(y);
}

//---------------------------------------------------------------------------//
double CsbpProfile::alpha(double t) const
{
    return std::exp(-a * A * t);
}

double CsbpProfile::beta(double t) const
{
    // exp((B - 1) A^{-1} (1 - alpha(t)))
    return std::exp((B - 1.0) / A * -std::expm1(-a * A * t));
}

CsbpProfile stable_profile(ProcessParams const& params)
{
    auto const tc = tail_constants(params.offspring);
    if (!(tc.A > 0.0 && std::isfinite(tc.A)) || !tc.B)
    {
        throw std::invalid_argument(
            "CSBP profile requires tail constants A in (0, inf) and finite B");
    }
    return {params.a, tc.A, *tc.B};
}

//---------------------------------------------------------------------------//
double ExplosiveProfile::alpha_t(double t) const
{
    return t > 0.0 ? 1.0 - offspring_alpha : 1.0;
}

double ExplosiveProfile::beta_t(double t) const
{
    if (t <= 0.0)
    {
        return 1.0;
    }
    double const r = 1.0 - offspring_alpha;
    double const decay = std::exp(-r * a * t);
    double const x = -std::expm1(-r * a * t);
    return std::pow(x, offspring_alpha / r) * decay
           / (r * (1.0 - std::pow(x, 1.0 / r)));
}

double ExplosiveProfile::p_infinity(double t) const
{
    double const r = 1.0 - offspring_alpha;
    return std::pow(-std::expm1(-r * a * t), 1.0 / r);
}

double ExplosiveProfile::an(double n, double t) const
{
    double const at = alpha_t(t);
    return std::pow(n * at * beta_t(t), 1.0 / at);
}

double ExplosiveProfile::mean_explosion_time() const
{
    double const r = 1.0 - offspring_alpha;
    return (digamma((2.0 - offspring_alpha) / r) + euler_gamma) / (a * r);
}

ExplosiveProfile explosive_profile(ProcessParams const& params)
{
    auto const* s = params.offspring.get_if<law::Sibuya>();
    if (!s)
    {
        throw std::invalid_argument(
            "explosive profile is available for Sibuya offspring only");
    }
    return {params.a, s->alpha};
}

//---------------------------------------------------------------------------//
nlohmann::json to_json(GaussianLimitProfile const& p)
{
    return {{"regime", "gaussian"}, {"lambda", p.lambda}, {"tau2", p.tau2}};
}

nlohmann::json to_json(StableOUProfile const& p)
{
    return {{"regime", "stable_ou"},
            {"a", p.a},
            {"lambda", p.lambda},
            {"alpha", p.alpha}};
}

nlohmann::json to_json(CsbpProfile const& p)
{
    return {{"regime", "csbp"}, {"a", p.a}, {"A", p.A}, {"B", p.B}};
}

nlohmann::json to_json(ExplosiveProfile const& p)
{
    return {{"regime", "explosive_conditional"},
            {"a", p.a},
            {"offspring_alpha", p.offspring_alpha},
            {"mean_explosion_time", p.mean_explosion_time()}};
}

}  // namespace branchlab
