#include "branchlab/pgf_engine.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/lambert_w.hpp>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "branchlab/limit_theory.hpp"

namespace branchlab
{
namespace
{
constexpr double kEps = std::numeric_limits<double>::epsilon();

void check_arguments(double s, double t)
{
    if (!(s >= 0.0 && s <= 1.0))
    {
        throw std::domain_error("pgf: s must lie in [0, 1]");
    }
    if (!(t >= 0.0))
    {
        throw std::domain_error("pgf: t must be nonnegative");
    }
}

// r - log(1 + r) for r >= 0, accurate for small r.
double r_minus_log1p(double r)
{
    if (r < 0.1)
    {
        double term = r * r;
        double acc = 0.0;
        for (int k = 2; k < 24; ++k)
        {
            acc += (k % 2 == 0 ? term : -term) / k;
            term *= r;
        }
        return acc;
    }
    return r - std::log1p(r);
}

// 1/w - 1 + log w with w = 1 - s.
double log_supercritical_delta0(double s)
{
    if (s < 0.1)
    {
        // sum_{k>=2} (k-1)/k s^k
        double term = s * s;
        double acc = 0.0;
        for (int k = 2; k < 40; ++k)
        {
            acc += (k - 1.0) / k * term;
            term *= s;
        }
        return acc;
    }
    double const w = 1.0 - s;
    return s / w + std::log(w);
}

// Solve r - log(1 + r) = delta for r >= 0 (Newton, monotone from above).
double solve_log_supercritical(double delta)
{
    if (delta == 0.0)
    {
        return 0.0;
    }
    double r;
    if (delta < 1.0)
    {
        double const sigma = std::sqrt(2.0 * delta);
        r = sigma + sigma * sigma / 3.0 + sigma * sigma * sigma / 36.0;
    }
    else
    {
        r = delta + std::log1p(delta + std::log1p(delta));
    }
    for (int i = 0; i < 100; ++i)
    {
        double const step = (r_minus_log1p(r) - delta) * (1.0 + r) / r;
        r -= step;
        if (std::fabs(step) <= 4.0 * kEps * r)
        {
            break;
        }
    }
    return r;
}

// log(1 - F(s, t)) from a closed form, if the law has one.
std::optional<double> closed_log_one_minus_F(ProcessParams const& params,
                                             double s,
                                             double t)
{
    double const a = params.a;
    double const log_w = std::log1p(-s);
    return std::visit(
        [&](auto const& law) -> std::optional<double> {
            using L = std::decay_t<decltype(law)>;
            if constexpr (std::is_same_v<L, law::NeveuHarmonic>)
            {
                return std::exp(-a * t) * log_w;
            }
            else if constexpr (std::is_same_v<L, law::GeneralizedNeveu>)
            {
                double const decay = std::exp(-a * law.b * t);
                return decay * log_w + law.c / law.b * std::expm1(-a * law.b * t);
            }
            else if constexpr (std::is_same_v<L, law::StableCritical>)
            {
                double const r = 1.0 - law.alpha;
                double const base = std::exp(r * log_w)
                                    + (law.alpha - 1.0) / law.alpha * a * t;
                return std::log(base) / r;
            }
            else if constexpr (std::is_same_v<L, law::Sibuya>)
            {
                double const r = 1.0 - law.alpha;
                double const base = -std::expm1(-r * a * t)
                                    + std::exp(-r * a * t + r * log_w);
                return std::log(base) / r;
            }
            else if constexpr (std::is_same_v<L, law::LogSupercritical>)
            {
                // 1 - F = -1/W_{-1}(h) with log(-h) = -1 - delta; in terms of
                // r = -W - 1 this is r - log(1 + r) = delta.
                if (s == 1.0)
                {
                    return -kInf;
                }
                double const delta
                    = std::exp(-2.0 * a * t) * log_supercritical_delta0(s);
                return -std::log1p(solve_log_supercritical(delta));
            }
            else
            {
                return std::nullopt;
            }
        },
        params.offspring.law());
}

double log_limit(OffspringSpec const& spec)
{
    if (auto const* c = spec.get_if<law::Custom>())
    {
        return c->one_minus_pgf ? 700.0 : 18.0;
    }
    return 700.0;
}

// Time for log(1/(1 - F)) to descend from +inf to y, for explosive laws:
// (1/a) * integral over [y, y_max] of dy' / (L(e^y') - 1). The part beyond
// y_max is dropped.
double descent_time(ProcessParams const& params, double y, double y_max)
{
    auto integrand = [&](double yy) {
        return 1.0 / (slowly_varying_L_log(params.offspring, yy) - 1.0);
    };
    using Quad = boost::math::quadrature::gauss_kronrod<double, 31>;
    return Quad::integrate(integrand, y, y_max, 15, 1e-12) / params.a;
}

// log(1 - F(1, t)) for an explosive law without closed form.
double explosive_log_one_minus_F1(ProcessParams const& params,
                                  double t,
                                  SolverConfig const& cfg)
{
    auto const& spec = params.offspring;
    double const y_max = log_limit(spec);
    // Start the ODE once the descent rate a (L - 1) has dropped to 1e4.
    auto rate = [&](double y) {
        return params.a * (slowly_varying_L_log(spec, y) - 1.0);
    };
    double y_start = y_max;
    if (rate(y_max) > 1e4)
    {
        double lo = 0.0;
        double hi = y_max;
        while (rate(lo) > 1e4)
        {
            lo = 0.5 * (lo + hi);
        }
        for (int i = 0; i < 100; ++i)
        {
            double const mid = 0.5 * (lo + hi);
            (rate(mid) > 1e4 ? hi : lo) = mid;
        }
        y_start = hi;
    }
    double const tau = descent_time(params, y_start, y_max);
    if (tau >= t)
    {
        double lo = y_start;
        double hi = y_max;
        for (int i = 0; i < 80; ++i)
        {
            double const mid = 0.5 * (lo + hi);
            (descent_time(params, mid, y_max) > t ? lo : hi) = mid;
        }
        return -0.5 * (lo + hi);
    }
    auto rhs = [&](double z) {
        return params.a * (slowly_varying_L_log(spec, std::max(-z, 0.0)) - 1.0);
    };
    return integrate_autonomous(rhs, -y_start, t - tau, cfg);
}

double ode_log_one_minus_F(ProcessParams const& params,
                           double s,
                           double t,
                           SolverConfig const& cfg)
{
    if (s == 1.0)
    {
        if (check_non_explosion(params) == ExplosionVerdict::explosive)
        {
            return explosive_log_one_minus_F1(params, t, cfg);
        }
        return -kInf;
    }
    auto const& spec = params.offspring;
    auto rhs = [&](double z) {
        return params.a * (slowly_varying_L_log(spec, std::max(-z, 0.0)) - 1.0);
    };
    return std::min(0.0, integrate_autonomous(rhs, std::log1p(-s), t, cfg));
}

double log_one_minus_F(ProcessParams const& params,
                       double s,
                       double t,
                       SolverConfig const& cfg)
{
    if (auto closed = closed_log_one_minus_F(params, s, t))
    {
        return *closed;
    }
    return ode_log_one_minus_F(params, s, t, cfg);
}

double to_F(double log_v)
{
    // + 0.0 turns -0 into 0
    return std::clamp(-std::expm1(log_v), 0.0, 1.0) + 0.0;
}

SolverConfig tightened(SolverConfig cfg)
{
    cfg.rel_tol = std::min(cfg.rel_tol, 1e-12);
    cfg.abs_tol = std::min(cfg.abs_tol, 1e-14);
    return cfg;
}
}  // namespace

double evaluate_F(ProcessParams const& params,
                  double s,
                  double t,
                  SolverConfig const& cfg)
{
    check_arguments(s, t);
    if (t == 0.0)
    {
        return s;
    }
    return to_F(log_one_minus_F(params, s, t, cfg));
}

double evaluate_F_ode(ProcessParams const& params,
                      double s,
                      double t,
                      SolverConfig const& cfg)
{
    check_arguments(s, t);
    if (t == 0.0)
    {
        return s;
    }
    return to_F(ode_log_one_minus_F(params, s, t, cfg));
}

std::optional<double>
evaluate_F_closed(ProcessParams const& params, double s, double t)
{
    check_arguments(s, t);
    if (t == 0.0)
    {
        return s;
    }
    if (auto closed = closed_log_one_minus_F(params, s, t))
    {
        return to_F(*closed);
    }
    return std::nullopt;
}

double one_minus_F(ProcessParams const& params,
                   double s,
                   double t,
                   SolverConfig const& cfg)
{
    check_arguments(s, t);
    if (t == 0.0)
    {
        return 1.0 - s;
    }
    return std::exp(log_one_minus_F(params, s, t, cfg));
}

double conditional_pgf_G(ProcessParams const& params,
                         double s,
                         double t,
                         SolverConfig const& cfg)
{
    double const finite = evaluate_F(params, 1.0, t, cfg);
    if (!(finite > 0.0))
    {
        throw std::domain_error("conditional_pgf_G: P(Z_t < inf) = 0");
    }
    return std::min(1.0, evaluate_F(params, s, t, cfg) / finite);
}

double lambert_w_lower(double h)
{
    double const branch = -std::exp(-1.0);
    if (!(h < 0.0 && h >= branch - 4.0 * kEps))
    {
        throw std::domain_error("lambert_w_lower: h must lie in [-1/e, 0)");
    }
    if (h <= branch)
    {
        return -1.0;
    }
    return boost::math::lambert_wm1(h);
}

double local_alpha(ProcessParams const& params,
                   double t,
                   double s,
                   SolverConfig const& cfg)
{
    if (!(s >= 0.0 && s < 1.0))
    {
        throw std::domain_error("local_alpha: s must lie in [0, 1)");
    }
    if (s > 1.0 - 1e-9)
    {
        throw std::domain_error(
            "local_alpha: numerical derivative unreliable for s > 1 - 1e-9");
    }
    if (t == 0.0)
    {
        return 1.0;
    }
    double const w = 1.0 - s;
    double const delta = std::min(1e-6 / w, 0.1);
    double const s_plus = 1.0 - w * std::exp(delta);
    double const s_minus = 1.0 - w * std::exp(-delta);
    auto const fine = tightened(cfg);
    double const hi = log_one_minus_F(params, std::max(s_plus, 0.0), t, fine);
    double const lo = log_one_minus_F(params, s_minus, t, fine);
    double const dlog_w = std::log1p(-std::max(s_plus, 0.0)) - std::log1p(-s_minus);
    return (hi - lo) / dlog_w;
}

Residual transfer_residual(ProcessParams const& params,
                           double alpha,
                           double s,
                           double t,
                           SolverConfig const& cfg)
{
    if (!(s >= 0.0 && s < 1.0))
    {
        throw std::domain_error("transfer_residual: s must lie in [0, 1)");
    }
    auto const mp = moment_profile(params);
    if (!std::isfinite(mp.lambda))
    {
        throw std::invalid_argument("transfer_residual: law has an infinite mean");
    }
    double const w = 1.0 - s;
    double const m = std::exp(mp.lambda * t);
    double const v = one_minus_F(params, s, t, tightened(cfg));
    double const numerator = m * w - v;
    double const denominator
        = std::pow(w, alpha) * regular_variation_L(params.offspring, 1.0 / w);
    bool const warn = std::fabs(numerator) < 1e3 * kEps * m * w && t > 0.0;
    return {numerator / denominator - c_profile(params, alpha, t), warn};
}

Residual csbp_residual(ProcessParams const& params,
                       double s,
                       double t,
                       SolverConfig const& cfg)
{
    if (!(s >= 0.0 && s < 1.0))
    {
        throw std::domain_error("csbp_residual: s must lie in [0, 1)");
    }
    auto const profile = stable_profile(params);
    double const v = one_minus_F(params, s, t, tightened(cfg));
    double const alpha_t = profile.alpha(t);
    double const ratio = std::exp(std::log(v) - alpha_t * std::log1p(-s));
    // Relative accuracy of 1 - F from the ODE is about rel_tol.
    bool const warn = !evaluate_F_closed(params, s, t) && t > 0.0
                      && std::fabs(std::log(v)) * cfg.rel_tol > 1e-3;
    return {ratio - profile.beta(t), warn};
}

}  // namespace branchlab
