#include <cmath>
#include <numbers>
#include <stdexcept>

#include "doctest.h"

#include "branchlab/limit_theory.hpp"
#include "branchlab/pgf_engine.hpp"
#include "branchlab/special_functions.hpp"

using namespace branchlab;
using std::numbers::ln2;

TEST_CASE("mean and variance")
{
    ProcessParams const geo(1.0, law::Geometric{0.5});
    auto const z = mean_and_variance(geo, 0.0);
    CHECK(z.m == 1.0);
    CHECK(z.m2 == 1.0);
    CHECK(z.sigma2 == 0.0);
    CHECK(mean_and_variance(geo, 1.0).sigma2 == doctest::Approx(2.0).epsilon(1e-14));

    // Classical birth-death variance (b + d)/(b - d) e^{(b-d)t} (e^{(b-d)t} - 1)
    // with b = 2, d = 1.
    auto const bd = ProcessParams::birth_death(2.0, 1.0);
    double const e = std::exp(1.0);
    double const classical = 3.0 * e * (e - 1.0);
    CHECK(mean_and_variance(bd, 1.0).sigma2 == doctest::Approx(classical).epsilon(1e-13));
    CHECK(mean_and_variance(bd, 1.0).m == doctest::Approx(e).epsilon(1e-14));
    CHECK(std::isinf(mean_and_variance(ProcessParams(1.0, law::StableCritical{1.5}), 1.0).m2));
}

TEST_CASE("gaussian covariance")
{
    auto const p = gaussian_profile(ProcessParams(1.0, law::Geometric{0.5}));
    CHECK(p.covariance(0.5, 1.0) == doctest::Approx(1.0));
    CHECK(p.covariance(0.0, 1.0) == 0.0);
    CHECK(p.covariance(1.3, 1.3) == doctest::Approx(p.sigma2(1.3)));
    CHECK(gaussian_covariance(p, 1.0, 2.0) == doctest::Approx(2.0));
    auto const bd = gaussian_profile(ProcessParams::birth_death(2.0, 1.0));
    CHECK(bd.covariance(1.0, 2.5) == doctest::Approx(std::exp(1.5) * bd.sigma2(1.0)));
    CHECK(bd.covariance(2.5, 1.0) == doctest::Approx(bd.covariance(1.0, 2.5)));
    CHECK_THROWS_AS(gaussian_profile(ProcessParams(1.0, law::StableCritical{1.5})),
                    std::invalid_argument);
}

TEST_CASE("branch continuity near lambda = 0")
{
    // Poisson with mean 1 + 1e-9: lambda = 1e-9
    ProcessParams const near(1.0, law::Poisson{1.0 + 1e-9});
    double const tau2 = moment_profile(near).tau2;
    for (double t : {0.5, 1.0, 4.0})
    {
        double const s2 = mean_and_variance(near, t).sigma2;
        CHECK(std::fabs(s2 - tau2 * t) <= 1e-6 * tau2 * t);
        double const c = c_profile(near, 1.5, t);
        CHECK(std::fabs(c - t) <= 1e-6 * t);
    }
}

TEST_CASE("c profile")
{
    CHECK(c_profile(ProcessParams(2.0, law::StableCritical{1.5}), 1.5, 3.0) == doctest::Approx(6.0));
    CHECK(c_profile(ProcessParams(2.0, law::StableCritical{1.5}), 1.5, 0.0) == 0.0);
    ProcessParams const ls(1.0, law::LogSupercritical{});
    CHECK(c_profile(ls, 2.0, 1.0) == doctest::Approx(23.604546967106796).epsilon(1e-13));
    auto const prof = stable_ou_profile(ls);
    CHECK(prof.alpha == 2.0);
    CHECK(prof.lambda == doctest::Approx(2.0));
    CHECK(prof.m(1.0) == doctest::Approx(std::exp(2.0)));
}

TEST_CASE("csbp profile")
{
    auto const nv = stable_profile(ProcessParams(1.0, law::NeveuHarmonic{}));
    CHECK(nv.alpha(1.0) == doctest::Approx(std::exp(-1.0)).epsilon(1e-15));
    CHECK(nv.beta(1.0) == doctest::Approx(1.0));
    CHECK(nv.alpha(0.0) == 1.0);
    CHECK(nv.beta(0.0) == 1.0);

    double const b = 1.7;
    double const a = 0.8;
    auto const ld = stable_profile(ProcessParams(a, law::LuriaDelbruck{b}));
    for (double t : {0.3, 1.0, 2.0})
    {
        CHECK(ld.beta(t) == doctest::Approx(std::exp((std::exp(-a * b * t) - 1.0) / b)).epsilon(1e-14));
    }

    auto const gn = stable_profile(ProcessParams(1.0, law::GeneralizedNeveu{0.5, 0.2}));
    CHECK(gn.beta(1.0) == doctest::Approx(std::exp(0.4 * (std::exp(-0.5) - 1.0))).epsilon(1e-14));
    CHECK(gn.beta(1.0) == doctest::Approx(0.8545).epsilon(1e-4));
    auto const ld1 = stable_profile(ProcessParams(1.0, law::LuriaDelbruck{1.0}));
    CHECK(ld1.beta(1.0) == doctest::Approx(0.5315).epsilon(1e-4));

    CHECK_THROWS(stable_profile(ProcessParams(1.0, law::Geometric{0.5})));
}

TEST_CASE("alpha(t) is multiplicative")
{
    for (auto const& p : {ProcessParams(1.0, law::NeveuHarmonic{}),
                          ProcessParams(0.7, law::GeneralizedNeveu{0.5, 0.2}),
                          ProcessParams(1.3, law::LuriaDelbruck{2.0})})
    {
        auto const prof = stable_profile(p);
        for (double t : {0.1, 0.5, 1.0, 3.0})
        {
            for (double u : {0.2, 0.9, 2.0})
            {
                CHECK(std::fabs(prof.alpha(t + u) - prof.alpha(t) * prof.alpha(u)) <= 1e-12);
            }
        }
    }
}

TEST_CASE("beta(t) agrees with F through the csbp residual")
{
    CHECK(std::fabs(csbp_residual(ProcessParams(1.0, law::NeveuHarmonic{}), 1.0 - 1e-6, 1.0).value) < 1e-12);
    CHECK(std::fabs(csbp_residual(ProcessParams(1.0, law::GeneralizedNeveu{0.5, 0.2}), 1.0 - 1e-6, 1.0).value)
          < 1e-8);
    // Luria-Delbruck has no closed form; the ODE residual shrinks slowly.
    ProcessParams const ld(1.0, law::LuriaDelbruck{1.0});
    double const r3 = std::fabs(csbp_residual(ld, 1.0 - 1e-3, 0.5).value);
    double const r6 = std::fabs(csbp_residual(ld, 1.0 - 1e-6, 0.5).value);
    double const r9 = std::fabs(csbp_residual(ld, 1.0 - 1e-9, 0.5).value);
    CHECK(r6 < r3);
    CHECK(r9 < r6);
    CHECK(r9 < 0.02);
}

TEST_CASE("normalizer a_n")
{
    OffspringSpec const stable = law::StableCritical{1.5};
    CHECK(normalizer_an(stable, 1.5, 1e6) == doctest::Approx(1e4).epsilon(1e-10));
    CHECK(normalizer_an(stable, 1.5, 1.0) == doctest::Approx(1.0).epsilon(1e-10));
    for (auto const& [spec, alpha] :
         {std::pair{OffspringSpec(law::StableCritical{1.5}), 1.5},
          std::pair{OffspringSpec(law::StableCritical{1.2}), 1.2},
          std::pair{OffspringSpec(law::LogSupercritical{}), 2.0}})
    {
        for (double n : {1e3, 1e6, 1e9})
        {
            double const an = normalizer_an(spec, alpha, n);
            double const rel = alpha * n * regular_variation_L(spec, an) / std::pow(an, alpha);
            CHECK(std::fabs(rel - 1.0) <= 1e-9);
        }
    }
}

TEST_CASE("explosive profile")
{
    auto const p = explosive_profile(ProcessParams(1.0, law::Sibuya{0.5}));
    CHECK(p.p_infinity(2.0 * ln2) == doctest::Approx(0.25).epsilon(1e-14));
    CHECK(p.p_infinity(1e-9) < 1e-18);
    CHECK(p.p_infinity(0.0) == 0.0);
    CHECK(p.mean_explosion_time() == doctest::Approx(3.0).epsilon(1e-12));
    // digamma oracle behind E(T): psi(3) = 3/2 - gamma
    CHECK(digamma(3.0) == doctest::Approx(1.5 - euler_gamma).epsilon(1e-12));
    CHECK_THROWS(explosive_profile(ProcessParams(1.0, law::NeveuHarmonic{})));

    // E(T) for other alpha and a against a direct integral of F(1, t).
    ProcessParams const params(2.0, law::Sibuya{0.3});
    auto const q = explosive_profile(params);
    double integral = 0.0;
    double const h = 1e-3;
    for (double t = 0.5 * h; t < 60.0; t += h)
    {
        integral += (1.0 - q.p_infinity(t)) * h;
    }
    CHECK(q.mean_explosion_time() == doctest::Approx(integral).epsilon(1e-6));
}

TEST_CASE("conditioned explosive limit has exponent lambda^alpha(t) / alpha(t)")
{
    // E[exp(-lambda Z_t / a_n(t)) | Z_t < inf] = G(exp(-lambda / a_n), t)^n,
    // evaluated from the closed form; the gap shrinks as n grows.
    ProcessParams const params(1.0, law::Sibuya{0.5});
    auto const prof = explosive_profile(params);
    double const t = 0.4;
    double const at = prof.alpha_t(t);
    double const f1 = evaluate_F(params, 1.0, t);
    auto transform = [&](double lambda, double n) {
        double const s = std::exp(-lambda / prof.an(n, t));
        double const gap = one_minus_F(params, s, t) - one_minus_F(params, 1.0, t);
        return std::exp(n * std::log1p(-gap / f1));
    };
    for (double lambda : {0.5, 1.0, 2.0})
    {
        CAPTURE(lambda);
        double const target = std::exp(-std::pow(lambda, at) / at);
        // a_n grows like n^2 here, so n stays small enough for 1 - s to be
        // resolved in double precision
        double const e2 = std::fabs(transform(lambda, 1e2) - target);
        double const e4 = std::fabs(transform(lambda, 1e4) - target);
        CHECK(e4 < e2);
        CHECK(e4 < 1e-3);
    }
}

TEST_CASE("profiles serialize")
{
    auto const j = to_json(gaussian_profile(ProcessParams(1.0, law::Geometric{0.5})));
    CHECK(j.at("tau2").get<double>() == doctest::Approx(2.0));
    auto const k = to_json(stable_profile(ProcessParams(1.0, law::NeveuHarmonic{})));
    CHECK(k.at("A").get<double>() == 1.0);
}
