#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "doctest.h"

#include "branchlab/limit_theory.hpp"
#include "branchlab/pgf_engine.hpp"

using namespace branchlab;
using std::numbers::ln2;

namespace
{
std::vector<ProcessParams> closed_form_laws()
{
    return {{1.0, law::NeveuHarmonic{}},
            {1.0, law::GeneralizedNeveu{0.5, 0.2}},
            {1.0, law::StableCritical{1.5}},
            {1.0, law::Sibuya{0.5}},
            {1.0, law::LogSupercritical{}}};
}

std::vector<ProcessParams> all_laws()
{
    return {{1.0, law::Geometric{0.5}},
            {1.0, law::Geometric{0.3}},
            {1.0, law::Poisson{1.0}},
            ProcessParams::birth_death(2.0, 1.0),
            {1.0, law::LogSupercritical{}},
            {1.0, law::StableCritical{1.5}},
            {1.0, law::NeveuHarmonic{}},
            {1.0, law::GeneralizedNeveu{0.5, 0.2}},
            {1.0, law::LuriaDelbruck{1.0}},
            {1.0, law::Sibuya{0.5}},
            {1.0, law::Custom::from_pmf({0.3, 0.3, 0.2, 0.2})}};
}

// Classical birth-death solution with birth rate b and death rate d.
double birth_death_F(double b, double d, double s, double t)
{
    double const e = std::exp(-(b - d) * t);
    return (d * (s - 1.0) - (b * s - d) * e) / (b * (s - 1.0) - (b * s - d) * e);
}

// Fixed-step RK4 on dF/dt = a (f(F) - F) as an independent oracle.
double rk4_F(ProcessParams const& p, double s, double t, int steps = 20000)
{
    double const h = t / steps;
    double y = s;
    for (int i = 0; i < steps; ++i)
    {
        double const k1 = p.u(y);
        double const k2 = p.u(std::min(1.0, y + 0.5 * h * k1));
        double const k3 = p.u(std::min(1.0, y + 0.5 * h * k2));
        double const k4 = p.u(std::min(1.0, y + h * k3));
        y += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    return y;
}
}  // namespace

TEST_CASE("F at t = 0 is s")
{
    for (auto const& p : all_laws())
    {
        CAPTURE(p.offspring.family());
        for (double s : {0.0, 0.3, 0.99, 1.0})
        {
            CHECK(evaluate_F(p, s, 0.0) == s);
        }
    }
}

TEST_CASE("closed-form values")
{
    ProcessParams const neveu(1.0, law::NeveuHarmonic{});
    CHECK(evaluate_F(neveu, 0.5, ln2) == doctest::Approx(1.0 - std::sqrt(0.5)).epsilon(1e-14));
    // Evaluating 1 - ((alpha-1) a t / alpha + (1-s)^(1-alpha))^(1/(1-alpha)) at
    // alpha = 1.5, s = 0.5, t = 1 gives 0.672552015114696.
    ProcessParams const stable(1.0, law::StableCritical{1.5});
    CHECK(evaluate_F(stable, 0.5, 1.0) == doctest::Approx(0.6725520151146959).epsilon(1e-13));
    ProcessParams const sibuya(1.0, law::Sibuya{0.5});
    CHECK(evaluate_F(sibuya, 1.0, 2.0 * ln2) == doctest::Approx(0.75).epsilon(1e-14));
    // Generalized Neveu: 1 - (1-s)^{e^{-abt}} exp((c/b)(e^{-abt} - 1))
    ProcessParams const gn(1.0, law::GeneralizedNeveu{0.5, 0.2});
    double const e = std::exp(-0.5);
    CHECK(evaluate_F(gn, 0.3, 1.0)
          == doctest::Approx(1.0 - std::pow(0.7, e) * std::exp(0.4 * (e - 1.0))).epsilon(1e-14));
}

TEST_CASE("ODE path against independent oracles")
{
    // birth-death, supercritical and critical
    auto const bd = ProcessParams::birth_death(2.0, 1.0);
    auto const crit = ProcessParams::birth_death(1.0, 1.0);
    for (double s : {0.0, 0.2, 0.5, 0.9})
    {
        for (double t : {0.1, 1.0, 3.0})
        {
            CAPTURE(s);
            CAPTURE(t);
            CHECK(evaluate_F(bd, s, t) == doctest::Approx(birth_death_F(2.0, 1.0, s, t)).epsilon(1e-9));
            CHECK(evaluate_F(crit, s, t)
                  == doctest::Approx(1.0 - (1.0 - s) / (1.0 + t * (1.0 - s))).epsilon(1e-9));
        }
    }
    for (auto const& p : {ProcessParams(1.0, law::Geometric{0.3}),
                          ProcessParams(1.5, law::Poisson{1.2}),
                          ProcessParams(1.0, law::LuriaDelbruck{1.0})})
    {
        CAPTURE(p.offspring.family());
        for (double s : {0.1, 0.6})
        {
            CHECK(evaluate_F(p, s, 1.0) == doctest::Approx(rk4_F(p, s, 1.0)).epsilon(1e-9));
        }
    }
}

TEST_CASE("closed form and ODE agree")
{
    for (auto const& p : closed_form_laws())
    {
        CAPTURE(p.offspring.family());
        double worst = 0.0;
        for (int i = 1; i <= 19; ++i)
        {
            double const s = 0.05 * i;
            for (double t : {0.5, 1.0, 2.0})
            {
                auto const closed = evaluate_F_closed(p, s, t);
                REQUIRE(closed.has_value());
                worst = std::max(worst, std::fabs(*closed - evaluate_F_ode(p, s, t)));
            }
        }
        CHECK(worst <= 1e-8);
    }
    CHECK_FALSE(evaluate_F_closed(ProcessParams(1.0, law::Geometric{0.5}), 0.5, 1.0));
}

TEST_CASE("explosive F(1, t) from the ODE path")
{
    ProcessParams const sibuya(1.0, law::Sibuya{0.5});
    CHECK(evaluate_F_ode(sibuya, 1.0, 2.0 * ln2) == doctest::Approx(0.75).epsilon(1e-8));
    CHECK(evaluate_F(ProcessParams(1.0, law::NeveuHarmonic{}), 1.0, 1.0) == 1.0);
}

TEST_CASE("semigroup identity")
{
    std::vector<double> const ss{0.05, 0.3, 0.5, 0.7, 0.95};
    std::vector<double> const ts{0.1, 0.5, 1.0, 2.0};
    for (auto const& p : all_laws())
    {
        CAPTURE(p.offspring.family());
        for (double s : ss)
        {
            for (double t : ts)
            {
                for (double u : ts)
                {
                    double const lhs = evaluate_F_ode(p, s, t + u);
                    double const rhs = evaluate_F_ode(p, evaluate_F_ode(p, s, t), u);
                    CHECK(std::fabs(lhs - rhs) <= 1e-8);
                    if (auto const c = evaluate_F_closed(p, s, t + u))
                    {
                        double const inner = *evaluate_F_closed(p, s, t);
                        CHECK(std::fabs(*c - *evaluate_F_closed(p, inner, u)) <= 1e-8);
                    }
                }
            }
        }
    }
}

TEST_CASE("F is nondecreasing in s")
{
    for (auto const& p : all_laws())
    {
        CAPTURE(p.offspring.family());
        double prev = -1.0;
        for (int i = 0; i <= 50; ++i)
        {
            double const f = evaluate_F(p, i / 50.0, 1.0);
            CHECK(f >= prev);
            prev = f;
        }
    }
}

TEST_CASE("one_minus_F keeps precision near s = 1")
{
    ProcessParams const neveu(1.0, law::NeveuHarmonic{});
    double const w = 1e-12;
    CHECK(one_minus_F(neveu, 1.0 - w, 1.0) == doctest::Approx(std::pow(w, std::exp(-1.0))).epsilon(1e-3));
    ProcessParams const gn(1.0, law::GeneralizedNeveu{0.5, 0.2});
    // through the ODE path, compared with the closed form
    double const exact = std::pow(1e-6, std::exp(-0.5)) * std::exp(0.4 * (std::exp(-0.5) - 1.0));
    CHECK(one_minus_F(gn, 1.0 - 1e-6, 1.0) == doctest::Approx(exact).epsilon(1e-9));
}

TEST_CASE("conditional pgf G")
{
    ProcessParams const sibuya(1.0, law::Sibuya{0.5});
    for (double s : {0.0, 0.4, 1.0})
    {
        CHECK(conditional_pgf_G(sibuya, s, 0.0) == doctest::Approx(s));
    }
    CHECK(conditional_pgf_G(sibuya, 1.0, 3.0) == doctest::Approx(1.0).epsilon(1e-14));
    double const t = 2.0 * ln2;
    CHECK(conditional_pgf_G(sibuya, 0.5, t)
          == doctest::Approx(evaluate_F(sibuya, 0.5, t) / 0.75).epsilon(1e-13));
}

TEST_CASE("lambert W lower branch")
{
    CHECK(lambert_w_lower(-std::exp(-1.0)) == doctest::Approx(-1.0).epsilon(1e-7));
    CHECK(lambert_w_lower(-0.1) == doctest::Approx(-3.577152063957297).epsilon(1e-14));
    double const w8 = lambert_w_lower(-1e-8);
    CHECK(w8 < -20.0);
    CHECK(std::fabs(w8 * std::exp(w8) + 1e-8) <= 1e-13 * 1e-8);
    // identity residual over log-spaced h
    for (int i = 0; i < 1000; ++i)
    {
        double const h = -std::exp(-1.0) * std::pow(10.0, -300.0 * i / 999.0);
        double const w = lambert_w_lower(h);
        CAPTURE(h);
        CHECK(w <= -1.0);
        CHECK(std::fabs(w * std::exp(w) - h) <= 1e-13 * std::max(std::fabs(h), 1e-300));
    }
    CHECK_THROWS_AS(lambert_w_lower(0.0), std::domain_error);
    CHECK_THROWS_AS(lambert_w_lower(-0.5), std::domain_error);
}

TEST_CASE("local alpha")
{
    ProcessParams const neveu(1.0, law::NeveuHarmonic{});
    for (double s : {0.1, 0.5, 0.9})
    {
        CHECK(local_alpha(neveu, 0.0, s) == 1.0);
    }
    CHECK(local_alpha(neveu, 1.0, 1.0 - 1e-6) == doctest::Approx(std::exp(-1.0)).epsilon(1e-4));
    // Luria-Delbruck approaches e^{-abt} only logarithmically in 1 - s.
    ProcessParams const ld(1.0, law::LuriaDelbruck{2.0});
    double const a3 = local_alpha(ld, 0.5, 1.0 - 1e-3);
    double const a6 = local_alpha(ld, 0.5, 1.0 - 1e-6);
    double const a9 = local_alpha(ld, 0.5, 1.0 - 1e-9);
    CHECK(a3 < a6);
    CHECK(a6 < a9);
    CHECK(std::fabs(a9 - std::exp(-1.0)) < 1e-3);
    CHECK(std::fabs(a9 - std::exp(-1.0)) < std::fabs(a6 - std::exp(-1.0)));
    CHECK_THROWS_AS(local_alpha(ld, 0.5, 1.0 - 1e-10), std::domain_error);
}

TEST_CASE("transfer residual")
{
    ProcessParams const stable(1.0, law::StableCritical{1.5});
    CHECK(transfer_residual(stable, 1.5, 0.5, 0.0).value == 0.0);
    CHECK(std::fabs(transfer_residual(stable, 1.5, 1.0 - 1e-4, 1.0).value) < 1e-2);
    CHECK(std::fabs(transfer_residual(stable, 1.5, 1.0 - 1e-6, 1.0).value)
          < std::fabs(transfer_residual(stable, 1.5, 1.0 - 1e-4, 1.0).value));

    // LogSupercritical: c(1) = e^2 (e^2 - 1) / 2; the residual decays like
    // 1 / log(1/(1-s)), so only the trend is checked.
    ProcessParams const ls(1.0, law::LogSupercritical{});
    double const c1 = 0.5 * std::exp(2.0) * std::expm1(2.0);
    CHECK(c_profile(ls, 2.0, 1.0) == doctest::Approx(c1).epsilon(1e-12));
    double prev = kInf;
    for (double w : {1e-3, 1e-5, 1e-7})
    {
        double const r = transfer_residual(ls, 2.0, 1.0 - w, 1.0).value;
        CAPTURE(w);
        CHECK(std::fabs(r) < prev);
        CHECK(std::fabs(r) * std::log(1.0 / w) < 40.0);
        prev = std::fabs(r);
    }
}

TEST_CASE("csbp residual")
{
    ProcessParams const neveu(1.0, law::NeveuHarmonic{});
    for (double t : {0.0, 0.5, 2.0})
    {
        for (double s : {0.0, 0.5, 1.0 - 1e-6})
        {
            CHECK(std::fabs(csbp_residual(neveu, s, t).value) <= 1e-14);
        }
    }
    ProcessParams const gn(1.0, law::GeneralizedNeveu{0.5, 0.2});
    CHECK(std::fabs(csbp_residual(gn, 1.0 - 1e-6, 1.0).value) < 1e-8);
    CHECK(csbp_residual(gn, 0.4, 0.0).value == doctest::Approx(0.0));
}
