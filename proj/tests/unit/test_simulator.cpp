#include <boost/math/distributions/binomial.hpp>
#include <boost/math/distributions/chi_squared.hpp>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "doctest.h"

#include "branchlab/harness.hpp"
#include "branchlab/limit_theory.hpp"
#include "branchlab/pgf_engine.hpp"
#include "branchlab/simulator.hpp"

using namespace branchlab;

namespace
{
SimConfig config(std::uint64_t n, std::vector<double> grid, std::size_t reps, std::uint64_t seed)
{
    SimConfig c;
    c.initial_n = n;
    c.grid = std::move(grid);
    c.replicates = reps;
    c.seed = seed;
    return c;
}

struct MeanSe
{
    double mean;
    double se;
};

MeanSe column_mean(Ensemble const& e, std::size_t idx)
{
    double s = 0.0;
    double s2 = 0.0;
    for (auto const& p : e.paths)
    {
        auto const z = static_cast<double>(p.counts[idx]);
        s += z;
        s2 += z * z;
    }
    double const n = static_cast<double>(e.paths.size());
    double const m = s / n;
    return {m, std::sqrt((s2 / n - m * m) / (n - 1.0))};
}
}  // namespace

TEST_CASE("count at t = 0 is the initial size")
{
    auto const e = simulate_ensemble(ProcessParams(1.0, law::Geometric{0.5}),
                                     config(37, {0.0, 1.0}, 50, 1));
    for (auto const& p : e.paths)
    {
        CHECK(p.counts[0] == 37);
    }
}

TEST_CASE("pure death is binomial")
{
    ProcessParams const death(1.0, law::Custom::from_pmf({1.0}));
    std::uint64_t const n = 10'000;
    auto const e = simulate_ensemble(death, config(n, {1.0}, 1000, 2));
    double const p = std::exp(-1.0);
    auto const ms = column_mean(e, 0);
    CHECK(std::fabs(ms.mean - n * p) <= 3.0 * ms.se);

    // chi-square against Binomial(n, e^{-1}) on equiprobable-ish bins
    boost::math::binomial_distribution<double> const binom(static_cast<double>(n), p);
    std::vector<double> edges;
    for (int q = 1; q < 10; ++q)
    {
        edges.push_back(boost::math::quantile(binom, q / 10.0));
    }
    std::vector<double> expected(edges.size() + 1);
    double prev = 0.0;
    for (std::size_t b = 0; b < edges.size(); ++b)
    {
        double const c = boost::math::cdf(binom, edges[b]);
        expected[b] = c - prev;
        prev = c;
    }
    expected.back() = 1.0 - prev;
    std::vector<double> observed(expected.size(), 0.0);
    for (auto const& path : e.paths)
    {
        auto const z = static_cast<double>(path.counts[0]);
        auto const b = static_cast<std::size_t>(
            std::lower_bound(edges.begin(), edges.end(), z) - edges.begin());
        observed[b] += 1.0;
    }
    double chi2 = 0.0;
    for (std::size_t b = 0; b < expected.size(); ++b)
    {
        double const ex = expected[b] * 1000.0;
        chi2 += (observed[b] - ex) * (observed[b] - ex) / ex;
    }
    boost::math::chi_squared_distribution<double> const ref(expected.size() - 1.0);
    CHECK(chi2 < boost::math::quantile(ref, 0.99));
}

TEST_CASE("mean law n e^{lambda t}")
{
    std::vector<ProcessParams> const laws{
        {1.0, law::Geometric{0.5}},
        {1.0, law::Geometric{0.6}},
        {1.0, law::Poisson{1.2}},
        ProcessParams::birth_death(2.0, 1.0),
        {0.5, law::LogSupercritical{}},
        {1.0, law::StableCritical{1.5}},
        {1.0, law::Custom::from_pmf({0.3, 0.3, 0.2, 0.2})},
    };
    std::uint64_t seed = 10;
    for (auto const& p : laws)
    {
        CAPTURE(p.offspring.family());
        auto const e = simulate_ensemble(p, config(1000, {0.5, 1.0}, 10'000, ++seed));
        double const lambda = moment_profile(p).lambda;
        for (std::size_t i = 0; i < 2; ++i)
        {
            double const t = e.config.grid[i];
            auto const ms = column_mean(e, i);
            CAPTURE(t);
            CHECK(std::fabs(ms.mean - 1000.0 * std::exp(lambda * t)) <= 3.0 * ms.se);
        }
    }
}

TEST_CASE("branching property: n = 10 against sums of ten n = 1 paths")
{
    ProcessParams const geo(1.0, law::Geometric{0.5});
    auto const ten = simulate_ensemble(geo, config(10, {1.0}, 10'000, 21));
    auto const ones = simulate_ensemble(geo, config(1, {1.0}, 100'000, 22));
    std::vector<double> a;
    std::vector<double> b;
    for (auto const& p : ten.paths)
    {
        a.push_back(static_cast<double>(p.counts[0]));
    }
    for (std::size_t r = 0; r < ones.paths.size(); r += 10)
    {
        double sum = 0.0;
        for (std::size_t k = 0; k < 10; ++k)
        {
            sum += static_cast<double>(ones.paths[r + k].counts[0]);
        }
        b.push_back(sum);
    }
    CHECK(ks_two_sample(a, b, 0.01).pass);
}

TEST_CASE("ensembles are deterministic and independent of thread count")
{
    ProcessParams const p(1.0, law::StableCritical{1.5});
    auto c = config(500, {0.25, 0.5, 1.0}, 64, 99);
    c.threads = 1;
    auto const a = simulate_ensemble(p, c);
    auto const b = simulate_ensemble(p, c);
    c.threads = 3;
    auto const d = simulate_ensemble(p, c);
    std::ostringstream sa;
    std::ostringstream sb;
    std::ostringstream sd;
    write_csv(sa, a);
    write_csv(sb, b);
    write_csv(sd, d);
    CHECK(sa.str() == sb.str());
    CHECK(sa.str() == sd.str());
    c.seed = 100;
    std::ostringstream se;
    write_csv(se, simulate_ensemble(p, c));
    CHECK(sa.str() != se.str());
}

TEST_CASE("absorption at zero")
{
    auto const e = simulate_ensemble(ProcessParams(1.0, law::Geometric{0.7}),
                                     config(3, {0.5, 1.0, 2.0, 4.0, 8.0}, 2000, 31));
    int absorbed = 0;
    for (auto const& p : e.paths)
    {
        bool hit = false;
        for (auto z : p.counts)
        {
            if (hit)
            {
                CHECK(z == 0);
            }
            hit = hit || z == 0;
        }
        absorbed += hit;
    }
    CHECK(absorbed > 1000);
}

TEST_CASE("neveu marginal is the closed-form law")
{
    ProcessParams const neveu(1.0, law::NeveuHarmonic{});
    auto const e = simulate_ensemble(neveu, config(1, {0.5, 1.0}, 20'000, 41));
    for (std::size_t i = 0; i < 2; ++i)
    {
        double const t = e.config.grid[i];
        for (double s : {0.3, 0.6, 0.9})
        {
            double sum = 0.0;
            double sum2 = 0.0;
            for (auto const& p : e.paths)
            {
                double const v = p.counts[i] == kExploded ? 0.0 : std::pow(s, static_cast<double>(p.counts[i]));
                sum += v;
                sum2 += v * v;
            }
            double const n = static_cast<double>(e.paths.size());
            double const m = sum / n;
            double const se = std::sqrt((sum2 / n - m * m) / (n - 1.0));
            CAPTURE(t);
            CAPTURE(s);
            CHECK(std::fabs(m - (1.0 - std::pow(1.0 - s, std::exp(-t)))) <= 3.0 * se);
        }
    }
}

TEST_CASE("paths past the cap are marked exploded")
{
    ProcessParams const sib(1.0, law::Sibuya{0.5});
    auto c = config(1, {0.5, 1.0, 50.0}, 200, 51);
    c.explosion_cap = 100'000;
    auto const e = simulate_ensemble(sib, c);
    int exploded = 0;
    for (auto const& p : e.paths)
    {
        if (p.explosion_time)
        {
            ++exploded;
            for (std::size_t i = 0; i < c.grid.size(); ++i)
            {
                CHECK((c.grid[i] < *p.explosion_time) == (p.counts[i] != kExploded));
            }
        }
        else
        {
            CHECK(p.counts.back() != kExploded);
        }
    }
    CHECK(exploded > 190);
}

TEST_CASE("conditioning on no explosion matches G(s, t)^n")
{
    ProcessParams const sib(1.0, law::Sibuya{0.5});
    auto const prof = explosive_profile(sib);
    std::uint64_t const n = 1000;
    auto const e = simulate_ensemble(sib, config(n, {0.02, 0.05}, 4000, 61));
    auto const scaled = rescale(e, prof);
    for (std::size_t i = 0; i < 2; ++i)
    {
        double const t = e.config.grid[i];
        double const an = prof.an(static_cast<double>(n), t);
        double const f1 = evaluate_F(sib, 1.0, t);
        auto const& v = scaled.values[i];
        CHECK(v.size() + scaled.dropped[i] == e.paths.size());
        for (double lambda : {0.5, 1.0})
        {
            double const s = std::exp(-lambda / an);
            double const gap = one_minus_F(sib, s, t) - one_minus_F(sib, 1.0, t);
            double const exact = std::exp(static_cast<double>(n) * std::log1p(-gap / f1));
            double sum = 0.0;
            double sum2 = 0.0;
            for (double x : v)
            {
                double const w = std::exp(-lambda * x);
                sum += w;
                sum2 += w * w;
            }
            double const k = static_cast<double>(v.size());
            double const m = sum / k;
            double const se = std::sqrt((sum2 / k - m * m) / (k - 1.0));
            CAPTURE(t);
            CAPTURE(lambda);
            CHECK(std::fabs(m - exact) <= 3.0 * se + 1e-6);
        }
    }
}

TEST_CASE("rescaling arithmetic")
{
    auto ens_with = [](std::uint64_t n, double t, std::vector<std::uint64_t> counts) {
        SimConfig c;
        c.initial_n = n;
        c.grid = {t};
        c.replicates = counts.size();
        Ensemble e{ProcessParams(1.0, law::NeveuHarmonic{}), c, {}};
        for (auto z : counts)
        {
            e.paths.push_back({{z}, std::nullopt, false});
        }
        return e;
    };
    auto const g = rescale(ens_with(100, 1.0, {110, kExploded}),
                           gaussian_profile(ProcessParams(1.0, law::Geometric{0.5})));
    CHECK(g.values[0][0] == doctest::Approx(1.0));
    CHECK(std::isinf(g.values[0][1]));

    auto const cs = rescale(ens_with(10, std::numbers::ln2, {250}),
                            stable_profile(ProcessParams(1.0, law::NeveuHarmonic{})));
    CHECK(cs.values[0][0] == doctest::Approx(2.5).epsilon(1e-12));

    auto const so = rescale(ens_with(1000, 1.0, {1100}),
                            stable_ou_profile(ProcessParams(1.0, law::StableCritical{1.5})), 100.0);
    CHECK(so.values[0][0] == doctest::Approx(1.0));

    auto const ex = rescale(ens_with(10, 1.0, {kExploded, kExploded, kExploded}),
                            explosive_profile(ProcessParams(1.0, law::Sibuya{0.5})));
    CHECK(ex.values[0].empty());
    CHECK(ex.dropped[0] == 3);
}

TEST_CASE("explosion times")
{
    SimConfig c;
    c.grid = {1000.0};
    c.explosion_cap = 10'000'000;
    RandomStream rng(1, 2);
    CHECK_FALSE(sample_explosion_time(ProcessParams(1.0, law::Geometric{0.5}), 1, c, rng));

    ProcessParams const sib(1.0, law::Sibuya{0.5});
    std::uint64_t const key = derive_key(61, stream_tag::explosion);
    double sum = 0.0;
    int early = 0;
    int const reps = 2000;
    for (int r = 0; r < reps; ++r)
    {
        RandomStream s(key, r);
        auto const t = sample_explosion_time(sib, 1, c, s);
        REQUIRE(t.has_value());
        sum += *t;
        early += *t <= 2.0 * std::numbers::ln2;
    }
    CHECK(sum / reps == doctest::Approx(3.0).epsilon(0.05));
    CHECK(std::fabs(early / double(reps) - 0.25) <= 3.0 * std::sqrt(0.25 * 0.75 / reps));
}

TEST_CASE("CSV export")
{
    SimConfig c;
    c.initial_n = 2;
    c.grid = {0.0, 1.0};
    c.replicates = 1;
    Ensemble e{ProcessParams(1.0, law::NeveuHarmonic{}), c, {{{2, kExploded}, 0.5, false}}};
    std::ostringstream os;
    write_csv(os, e);
    CHECK(os.str() == "replicate,time,count,exploded_flag\n0,0,2,0\n0,1,inf,1\n");
}

TEST_CASE("config validation")
{
    ProcessParams const p(1.0, law::Geometric{0.5});
    CHECK_THROWS_AS(simulate_ensemble(p, config(0, {1.0}, 10, 1)), std::invalid_argument);
    CHECK_THROWS_AS(simulate_ensemble(p, config(10, {1.0}, 0, 1)), std::invalid_argument);
    CHECK_THROWS_AS(simulate_ensemble(p, config(10, {}, 10, 1)), std::invalid_argument);
    CHECK_THROWS_AS(simulate_ensemble(p, config(10, {1.0, 0.5}, 10, 1)), std::invalid_argument);
    CHECK_THROWS_AS(simulate_ensemble(p, config(10, {-1.0}, 10, 1)), std::invalid_argument);
    auto c = config(10, {1.0}, 10, 1);
    c.explosion_cap = 10;
    CHECK_THROWS_AS(simulate_ensemble(p, c), std::invalid_argument);
}
