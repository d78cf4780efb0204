#include "branchlab/harness.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <ostream>
#include <stdexcept>

#include "branchlab/detail/parallel.hpp"
#include "branchlab/offspring_io.hpp"
#include "branchlab/pgf_engine.hpp"
#include "branchlab/stable_sampler.hpp"

namespace branchlab
{
using nlohmann::json;

//---------------------------------------------------------------------------//
// Kolmogorov-Smirnov
//---------------------------------------------------------------------------//
double ks_critical_constant(double significance)
{
    if (!(significance > 0.0 && significance < 1.0))
    {
        throw std::domain_error("significance must lie in (0, 1)");
    }
    return std::sqrt(-0.5 * std::log(0.5 * significance));
}

KsResult ks_two_sample(std::span<double const> x,
                       std::span<double const> y,
                       double significance)
{
    if (x.empty() || y.empty())
    {
        throw std::invalid_argument("ks_two_sample: empty sample");
    }
    std::vector<double> a(x.begin(), x.end());
    std::vector<double> b(y.begin(), y.end());
    auto is_nan = [](double v) { return std::isnan(v); };
    if (std::any_of(a.begin(), a.end(), is_nan)
        || std::any_of(b.begin(), b.end(), is_nan))
    {
        throw std::invalid_argument("ks_two_sample: NaN in sample");
    }
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    double const n1 = static_cast<double>(a.size());
    double const n2 = static_cast<double>(b.size());
    std::size_t i = 0;
    std::size_t j = 0;
    double d = 0.0;
    while (i < a.size() && j < b.size())
    {
        double const v = std::min(a[i], b[j]);
        while (i < a.size() && a[i] == v)
        {
            ++i;
        }
        while (j < b.size() && b[j] == v)
        {
            ++j;
        }
        d = std::max(d,
                     std::fabs(static_cast<double>(i) / n1
                               - static_cast<double>(j) / n2));
    }
    double const threshold
        = ks_critical_constant(significance) * std::sqrt((n1 + n2) / (n1 * n2));
    return {d, a.size(), b.size(), significance, threshold, d <= threshold};
}

//---------------------------------------------------------------------------//
// Covariance
//---------------------------------------------------------------------------//
namespace
{
std::size_t grid_index(std::vector<double> const& grid, double t)
{
    for (std::size_t i = 0; i < grid.size(); ++i)
    {
        if (std::fabs(grid[i] - t) <= 1e-12 * std::max(1.0, std::fabs(t)))
        {
            return i;
        }
    }
    throw std::invalid_argument("time " + std::to_string(t)
                                + " is not on the ensemble grid");
}
}  // namespace

std::vector<CovarianceRow>
covariance_table(ScaledEnsemble const& scaled,
                 GaussianLimitProfile const& profile,
                 std::span<std::pair<double, double> const> pairs)
{
    std::vector<CovarianceRow> rows;
    for (auto const& [s, t] : pairs)
    {
        if (std::min(s, t) <= 0.0)
        {
            continue;
        }
        auto const& xs = scaled.values[grid_index(scaled.grid, s)];
        auto const& ys = scaled.values[grid_index(scaled.grid, t)];
        auto const n = xs.size();
        if (n < 2 || ys.size() != n)
        {
            throw std::invalid_argument("covariance needs paired replicates");
        }
        double mx = 0.0;
        double my = 0.0;
        for (std::size_t r = 0; r < n; ++r)
        {
            mx += xs[r];
            my += ys[r];
        }
        mx /= static_cast<double>(n);
        my /= static_cast<double>(n);
        double acc = 0.0;
        for (std::size_t r = 0; r < n; ++r)
        {
            acc += (xs[r] - mx) * (ys[r] - my);
        }
        double const empirical = acc / static_cast<double>(n - 1);
        double const theory = profile.covariance(s, t);
        double const scale = profile.sigma2(std::min(s, t));
        rows.push_back(
            {s, t, empirical, theory, std::fabs(empirical - theory) / scale});
    }
    return rows;
}

double covariance_error(ScaledEnsemble const& scaled,
                        GaussianLimitProfile const& profile,
                        std::span<std::pair<double, double> const> pairs)
{
    double worst = 0.0;
    for (auto const& row : covariance_table(scaled, profile, pairs))
    {
        worst = std::max(worst, row.relative_error);
    }
    return worst;
}

//---------------------------------------------------------------------------//
// Configuration
//---------------------------------------------------------------------------//
char const* to_string(Regime regime)
{
    switch (regime)
    {
        case Regime::gaussian:
            return "gaussian";
        case Regime::stable_ou:
            return "stable_ou";
        case Regime::csbp:
            return "csbp";
        case Regime::explosive_conditional:
            return "explosive_conditional";
        case Regime::explosion_time:
            return "explosion_time";
    }
    return "?";
}

namespace
{
using json_field::optional;
using json_field::required;

Regime regime_from_string(std::string const& name)
{
    for (auto r : {Regime::gaussian,
                   Regime::stable_ou,
                   Regime::csbp,
                   Regime::explosive_conditional,
                   Regime::explosion_time})
    {
        if (name == to_string(r))
        {
            return r;
        }
    }
    throw ConfigError("/regime", "unknown regime '" + name + "'");
}

json const& block(json const& j, char const* key)
{
    json const& b = j.at(key);
    if (!b.is_object())
    {
        throw ConfigError(std::string("/") + key, "must be an object");
    }
    return b;
}

// Sim settings for the explosion clock: the grid is just the horizon.
SimConfig explosion_sim(SimConfig sim)
{
    sim.grid = {sim.end_time()};
    return sim;
}
}  // namespace

void ExperimentConfig::validate() const
{
    if (id.empty())
    {
        throw ConfigError("/id", "must be nonempty");
    }
    if (sim.replicates == 0)
    {
        throw ConfigError("/replicates", "must be positive");
    }
    if (sim.initial_n == 0)
    {
        throw ConfigError("/initial_n", "must be positive");
    }
    if (sim.explosion_cap <= sim.initial_n)
    {
        throw ConfigError("/explosion_cap", "must exceed initial_n");
    }
    if (!(significance > 0.0 && significance < 1.0))
    {
        throw ConfigError("/significance", "must lie in (0, 1)");
    }
    if (regime == Regime::explosion_time)
    {
        if (!(sim.horizon > 0.0))
        {
            throw ConfigError("/horizon", "explosion runs need a positive horizon");
        }
        if (!explosion)
        {
            throw ConfigError("/explosion", "missing required block");
        }
        if (!(explosion->fraction_time > 0.0
              && explosion->fraction_time <= sim.horizon))
        {
            throw ConfigError("/explosion/fraction_time",
                              "must lie in (0, horizon]");
        }
    }
    else
    {
        try
        {
            sim.validate();
        }
        catch (std::invalid_argument const& e)
        {
            throw ConfigError("/grid", e.what());
        }
    }

    auto const& spec = process.offspring;
    auto const mp = moment_profile(process);
    switch (regime)
    {
        case Regime::gaussian:
            if (!mp.second_moment_finite)
            {
                throw ConfigError("/process",
                                  "gaussian regime needs a finite second moment");
            }
            break;
        case Regime::stable_ou:
            if (!regular_variation_index(spec) || !std::isfinite(mp.lambda))
            {
                throw ConfigError("/process",
                                  "stable_ou regime needs a finite-mean "
                                  "regularly varying law");
            }
            break;
        case Regime::csbp:
        {
            bool ok = false;
            if (!std::isfinite(mp.mean_m))
            {
                auto const tc = tail_constants(spec);
                ok = tc.A > 0.0 && std::isfinite(tc.A) && tc.B.has_value();
            }
            if (!ok)
            {
                throw ConfigError("/process",
                                  "csbp regime needs tail constants A in "
                                  "(0, inf) and finite B");
            }
            break;
        }
        case Regime::explosive_conditional:
        case Regime::explosion_time:
            if (!spec.get_if<law::Sibuya>())
            {
                throw ConfigError("/process/offspring",
                                  "explosive regimes need Sibuya offspring");
            }
            break;
    }
    if (covariance)
    {
        if (regime != Regime::gaussian)
        {
            throw ConfigError("/covariance", "only valid in the gaussian regime");
        }
        if (covariance->replicates < 2)
        {
            throw ConfigError("/covariance/replicates", "must be at least 2");
        }
        for (std::size_t i = 0; i < covariance->pairs.size(); ++i)
        {
            auto const [s, t] = covariance->pairs[i];
            if (!(s > 0.0 && t > 0.0))
            {
                throw ConfigError("/covariance/pairs/" + std::to_string(i),
                                  "pair times must be positive");
            }
        }
    }
    if (laplace)
    {
        if (laplace->draws == 0)
        {
            throw ConfigError("/laplace/draws", "must be positive");
        }
        for (std::size_t i = 0; i < laplace->eta.size(); ++i)
        {
            if (!(laplace->eta[i] >= 0.0))
            {
                throw ConfigError("/laplace/eta/" + std::to_string(i),
                                  "must be nonnegative");
            }
        }
    }
    if (marginal_pgf)
    {
        if (marginal_pgf->replicates < 2)
        {
            throw ConfigError("/marginal_pgf/replicates", "must be at least 2");
        }
        for (std::size_t i = 0; i < marginal_pgf->s.size(); ++i)
        {
            double const s = marginal_pgf->s[i];
            if (!(s >= 0.0 && s < 1.0))
            {
                throw ConfigError("/marginal_pgf/s/" + std::to_string(i),
                                  "must lie in [0, 1)");
            }
        }
    }
}

ExperimentConfig experiment_from_json(json const& j)
{
    if (!j.is_object())
    {
        throw ConfigError("", "experiment config must be an object");
    }
    ExperimentConfig cfg;
    cfg.id = required<std::string>(j, "id", "");
    cfg.regime = regime_from_string(required<std::string>(j, "regime", ""));
    if (!j.contains("process"))
    {
        throw ConfigError("/process", "missing required field");
    }
    cfg.process = process_from_json(j.at("process"), "/process");
    cfg.sim.initial_n = required<std::uint64_t>(j, "initial_n", "");
    cfg.sim.replicates = required<std::size_t>(j, "replicates", "");
    cfg.sim.grid = optional<std::vector<double>>(j, "grid", "", {});
    cfg.sim.horizon = optional<double>(j, "horizon", "", 0.0);
    cfg.sim.explosion_cap
        = optional<std::uint64_t>(j, "explosion_cap", "", 1'000'000'000);
    cfg.sim.seed = required<std::uint64_t>(j, "seed", "");
    cfg.sim.threads = optional<unsigned>(j, "threads", "", 0);
    cfg.significance = optional<double>(j, "significance", "", 0.01);
    cfg.limit_samples = optional<std::size_t>(j, "limit_samples", "", 0);

    if (j.contains("covariance"))
    {
        auto const& b = block(j, "covariance");
        CovarianceSpec c;
        c.pairs = required<std::vector<std::pair<double, double>>>(
            b, "pairs", "/covariance");
        c.replicates
            = optional<std::size_t>(b, "replicates", "/covariance", c.replicates);
        c.tolerance = optional<double>(b, "tolerance", "/covariance", c.tolerance);
        cfg.covariance = c;
    }
    if (j.contains("laplace"))
    {
        auto const& b = block(j, "laplace");
        LaplaceSpec l;
        l.eta = required<std::vector<double>>(b, "eta", "/laplace");
        l.draws = optional<std::size_t>(b, "draws", "/laplace", l.draws);
        l.z = optional<double>(b, "z", "/laplace", l.z);
        cfg.laplace = l;
    }
    if (j.contains("marginal_pgf"))
    {
        auto const& b = block(j, "marginal_pgf");
        MarginalPgfSpec m;
        m.s = required<std::vector<double>>(b, "s", "/marginal_pgf");
        m.replicates
            = optional<std::size_t>(b, "replicates", "/marginal_pgf", m.replicates);
        m.z = optional<double>(b, "z", "/marginal_pgf", m.z);
        cfg.marginal_pgf = m;
    }
    if (j.contains("explosion"))
    {
        auto const& b = block(j, "explosion");
        ExplosionSpec e;
        e.relative_tolerance = optional<double>(
            b, "relative_tolerance", "/explosion", e.relative_tolerance);
        e.fraction_time
            = required<double>(b, "fraction_time", "/explosion");
        e.z = optional<double>(b, "z", "/explosion", e.z);
        e.cap_doubling_tolerance = optional<double>(
            b, "cap_doubling_tolerance", "/explosion", e.cap_doubling_tolerance);
        cfg.explosion = e;
    }
    cfg.validate();
    return cfg;
}

json to_json(ExperimentConfig const& cfg)
{
    json j{{"id", cfg.id},
           {"regime", to_string(cfg.regime)},
           {"process", to_json(cfg.process)},
           {"initial_n", cfg.sim.initial_n},
           {"replicates", cfg.sim.replicates},
           {"grid", cfg.sim.grid},
           {"horizon", cfg.sim.horizon},
           {"explosion_cap", cfg.sim.explosion_cap},
           {"seed", cfg.sim.seed},
           {"threads", cfg.sim.threads},
           {"significance", cfg.significance},
           {"limit_samples", cfg.limit_samples}};
    if (cfg.covariance)
    {
        j["covariance"] = {{"pairs", cfg.covariance->pairs},
                           {"replicates", cfg.covariance->replicates},
                           {"tolerance", cfg.covariance->tolerance}};
    }
    if (cfg.laplace)
    {
        j["laplace"] = {{"eta", cfg.laplace->eta},
                        {"draws", cfg.laplace->draws},
                        {"z", cfg.laplace->z}};
    }
    if (cfg.marginal_pgf)
    {
        j["marginal_pgf"] = {{"s", cfg.marginal_pgf->s},
                             {"replicates", cfg.marginal_pgf->replicates},
                             {"z", cfg.marginal_pgf->z}};
    }
    if (cfg.explosion)
    {
        j["explosion"]
            = {{"relative_tolerance", cfg.explosion->relative_tolerance},
               {"fraction_time", cfg.explosion->fraction_time},
               {"z", cfg.explosion->z},
               {"cap_doubling_tolerance", cfg.explosion->cap_doubling_tolerance}};
    }
    return j;
}

//---------------------------------------------------------------------------//
// Experiments
//---------------------------------------------------------------------------//
namespace
{
// Limit marginal at time t plus the level above which simulated values are
// censored by the cap (+inf when there is none).
struct Target
{
    LimitLaw law;
    double censor_level;
};

Check z_check(std::string type, double time, double z, double threshold, json detail)
{
    return {std::move(type),
            time,
            std::nullopt,
            std::fabs(z),
            threshold,
            std::fabs(z) <= threshold,
            std::move(detail)};
}

void add_laplace_checks(Report& rep,
                        ExperimentConfig const& cfg,
                        std::size_t time_index,
                        double t,
                        LimitLaw const& law)
{
    if (!cfg.laplace)
    {
        return;
    }
    RandomStream rng(derive_key(cfg.sim.seed, stream_tag::self_test), time_index);
    for (auto const& c :
         verify_laplace(law, cfg.laplace->eta, cfg.laplace->draws, rng, cfg.laplace->z))
    {
        rep.checks.push_back(z_check("laplace",
                                     t,
                                     c.z_score,
                                     cfg.laplace->z,
                                     {{"law", to_string(law.kind)},
                                      {"alpha", law.alpha},
                                      {"scale", law.scale},
                                      {"eta", c.eta},
                                      {"estimate", c.estimate},
                                      {"standard_error", c.standard_error},
                                      {"target", c.target}}));
    }
}

void add_marginal_checks(Report& rep, ExperimentConfig const& cfg)
{
    if (!cfg.marginal_pgf)
    {
        return;
    }
    SimConfig sim = cfg.sim;
    sim.initial_n = 1;
    sim.replicates = cfg.marginal_pgf->replicates;
    sim.seed = derive_key(cfg.sim.seed, stream_tag::marginal);
    auto const ens = simulate_ensemble(cfg.process, sim);
    for (std::size_t i = 0; i < sim.grid.size(); ++i)
    {
        double const t = sim.grid[i];
        for (double s : cfg.marginal_pgf->s)
        {
            std::vector<double> powers;
            powers.reserve(ens.paths.size());
            for (auto const& p : ens.paths)
            {
                auto const z = p.counts[i];
                powers.push_back(z == kExploded
                                     ? 0.0
                                     : std::pow(s, static_cast<double>(z)));
            }
            // empirical_laplace at eta = 1 of -log(s^Z) is the mean of s^Z
            for (double& v : powers)
            {
                v = v > 0.0 ? -std::log(v) : kInf;
            }
            auto const est = empirical_laplace(powers, 1.0);
            double const target = evaluate_F(cfg.process, s, t);
            double const z = est.standard_error > 0.0
                                 ? (est.estimate - target) / est.standard_error
                                 : (est.estimate == target ? 0.0 : kInf);
            rep.checks.push_back(z_check("marginal_pgf",
                                         t,
                                         z,
                                         cfg.marginal_pgf->z,
                                         {{"s", s},
                                          {"estimate", est.estimate},
                                          {"standard_error", est.standard_error},
                                          {"target", target}}));
        }
    }
}

void add_covariance_checks(Report& rep,
                           ExperimentConfig const& cfg,
                           GaussianLimitProfile const& profile)
{
    if (!cfg.covariance)
    {
        return;
    }
    std::vector<double> times;
    for (auto const& [s, t] : cfg.covariance->pairs)
    {
        times.push_back(s);
        times.push_back(t);
    }
    std::sort(times.begin(), times.end());
    times.erase(std::unique(times.begin(), times.end()), times.end());
    SimConfig sim = cfg.sim;
    sim.grid = times;
    sim.horizon = 0.0;
    sim.replicates = cfg.covariance->replicates;
    sim.seed = derive_key(cfg.sim.seed, stream_tag::covariance);
    auto const scaled = rescale(simulate_ensemble(cfg.process, sim), profile);
    for (auto const& row : covariance_table(scaled, profile, cfg.covariance->pairs))
    {
        rep.checks.push_back({"covariance",
                              row.s,
                              row.t,
                              row.relative_error,
                              cfg.covariance->tolerance,
                              row.relative_error <= cfg.covariance->tolerance,
                              {{"empirical", row.empirical},
                               {"theory", row.theory},
                               {"replicates", sim.replicates}}});
    }
}

void add_ks_checks(Report& rep,
                   ExperimentConfig const& cfg,
                   ScaledEnsemble const& scaled,
                   std::vector<Target> const& targets)
{
    std::size_t const draws
        = cfg.limit_samples ? cfg.limit_samples : cfg.sim.replicates;
    std::uint64_t const key = derive_key(cfg.sim.seed, stream_tag::limit);
    for (std::size_t i = 0; i < scaled.grid.size(); ++i)
    {
        double const t = scaled.grid[i];
        auto const& target = targets[i];
        std::vector<double> sim = scaled.values[i];
        json detail{{"law", to_string(target.law.kind)},
                    {"alpha", target.law.alpha},
                    {"scale", target.law.scale},
                    {"dropped", scaled.dropped[i]}};
        if (sim.empty())
        {
            rep.checks.push_back(
                {"ks", t, std::nullopt, 1.0, 0.0, false, std::move(detail)});
            continue;
        }
        RandomStream rng(key, i);
        std::vector<double> limit(draws);
        for (double& x : limit)
        {
            x = target.law.sample(rng);
        }
        std::size_t censored = 0;
        if (std::isfinite(target.censor_level))
        {
            for (double& x : sim)
            {
                if (x >= target.censor_level)
                {
                    x = target.censor_level;
                    ++censored;
                }
            }
            for (double& x : limit)
            {
                x = std::min(x, target.censor_level);
            }
            detail["censor_level"] = target.censor_level;
        }
        detail["censored"] = censored;
        auto const ks = ks_two_sample(sim, limit, cfg.significance);
        detail["n_simulated"] = ks.n1;
        detail["n_limit"] = ks.n2;
        rep.checks.push_back({"ks",
                              t,
                              std::nullopt,
                              ks.statistic,
                              ks.threshold,
                              ks.pass,
                              std::move(detail)});
    }
}

void run_limit_experiment(Report& rep, ExperimentConfig const& cfg)
{
    auto const& process = cfg.process;
    double const n = static_cast<double>(cfg.sim.initial_n);
    double const cap = static_cast<double>(cfg.sim.explosion_cap);
    auto const& grid = cfg.sim.grid;
    auto const ens = simulate_ensemble(process, cfg.sim);

    std::vector<Target> targets;
    ScaledEnsemble scaled;
    switch (cfg.regime)
    {
        case Regime::gaussian:
        {
            auto const profile = gaussian_profile(process);
            rep.profile = to_json(profile);
            scaled = rescale(ens, profile);
            for (double t : grid)
            {
                targets.push_back(
                    {{LimitLaw::Kind::gaussian, 2.0, profile.sigma2(t)},
                     (cap - n * profile.m(t)) / std::sqrt(n)});
            }
            add_covariance_checks(rep, cfg, profile);
            break;
        }
        case Regime::stable_ou:
        {
            auto const profile = stable_ou_profile(process);
            double const an = normalizer_an(process.offspring, profile.alpha, n);
            rep.profile = to_json(profile);
            rep.profile["an"] = an;
            scaled = rescale(ens, profile, an);
            for (double t : grid)
            {
                auto const kind = profile.alpha == 2.0
                                      ? LimitLaw::Kind::gaussian
                                      : LimitLaw::Kind::spectrally_positive;
                targets.push_back({{kind, profile.alpha, profile.c(t)},
                                   (cap - n * profile.m(t)) / an});
            }
            break;
        }
        case Regime::csbp:
        {
            auto const profile = stable_profile(process);
            rep.profile = to_json(profile);
            scaled = rescale(ens, profile);
            for (double t : grid)
            {
                double const at = profile.alpha(t);
                targets.push_back({{LimitLaw::Kind::one_sided, at, profile.beta(t)},
                                   cap / std::pow(n, 1.0 / at)});
            }
            break;
        }
        case Regime::explosive_conditional:
        {
            auto const profile = explosive_profile(process);
            rep.profile = to_json(profile);
            scaled = rescale(ens, profile);
            for (double t : grid)
            {
                // With a_n(t) = (n alpha(t) beta(t))^(1/alpha(t)) the
                // conditioned limit has exponent lambda^alpha(t) / alpha(t).
                double const at = profile.alpha_t(t);
                targets.push_back({{LimitLaw::Kind::one_sided, at, 1.0 / at},
                                   kInf});
            }
            break;
        }
        case Regime::explosion_time:
            break;
    }
    for (std::size_t i = 0; i < grid.size(); ++i)
    {
        auto const& law = targets[i].law;
        bool const degenerate = law.kind == LimitLaw::Kind::gaussian
                                && law.scale == 0.0;
        if (!degenerate)
        {
            add_laplace_checks(rep, cfg, i, grid[i], law);
        }
    }
    add_ks_checks(rep, cfg, scaled, targets);
    add_marginal_checks(rep, cfg);
}

// E min of n independent explosion times: integral of F(1, t)^n.
double mean_explosion_time(ExplosiveProfile const& profile, double n)
{
    if (n == 1.0)
    {
        return profile.mean_explosion_time();
    }
    auto survival = [&](double t) {
        return std::pow(1.0 - profile.p_infinity(t), n);
    };
    using Quad = boost::math::quadrature::gauss_kronrod<double, 31>;
    return Quad::integrate(survival, 0.0, std::numeric_limits<double>::infinity(),
                           15, 1e-12);
}

void run_explosion_experiment(Report& rep, ExperimentConfig const& cfg)
{
    auto const profile = explosive_profile(cfg.process);
    rep.profile = to_json(profile);
    auto const& spec = *cfg.explosion;
    std::uint64_t const n = cfg.sim.initial_n;
    std::size_t const count = cfg.sim.replicates;
    std::uint64_t const key = derive_key(cfg.sim.seed, stream_tag::explosion);

    auto sample_all = [&](std::uint64_t cap) {
        SimConfig sim = explosion_sim(cfg.sim);
        sim.explosion_cap = cap;
        std::vector<std::optional<double>> times(count);
        detail::parallel_for(count, cfg.sim.threads, [&](std::size_t r) {
            RandomStream rng(key, r);
            times[r] = sample_explosion_time(cfg.process, n, sim, rng);
        });
        return times;
    };
    auto mean_of = [](std::vector<std::optional<double>> const& times) {
        double acc = 0.0;
        std::size_t k = 0;
        for (auto const& t : times)
        {
            if (t)
            {
                acc += *t;
                ++k;
            }
        }
        return k ? acc / static_cast<double>(k) : kInf;
    };

    auto const times = sample_all(cfg.sim.explosion_cap);
    auto const doubled = sample_all(2 * cfg.sim.explosion_cap);
    double const mean_t = mean_of(times);
    double const mean_doubled = mean_of(doubled);
    double const theory = mean_explosion_time(profile, static_cast<double>(n));
    std::size_t const censored = static_cast<std::size_t>(
        std::count(times.begin(), times.end(), std::nullopt));

    double const rel = std::fabs(mean_t / theory - 1.0);
    rep.checks.push_back({"mean_explosion_time",
                          cfg.sim.horizon,
                          std::nullopt,
                          rel,
                          spec.relative_tolerance,
                          rel <= spec.relative_tolerance,
                          {{"mean", mean_t},
                           {"theory", theory},
                           {"censored", censored}}});

    double const tau = spec.fraction_time;
    double const target
        = 1.0 - std::pow(1.0 - profile.p_infinity(tau), static_cast<double>(n));
    std::size_t hits = 0;
    for (auto const& t : times)
    {
        hits += t && *t <= tau;
    }
    double const frac = static_cast<double>(hits) / static_cast<double>(count);
    double const se = std::sqrt(target * (1.0 - target) / static_cast<double>(count));
    double const z = se > 0.0 ? (frac - target) / se : 0.0;
    rep.checks.push_back(z_check("explosion_fraction",
                                 tau,
                                 z,
                                 spec.z,
                                 {{"fraction", frac},
                                  {"target", target},
                                  {"standard_error", se}}));

    double const shift = std::fabs(mean_doubled / mean_t - 1.0);
    rep.checks.push_back({"cap_doubling",
                          cfg.sim.horizon,
                          std::nullopt,
                          shift,
                          spec.cap_doubling_tolerance,
                          shift <= spec.cap_doubling_tolerance,
                          {{"mean", mean_t},
                           {"mean_doubled_cap", mean_doubled},
                           {"cap", cfg.sim.explosion_cap},
                           {"doubled_cap", 2 * cfg.sim.explosion_cap}}});

    rep.summary["mean_T"] = mean_t;
    rep.summary["theory_mean_T"] = theory;
    rep.summary["mean_T_doubled_cap"] = mean_doubled;
    rep.summary["censored"] = censored;
}
}  // namespace

Report run_experiment(ExperimentConfig const& cfg)
{
    cfg.validate();
    Report rep;
    rep.id = cfg.id;
    rep.regime = to_string(cfg.regime);
    rep.params = {{"process", to_json(cfg.process)},
                  {"initial_n", cfg.sim.initial_n},
                  {"replicates", cfg.sim.replicates},
                  {"grid", cfg.sim.grid},
                  {"explosion_cap", cfg.sim.explosion_cap},
                  {"significance", cfg.significance}};
    rep.seed = cfg.sim.seed;
    if (cfg.regime == Regime::explosion_time)
    {
        run_explosion_experiment(rep, cfg);
    }
    else
    {
        run_limit_experiment(rep, cfg);
    }
    rep.pass = std::all_of(rep.checks.begin(), rep.checks.end(), [](auto const& c) {
        return c.pass;
    });
    return rep;
}

json to_json(Report const& report)
{
    json checks = json::array();
    for (auto const& c : report.checks)
    {
        json row{{"type", c.type},
                 {"time_s", c.time_s},
                 {"time_t", c.time_t ? json(*c.time_t) : json(nullptr)},
                 {"statistic", c.statistic},
                 {"threshold", c.threshold},
                 {"pass", c.pass}};
        if (!c.detail.empty())
        {
            row["detail"] = c.detail;
        }
        checks.push_back(std::move(row));
    }
    json j{{"id", report.id},
           {"regime", report.regime},
           {"params", report.params},
           {"seed", report.seed},
           {"profile", report.profile},
           {"checks", checks},
           {"pass", report.pass},
           {"scope", "marginal and pair checks only; no path-space test"}};
    for (auto const& [key, value] : report.summary.items())
    {
        j[key] = value;
    }
    return j;
}

void write_csv(std::ostream& os, Report const& report)
{
    os << "id,type,time_s,time_t,statistic,threshold,pass\n";
    auto const old_precision = os.precision(17);
    for (auto const& c : report.checks)
    {
        os << report.id << ',' << c.type << ',' << c.time_s << ',';
        if (c.time_t)
        {
            os << *c.time_t;
        }
        os << ',' << c.statistic << ',' << c.threshold << ','
           << (c.pass ? "true" : "false") << '\n';
    }
    os.precision(old_precision);
}

}  // namespace branchlab
