#include "branchlab/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

#include "branchlab/detail/offspring_sampling.hpp"
#include "branchlab/detail/parallel.hpp"

namespace branchlab
{

void SimConfig::validate() const
{
    if (initial_n == 0)
    {
        throw std::invalid_argument("initial_n must be positive");
    }
    if (replicates == 0)
    {
        throw std::invalid_argument("replicates must be positive");
    }
    if (explosion_cap <= initial_n)
    {
        throw std::invalid_argument("explosion_cap must exceed initial_n");
    }
    if (grid.empty())
    {
        throw std::invalid_argument("grid must be nonempty");
    }
    if (!(grid.front() >= 0.0))
    {
        throw std::invalid_argument("grid times must be nonnegative");
    }
    for (std::size_t i = 1; i < grid.size(); ++i)
    {
        if (!(grid[i] > grid[i - 1]))
        {
            throw std::invalid_argument("grid must be strictly increasing");
        }
    }
    if (horizon != 0.0 && !(horizon >= grid.back()))
    {
        throw std::invalid_argument("grid must lie within [0, horizon]");
    }
}

double SimConfig::end_time() const
{
    return horizon > 0.0 ? horizon : (grid.empty() ? 0.0 : grid.back());
}

char const* to_string(ScaledEnsemble::Regime regime)
{
    switch (regime)
    {
        case ScaledEnsemble::Regime::gaussian:
            return "gaussian";
        case ScaledEnsemble::Regime::stable_ou:
            return "stable_ou";
        case ScaledEnsemble::Regime::csbp:
            return "csbp";
        case ScaledEnsemble::Regime::explosive_conditional:
            return "explosive_conditional";
    }
    return "?";
}

namespace
{
template<class Sampler>
PathSample run_path(double a,
                    Sampler const& sample,
                    SimConfig const& cfg,
                    RandomStream& rng)
{
    auto const& grid = cfg.grid;
    PathSample out;
    out.counts.assign(grid.size(), 0);
    std::uint64_t const cap = cfg.explosion_cap;
    std::uint64_t z = cfg.initial_n;
    double t = 0.0;
    std::size_t idx = 0;
    while (idx < grid.size())
    {
        if (z == 0)
        {
            // absorbed; remaining counts stay 0
            break;
        }
        double const next = t + rng.exponential() / (a * static_cast<double>(z));
        while (idx < grid.size() && grid[idx] < next)
        {
            out.counts[idx++] = z;
        }
        if (idx == grid.size())
        {
            break;
        }
        t = next;
        std::uint64_t const xi = sample(rng);
        if (xi >= cap - z + 1)
        {
            out.explosion_time = t;
            std::fill(out.counts.begin() + static_cast<std::ptrdiff_t>(idx),
                      out.counts.end(),
                      kExploded);
            break;
        }
        z = z - 1 + xi;
    }
    return out;
}

template<class Sampler>
std::optional<double> run_to_cap(double a,
                                 Sampler const& sample,
                                 std::uint64_t n,
                                 std::uint64_t cap,
                                 double horizon,
                                 RandomStream& rng)
{
    std::uint64_t z = n;
    double t = 0.0;
    while (z > 0)
    {
        t += rng.exponential() / (a * static_cast<double>(z));
        if (t > horizon)
        {
            return std::nullopt;
        }
        std::uint64_t const xi = sample(rng);
        if (xi >= cap - z + 1)
        {
            return t;
        }
        z = z - 1 + xi;
    }
    return std::nullopt;
}

double scaled_count(std::uint64_t z, double shift, double scale)
{
    if (z == kExploded)
    {
        return kInf;
    }
    return (static_cast<double>(z) - shift) / scale;
}

template<class Fn>
ScaledEnsemble affine_rescale(Ensemble const& ensemble,
                              ScaledEnsemble::Regime regime,
                              Fn&& shift_and_scale)
{
    ScaledEnsemble out{regime, ensemble.config.grid, {}, {}};
    auto const& grid = ensemble.config.grid;
    out.values.resize(grid.size());
    out.dropped.assign(grid.size(), 0);
    for (std::size_t i = 0; i < grid.size(); ++i)
    {
        auto const [shift, scale] = shift_and_scale(grid[i]);
        auto& col = out.values[i];
        col.reserve(ensemble.paths.size());
        for (auto const& path : ensemble.paths)
        {
            col.push_back(scaled_count(path.counts[i], shift, scale));
        }
    }
    return out;
}
}  // namespace

PathSample simulate_path(ProcessParams const& params,
                         SimConfig const& cfg,
                         RandomStream& rng)
{
    cfg.validate();
    return detail::with_sampler(params.offspring, [&](auto const& sampler) {
        return run_path(params.a, sampler, cfg, rng);
    });
}

Ensemble simulate_ensemble(ProcessParams const& params, SimConfig const& cfg)
{
    cfg.validate();
    Ensemble out{params, cfg, std::vector<PathSample>(cfg.replicates)};
    std::uint64_t const key = derive_key(cfg.seed, stream_tag::ensemble);
    detail::with_sampler(params.offspring, [&](auto const& sampler) {
        detail::parallel_for(cfg.replicates, cfg.threads, [&](std::size_t r) {
            RandomStream rng(key, r);
            out.paths[r] = run_path(params.a, sampler, cfg, rng);
        });
        return 0;
    });
    return out;
}

ScaledEnsemble rescale(Ensemble const& ensemble,
                       GaussianLimitProfile const& profile)
{
    double const n = static_cast<double>(ensemble.config.initial_n);
    return affine_rescale(
        ensemble, ScaledEnsemble::Regime::gaussian, [&](double t) {
            return std::pair{n * profile.m(t), std::sqrt(n)};
        });
}

ScaledEnsemble rescale(Ensemble const& ensemble,
                       StableOUProfile const& profile,
                       double an)
{
    double const n = static_cast<double>(ensemble.config.initial_n);
    return affine_rescale(
        ensemble, ScaledEnsemble::Regime::stable_ou, [&](double t) {
            return std::pair{n * profile.m(t), an};
        });
}

ScaledEnsemble rescale(Ensemble const& ensemble, CsbpProfile const& profile)
{
    double const n = static_cast<double>(ensemble.config.initial_n);
    return affine_rescale(
        ensemble, ScaledEnsemble::Regime::csbp, [&](double t) {
            return std::pair{0.0, std::pow(n, 1.0 / profile.alpha(t))};
        });
}

ScaledEnsemble rescale(Ensemble const& ensemble,
                       ExplosiveProfile const& profile)
{
    double const n = static_cast<double>(ensemble.config.initial_n);
    auto const& grid = ensemble.config.grid;
    ScaledEnsemble out{
        ScaledEnsemble::Regime::explosive_conditional, grid, {}, {}};
    out.values.resize(grid.size());
    out.dropped.assign(grid.size(), 0);
    for (std::size_t i = 0; i < grid.size(); ++i)
    {
        double const an = profile.an(n, grid[i]);
        for (auto const& path : ensemble.paths)
        {
            if (path.counts[i] == kExploded)
            {
                ++out.dropped[i];
                continue;
            }
            out.values[i].push_back(static_cast<double>(path.counts[i]) / an);
        }
    }
    return out;
}

std::optional<double> sample_explosion_time(ProcessParams const& params,
                                            std::uint64_t n,
                                            SimConfig const& cfg,
                                            RandomStream& rng)
{
    if (n == 0 || cfg.explosion_cap <= n)
    {
        throw std::invalid_argument(
            "sample_explosion_time: need 0 < n < explosion_cap");
    }
    if (check_non_explosion(params) == ExplosionVerdict::non_explosive)
    {
        return std::nullopt;
    }
    double const horizon = cfg.end_time();
    return detail::with_sampler(params.offspring, [&](auto const& sampler) {
        return run_to_cap(
            params.a, sampler, n, cfg.explosion_cap, horizon, rng);
    });
}

void write_csv(std::ostream& os, Ensemble const& ensemble)
{
    os << "replicate,time,count,exploded_flag\n";
    auto const& grid = ensemble.config.grid;
    auto const old_precision = os.precision(17);
    for (std::size_t r = 0; r < ensemble.paths.size(); ++r)
    {
        auto const& counts = ensemble.paths[r].counts;
        for (std::size_t i = 0; i < grid.size(); ++i)
        {
            os << r << ',' << grid[i] << ',';
            if (counts[i] == kExploded)
            {
                os << "inf,1\n";
            }
            else
            {
                os << counts[i] << ",0\n";
            }
        }
    }
    os.precision(old_precision);
}

}  // namespace branchlab
