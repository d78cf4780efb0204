#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include "branchlab/limit_theory.hpp"
#include "branchlab/offspring.hpp"
#include "branchlab/random.hpp"

namespace branchlab
{

// Count recorded at grid times on or after the population reached the cap.
inline constexpr std::uint64_t kExploded = UINT64_MAX;

struct SimConfig
{
    std::uint64_t initial_n = 1;
    std::vector<double> grid;  //!< strictly increasing, within [0, horizon]
    std::uint64_t explosion_cap = 1'000'000'000;
    double horizon = 0.0;  //!< 0 means the last grid time
    std::size_t replicates = 1;
    std::uint64_t seed = 0;
    unsigned threads = 0;  //!< 0: hardware concurrency

    // Throws std::invalid_argument on violated invariants.
    void validate() const;
    double end_time() const;
};

struct PathSample
{
    std::vector<std::uint64_t> counts;  //!< one per grid time
    std::optional<double> explosion_time;
    bool censored = false;  //!< explosion clock stopped at the horizon
};

struct Ensemble
{
    ProcessParams params;
    SimConfig config;
    std::vector<PathSample> paths;
};

/*!
 * Rescaled ensemble values[time index][replicate]. Replicates removed by
 * conditioning are absent (values per time may be shorter than the
 * replicate count) and counted in `dropped`. Replicates that hit the cap in
 * the other regimes are +inf.
 */
struct ScaledEnsemble
{
    enum class Regime
    {
        gaussian,
        stable_ou,
        csbp,
        explosive_conditional
    };

    Regime regime;
    std::vector<double> grid;
    std::vector<std::vector<double>> values;
    std::vector<std::size_t> dropped;
};

char const* to_string(ScaledEnsemble::Regime regime);

//---------------------------------------------------------------------------//
/*!
 * One trajectory of Z^(n) by aggregate event simulation: the next event
 * comes after Exp(a Z) and replaces one individual by an offspring draw.
 * Counts are right-continuous at grid times. Reaching the cap marks the
 * path exploded at the current time.
 */
PathSample simulate_path(ProcessParams const& params,
                         SimConfig const& cfg,
                         RandomStream& rng);

// Replicate r draws from stream r of derive_key(seed, ensemble tag).
Ensemble simulate_ensemble(ProcessParams const& params, SimConfig const& cfg);

// (Z - n m(t)) / sqrt(n)
ScaledEnsemble rescale(Ensemble const& ensemble,
                       GaussianLimitProfile const& profile);
// (Z - n m(t)) / a_n
ScaledEnsemble rescale(Ensemble const& ensemble,
                       StableOUProfile const& profile,
                       double an);
// Z / n^(1/alpha(t))
ScaledEnsemble rescale(Ensemble const& ensemble, CsbpProfile const& profile);
// Z / a_n(t) over paths still below the cap
ScaledEnsemble rescale(Ensemble const& ensemble,
                       ExplosiveProfile const& profile);

/*!
 * First time Z^(n) reaches cfg.explosion_cap; nullopt when the horizon
 * (or extinction) comes first. Non-explosive laws return nullopt without
 * simulating.
 */
std::optional<double> sample_explosion_time(ProcessParams const& params,
                                            std::uint64_t n,
                                            SimConfig const& cfg,
                                            RandomStream& rng);

// CSV with header replicate,time,count,exploded_flag; count is "inf" after
// the cap.
void write_csv(std::ostream& os, Ensemble const& ensemble);

}  // namespace branchlab
