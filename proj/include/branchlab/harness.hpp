#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "branchlab/limit_theory.hpp"
#include "branchlab/offspring.hpp"
#include "branchlab/simulator.hpp"

namespace branchlab
{

struct KsResult
{
    double statistic;
    std::size_t n1;
    std::size_t n2;
    double significance;
    double threshold;
    bool pass;
};

// Asymptotic two-sample constant c(sig) = sqrt(-ln(sig / 2) / 2).
double ks_critical_constant(double significance);

// Two-sample Kolmogorov-Smirnov test; +inf values are allowed.
KsResult ks_two_sample(std::span<double const> x,
                       std::span<double const> y,
                       double significance = 0.01);

struct CovarianceRow
{
    double s;
    double t;
    double empirical;
    double theory;
    double relative_error;
};

// Unbiased sample covariance against m(|s-t|) sigma^2(s ^ t); pairs with
// s ^ t = 0 are skipped. Pair times must lie on the ensemble grid.
std::vector<CovarianceRow>
covariance_table(ScaledEnsemble const& scaled,
                 GaussianLimitProfile const& profile,
                 std::span<std::pair<double, double> const> pairs);

// Largest relative error of covariance_table.
double covariance_error(ScaledEnsemble const& scaled,
                        GaussianLimitProfile const& profile,
                        std::span<std::pair<double, double> const> pairs);

//---------------------------------------------------------------------------//
enum class Regime
{
    gaussian,
    stable_ou,
    csbp,
    explosive_conditional,
    explosion_time
};

char const* to_string(Regime regime);

struct CovarianceSpec
{
    std::vector<std::pair<double, double>> pairs;
    std::size_t replicates = 10000;
    double tolerance = 0.05;
};

struct LaplaceSpec
{
    std::vector<double> eta;
    std::size_t draws = 1'000'000;
    double z = 3.0;
};

//! Empirical pgf of Z_t started from one individual against F(s, t).
struct MarginalPgfSpec
{
    std::vector<double> s;
    std::size_t replicates = 4000;
    double z = 3.0;
};

struct ExplosionSpec
{
    double relative_tolerance = 0.05;
    double fraction_time = 0.0;
    double z = 3.0;
    double cap_doubling_tolerance = 0.01;
};

struct ExperimentConfig
{
    std::string id;
    Regime regime = Regime::gaussian;
    ProcessParams process{1.0, law::Geometric{0.5}};
    SimConfig sim;
    double significance = 0.01;
    std::size_t limit_samples = 0;  //!< 0: same as sim.replicates
    std::optional<CovarianceSpec> covariance;
    std::optional<LaplaceSpec> laplace;
    std::optional<MarginalPgfSpec> marginal_pgf;
    std::optional<ExplosionSpec> explosion;

    // Throws ConfigError for inconsistent settings.
    void validate() const;
};

// Parse and validate; errors carry the JSON pointer of the offending field.
ExperimentConfig experiment_from_json(nlohmann::json const& j);
nlohmann::json to_json(ExperimentConfig const& cfg);

struct Check
{
    std::string type;
    double time_s;
    std::optional<double> time_t;
    double statistic;
    double threshold;
    bool pass;
    nlohmann::json detail = nlohmann::json::object();
};

struct Report
{
    std::string id;
    std::string regime;
    nlohmann::json params;
    std::uint64_t seed;
    nlohmann::json profile;
    std::vector<Check> checks;
    nlohmann::json summary = nlohmann::json::object();
    bool pass;
};

/*!
 * Simulate, rescale, draw limit samples and compare.
 *
 * Only marginal laws at grid times and pair covariances are checked; this
 * is weaker than convergence of the processes in path space.
 */
Report run_experiment(ExperimentConfig const& cfg);

nlohmann::json to_json(Report const& report);

// One row per check: id,type,time_s,time_t,statistic,threshold,pass
void write_csv(std::ostream& os, Report const& report);

}  // namespace branchlab
