#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include "branchlab/random.hpp"

namespace branchlab
{

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Offspring draws beyond this value are reported as this value; any
// population that receives one is far past every explosion cap.
inline constexpr std::uint64_t kSaturatedDraw = std::uint64_t{1} << 62;

namespace law
{
//! P(xi = k) = p q^k, k >= 0.
struct Geometric
{
    double p;
};

struct Poisson
{
    double mu;
};

//! Birth rate a1 (xi = 2) and death rate a2 (xi = 0); support {0, 2}.
struct BirthDeath
{
    double a1;
    double a2;
};

//! p_k = 4 / ((k-1) k (k+1)), k >= 2. Finite mean 3, infinite variance.
struct LogSupercritical
{
};

//! f(s) = s + (1-s)^alpha / alpha, alpha in (1, 2).
struct StableCritical
{
    double alpha;
};

//! p_k = 1 / (k (k-1)), k >= 2.
struct NeveuHarmonic
{
};

//! p_0 = c, p_1 = 1 - b - c, p_k = b / (k (k-1)) for k >= 2.
struct GeneralizedNeveu
{
    double b;
    double c;
};

//! f(s) = (1-s)^{b (1-s) / s}.
struct LuriaDelbruck
{
    double b;
};

//! f(s) = 1 - (1-s)^alpha, alpha in (0, 1). Explosive.
struct Sibuya
{
    double alpha;
};

struct CustomMetadata
{
    std::optional<double> mean;        //!< E xi, may be +inf
    std::optional<double> factorial2;  //!< E xi (xi - 1), may be +inf
    std::optional<double> tail_A;
    std::optional<double> tail_B;
    std::optional<bool> explosive;
};

/*!
 * User-supplied law.
 *
 * Only `pgf` and `sampler` are required. `one_minus_pgf(w)` should return
 * 1 - f(1 - w) without cancellation; when absent it is derived from `pgf`,
 * which limits accuracy for w below about 1e-8.
 */
struct Custom
{
    std::function<double(double)> pgf;
    std::function<double(double)> one_minus_pgf;
    std::function<std::uint64_t(RandomStream&)> sampler;
    CustomMetadata metadata;
    std::vector<double> pmf;  //!< set when built by from_pmf

    //! Finite-support law p_k = pmf[k]; the weights must sum to 1.
    static Custom from_pmf(std::vector<double> pmf);
};
}  // namespace law

namespace detail
{
class GammaRatioTail;
}

//---------------------------------------------------------------------------//
/*!
 * Offspring distribution: one of the catalog laws or a custom law.
 *
 * Parameters are validated on construction (std::invalid_argument). Heavy-
 * tailed laws build their sampling tables once here; copies share them.
 */
class OffspringSpec
{
  public:
    using Law = std::variant<law::Geometric,
                             law::Poisson,
                             law::BirthDeath,
                             law::LogSupercritical,
                             law::StableCritical,
                             law::NeveuHarmonic,
                             law::GeneralizedNeveu,
                             law::LuriaDelbruck,
                             law::Sibuya,
                             law::Custom>;

    OffspringSpec(Law law);  // NOLINT(google-explicit-constructor)

    template<class T>
        requires std::is_constructible_v<Law, T>
                 && (!std::is_same_v<std::decay_t<T>, Law>)
    OffspringSpec(T law)  // NOLINT(google-explicit-constructor)
        : OffspringSpec(Law(std::move(law)))
    {
    }

    Law const& law() const { return law_; }

    template<class T>
    T const* get_if() const
    {
        return std::get_if<T>(&law_);
    }

    // Family name as used in JSON configs, e.g. "neveu".
    std::string family() const;

    detail::GammaRatioTail const* heavy_tail() const
    {
        return heavy_tail_.get();
    }

  private:
    Law law_;
    std::shared_ptr<detail::GammaRatioTail const> heavy_tail_;
};

//! Lifetime rate a plus offspring law.
struct ProcessParams
{
    ProcessParams(double rate, OffspringSpec law);

    //! Birth-death process with per-capita rates a1 (birth) and a2 (death).
    static ProcessParams birth_death(double a1, double a2);

    // u(s) = a (f(s) - s)
    double u(double s) const;

    double a;
    OffspringSpec offspring;
};

struct MomentProfile
{
    double mean_m;   //!< E xi, +inf when infinite
    double lambda;   //!< a (m - 1)
    double tau2;     //!< a E xi (xi - 1)
    bool second_moment_finite;
    bool approximate = false;  //!< numeric estimate for an opaque custom law
};

enum class TailProvenance
{
    closed_form,
    numeric_extrapolation
};

struct TailConstants
{
    double A;                  //!< lim L(x) / log x, may be 0 or +inf
    std::optional<double> B;   //!< lim L(x) - A log x, when A in (0, inf)
    TailProvenance provenance;
    double uncertainty = 0.0;  //!< for numeric extrapolation
};

enum class ExplosionVerdict
{
    non_explosive,
    explosive,
    inconclusive
};

//---------------------------------------------------------------------------//
// OPERATIONS
//---------------------------------------------------------------------------//

// Offspring pgf f(s) for s in [0, 1]; std::domain_error outside.
double pgf_eval(OffspringSpec const& spec, double s);

// 1 - f(1 - w) for w in [0, 1], evaluated without cancellation for the
// catalog laws.
double one_minus_pgf(OffspringSpec const& spec, double w);

// L(x) = x (1 - f(1 - 1/x)) for x >= 1; std::domain_error for x < 1.
double slowly_varying_L(OffspringSpec const& spec, double x);

// L(e^y) for y >= 0; usable where e^y overflows.
double slowly_varying_L_log(OffspringSpec const& spec, double log_x);

std::uint64_t sample_offspring(OffspringSpec const& spec, RandomStream& rng);

MomentProfile moment_profile(ProcessParams const& params);

/*!
 * Tail constants A = lim L(x)/log x and B = lim (L(x) - A log x).
 *
 * Closed forms for the infinite-mean catalog laws; custom laws are probed
 * numerically on x = 10^2 .. 10^12. Throws std::invalid_argument for
 * finite-mean catalog laws.
 */
TailConstants tail_constants(OffspringSpec const& spec);

// Smallest fixed point of f on [0, 1].
double extinction_probability(ProcessParams const& params);

ExplosionVerdict check_non_explosion(ProcessParams const& params);

/*!
 * Tail index of the finite-mean regularity condition
 * 1 - f(s) = m (1-s) - (1-s)^alpha Lambda(1/(1-s)), when the law has one.
 */
std::optional<double> regular_variation_index(OffspringSpec const& spec);

// Lambda(x) from the condition above, x >= 1.
double regular_variation_L(OffspringSpec const& spec, double x);

char const* to_string(ExplosionVerdict verdict);

}  // namespace branchlab
