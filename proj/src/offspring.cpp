#include "branchlab/offspring.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>

#include "branchlab/detail/offspring_sampling.hpp"

namespace branchlab
{
namespace detail
{
//---------------------------------------------------------------------------//
// GammaRatioTail
//---------------------------------------------------------------------------//

GammaRatioTail::GammaRatioTail(double index,
                               double scale,
                               double tail0,
                               std::size_t table_size,
                               std::size_t guide_bins)
    : index_(index), scale_(scale)
{
    table_.resize(std::max<std::size_t>(table_size, 2));
    table_[0] = tail0;
    table_[1] = scale * std::tgamma(2.0 - index);
    for (std::size_t k = 2; k < table_.size(); ++k)
    {
        auto const kd = static_cast<double>(k);
        table_[k] = table_[k - 1] * (kd - index) / kd;
    }
    if (guide_bins > 0)
    {
        guide_.resize(guide_bins);
        auto const m = static_cast<double>(guide_bins);
        std::size_t k = 0;
        for (std::size_t j = guide_bins; j-- > 0;)
        {
            double const level = static_cast<double>(j + 1) / m;
            while (k < table_.size() && table_[k] >= level)
            {
                ++k;
            }
            guide_[j] = static_cast<std::uint32_t>(k);
        }
    }
}

double GammaRatioTail::tail(std::uint64_t k) const
{
    if (k < table_.size())
    {
        return table_[k];
    }
    auto const kd = static_cast<double>(k);
    return scale_ * boost::math::tgamma_delta_ratio(kd + 1.0 - index_, index_);
}

std::uint64_t GammaRatioTail::invert(double u) const
{
    std::size_t lo = 0;
    std::size_t hi = table_.size();
    if (!guide_.empty())
    {
        auto const j = std::min(
            guide_.size() - 1,
            static_cast<std::size_t>(u * static_cast<double>(guide_.size())));
        lo = guide_[j];
        if (j > 0)
        {
            hi = std::min<std::size_t>(table_.size(), guide_[j - 1] + 1);
        }
        // Most draws land on lo itself.
        if (lo < table_.size() && table_[lo] < u)
        {
            return lo;
        }
    }
    else
    {
        // Sequential trials over the short table.
        for (std::size_t k = 0; k < table_.size(); ++k)
        {
            if (table_[k] < u)
            {
                return k;
            }
        }
        return invert_beyond_table(u);
    }
    auto const first = std::partition_point(
        table_.begin() + static_cast<std::ptrdiff_t>(lo),
        table_.begin() + static_cast<std::ptrdiff_t>(hi),
        [u](double t) { return t >= u; });
    if (first != table_.end())
    {
        return static_cast<std::uint64_t>(first - table_.begin());
    }
    return invert_beyond_table(u);
}

std::uint64_t GammaRatioTail::invert_beyond_table(double u) const
{
    constexpr double limit = 0x1.0p52;
    double const guess = std::pow(u / scale_, -1.0 / index_);
    if (!(guess < limit))
    {
        return kSaturatedDraw;
    }
    std::uint64_t const first = table_.size();
    // Invariant: tail(lo) >= u (lo may be the last table entry), tail(hi) < u.
    std::uint64_t hi = std::max<std::uint64_t>(
        first, static_cast<std::uint64_t>(guess));
    std::uint64_t lo = first - 1;
    if (tail(hi) >= u)
    {
        std::uint64_t step = 1;
        do
        {
            lo = hi;
            hi += step;
            step *= 2;
            if (static_cast<double>(hi) > limit)
            {
                return kSaturatedDraw;
            }
        } while (tail(hi) >= u);
    }
    else
    {
        std::uint64_t step = 1;
        while (hi - step > lo && tail(hi - step) < u)
        {
            hi -= step;
            step *= 2;
        }
        lo = std::max(lo, hi - std::min(hi - lo, step));
    }
    while (hi - lo > 1)
    {
        std::uint64_t const mid = lo + (hi - lo) / 2;
        if (tail(mid) < u)
        {
            hi = mid;
        }
        else
        {
            lo = mid;
        }
    }
    return hi;
}

//---------------------------------------------------------------------------//
// Poisson: sequential inversion for small means, PTRS (Hormann 1993) above.
//---------------------------------------------------------------------------//
std::uint64_t draw_poisson(double mu, RandomStream& rng)
{
    if (mu < 10.0)
    {
        double const u = rng.uniform();
        double p = std::exp(-mu);
        double cdf = p;
        std::uint64_t k = 0;
        while (u > cdf && k < 1000)
        {
            ++k;
            p *= mu / static_cast<double>(k);
            cdf += p;
        }
        return k;
    }
    double const slam = std::sqrt(mu);
    double const loglam = std::log(mu);
    double const b = 0.931 + 2.53 * slam;
    double const a = -0.059 + 0.02483 * b;
    double const invalpha = 1.1239 + 1.1328 / (b - 3.4);
    double const vr = 0.9277 - 3.6224 / (b - 2.0);
    while (true)
    {
        double const u = rng.uniform() - 0.5;
        double const v = rng.uniform();
        double const us = 0.5 - std::fabs(u);
        double const k = std::floor((2.0 * a / us + b) * u + mu + 0.43);
        if (us >= 0.07 && v <= vr)
        {
            return static_cast<std::uint64_t>(k);
        }
        if (k < 0.0 || (us < 0.013 && v > us))
        {
            continue;
        }
        if (std::log(v) + std::log(invalpha) - std::log(a / (us * us) + b)
            <= -mu + k * loglam - std::lgamma(k + 1.0))
        {
            return static_cast<std::uint64_t>(k);
        }
    }
}

}  // namespace detail

namespace
{
using detail::GammaRatioTail;

constexpr std::size_t kStableTableSize = 1'000'001;
constexpr std::size_t kStableGuideBins = 4096;
constexpr std::size_t kSibuyaSequentialTrials = 64;

void require(bool ok, char const* message)
{
    if (!ok)
    {
        throw std::invalid_argument(message);
    }
}

void validate(law::Geometric const& g)
{
    require(g.p > 0.0 && g.p < 1.0, "geometric: p must lie in (0, 1)");
}
void validate(law::Poisson const& p)
{
    require(p.mu > 0.0 && std::isfinite(p.mu),
            "poisson: mu must be positive and finite");
}
void validate(law::BirthDeath const& bd)
{
    require(bd.a1 >= 0.0 && bd.a2 >= 0.0 && bd.a1 + bd.a2 > 0.0
                && std::isfinite(bd.a1 + bd.a2),
            "birth_death: rates must be nonnegative with a1 + a2 > 0");
}
void validate(law::LogSupercritical const&) {}
void validate(law::StableCritical const& s)
{
    require(s.alpha > 1.0 && s.alpha < 2.0,
            "stable_critical: alpha must lie in (1, 2)");
}
void validate(law::NeveuHarmonic const&) {}
void validate(law::GeneralizedNeveu const& g)
{
    require(g.b > 0.0 && g.c >= 0.0 && g.b + g.c <= 1.0,
            "generalized_neveu: need b > 0, c >= 0, b + c <= 1");
}
void validate(law::LuriaDelbruck const& ld)
{
    require(ld.b > 0.0 && std::isfinite(ld.b),
            "luria_delbruck: b must be positive and finite");
}
void validate(law::Sibuya const& s)
{
    require(s.alpha > 0.0 && s.alpha < 1.0, "sibuya: alpha must lie in (0, 1)");
}
void validate(law::Custom const& c)
{
    require(static_cast<bool>(c.pgf), "custom: pgf evaluator is required");
    require(static_cast<bool>(c.sampler), "custom: sampler is required");
}

// 1 - w computed from log w = -y without cancellation.
inline double one_minus_exp_neg(double y)
{
    return -std::expm1(-y);
}

// y e^{-y} / (1 - e^{-y}), continuous at y = 0 with value 1.
inline double log_ratio(double y)
{
    if (y < 1e-12)
    {
        return 1.0 - 0.5 * y;
    }
    return y * std::exp(-y) / one_minus_exp_neg(y);
}

double custom_one_minus_pgf(law::Custom const& c, double w)
{
    if (c.one_minus_pgf)
    {
        return c.one_minus_pgf(w);
    }
    return 1.0 - c.pgf(1.0 - w);
}

// Effective 1 - s for a custom law without an accurate 1 - f evaluator:
// the argument actually passed to pgf is the rounded 1 - w.
double custom_effective_w(law::Custom const& c, double w)
{
    if (c.one_minus_pgf)
    {
        return w;
    }
    return 1.0 - (1.0 - w);
}

std::optional<double> custom_mean(law::Custom const& c)
{
    if (c.metadata.mean)
    {
        return c.metadata.mean;
    }
    if (!c.pmf.empty())
    {
        double m = 0.0;
        for (std::size_t k = 0; k < c.pmf.size(); ++k)
        {
            m += static_cast<double>(k) * c.pmf[k];
        }
        return m;
    }
    return std::nullopt;
}

std::optional<double> custom_factorial2(law::Custom const& c)
{
    if (c.metadata.factorial2)
    {
        return c.metadata.factorial2;
    }
    if (!c.pmf.empty())
    {
        double m = 0.0;
        for (std::size_t k = 2; k < c.pmf.size(); ++k)
        {
            auto const kd = static_cast<double>(k);
            m += kd * (kd - 1.0) * c.pmf[k];
        }
        return m;
    }
    return std::nullopt;
}

// Largest log-argument at which the custom L can be evaluated reliably.
double custom_log_limit(law::Custom const& c)
{
    return c.one_minus_pgf ? 700.0 : 18.0;
}

double p_one(OffspringSpec const& spec)
{
    return std::visit(
        [](auto const& law) -> double {
            using L = std::decay_t<decltype(law)>;
            if constexpr (std::is_same_v<L, law::Geometric>)
            {
                return law.p * (1.0 - law.p);
            }
            else if constexpr (std::is_same_v<L, law::Poisson>)
            {
                return law.mu * std::exp(-law.mu);
            }
            else if constexpr (std::is_same_v<L, law::GeneralizedNeveu>)
            {
                return 1.0 - law.b - law.c;
            }
            else if constexpr (std::is_same_v<L, law::LuriaDelbruck>)
            {
                // f'(0) = b e^{-b} / 2
                return 0.5 * law.b * std::exp(-law.b);
            }
            else if constexpr (std::is_same_v<L, law::Sibuya>)
            {
                return law.alpha;
            }
            else if constexpr (std::is_same_v<L, law::Custom>)
            {
                if (!law.pmf.empty())
                {
                    return law.pmf.size() > 1 ? law.pmf[1] : 0.0;
                }
                double const h = 1e-6;
                return (law.pgf(h) - law.pgf(0.0)) / h;
            }
            else
            {
                return 0.0;
            }
        },
        spec.law());
}

}  // namespace

//---------------------------------------------------------------------------//
// Custom
//---------------------------------------------------------------------------//
law::Custom law::Custom::from_pmf(std::vector<double> pmf)
{
    require(!pmf.empty(), "custom: pmf must be nonempty");
    double total = 0.0;
    for (double p : pmf)
    {
        require(p >= 0.0 && std::isfinite(p),
                "custom: pmf entries must be nonnegative");
        total += p;
    }
    require(std::fabs(total - 1.0) <= 1e-9, "custom: pmf must sum to 1");

    auto weights = std::make_shared<std::vector<double> const>(pmf);
    std::vector<double> cdf(pmf.size());
    std::partial_sum(pmf.begin(), pmf.end(), cdf.begin());
    auto cumulative = std::make_shared<std::vector<double> const>(std::move(cdf));

    Custom c;
    c.pmf = std::move(pmf);
    c.pgf = [weights](double s) {
        double acc = 0.0;
        for (auto it = weights->rbegin(); it != weights->rend(); ++it)
        {
            acc = acc * s + *it;
        }
        return acc;
    };
    c.one_minus_pgf = [weights](double w) {
        double const log_s = std::log1p(-w);
        double acc = 0.0;
        for (std::size_t k = 1; k < weights->size(); ++k)
        {
            acc += (*weights)[k] * -std::expm1(static_cast<double>(k) * log_s);
        }
        return acc;
    };
    c.sampler = [cumulative](RandomStream& rng) -> std::uint64_t {
        double const u = rng.uniform() * cumulative->back();
        auto const it
            = std::upper_bound(cumulative->begin(), cumulative->end(), u);
        auto const k = static_cast<std::uint64_t>(it - cumulative->begin());
        return std::min<std::uint64_t>(k, cumulative->size() - 1);
    };
    return c;
}

//---------------------------------------------------------------------------//
// OffspringSpec / ProcessParams
//---------------------------------------------------------------------------//
OffspringSpec::OffspringSpec(Law law) : law_(std::move(law))
{
    std::visit([](auto const& l) { validate(l); }, law_);
    if (auto const* s = std::get_if<law::StableCritical>(&law_))
    {
        double const scale = -1.0 / (s->alpha * std::tgamma(1.0 - s->alpha));
        heavy_tail_ = std::make_shared<GammaRatioTail const>(
            s->alpha,
            scale,
            (s->alpha - 1.0) / s->alpha,
            kStableTableSize,
            kStableGuideBins);
    }
    else if (auto const* sib = std::get_if<law::Sibuya>(&law_))
    {
        heavy_tail_ = std::make_shared<GammaRatioTail const>(
            sib->alpha,
            1.0 / std::tgamma(1.0 - sib->alpha),
            1.0,
            kSibuyaSequentialTrials,
            0);
    }
}

std::string OffspringSpec::family() const
{
    return std::visit(
        [](auto const& law) -> std::string {
            using L = std::decay_t<decltype(law)>;
            if constexpr (std::is_same_v<L, law::Geometric>)
                return "geometric";
            else if constexpr (std::is_same_v<L, law::Poisson>)
                return "poisson";
            else if constexpr (std::is_same_v<L, law::BirthDeath>)
                return "birth_death";
            else if constexpr (std::is_same_v<L, law::LogSupercritical>)
                return "log_supercritical";
            else if constexpr (std::is_same_v<L, law::StableCritical>)
                return "stable_critical";
            else if constexpr (std::is_same_v<L, law::NeveuHarmonic>)
                return "neveu";
            else if constexpr (std::is_same_v<L, law::GeneralizedNeveu>)
                return "generalized_neveu";
            else if constexpr (std::is_same_v<L, law::LuriaDelbruck>)
                return "luria_delbruck";
            else if constexpr (std::is_same_v<L, law::Sibuya>)
                return "sibuya";
            else
                return "custom";
        },
        law_);
}

ProcessParams::ProcessParams(double rate, OffspringSpec law)
    : a(rate), offspring(std::move(law))
{
    require(a > 0.0 && std::isfinite(a),
            "process: lifetime rate a must be positive and finite");
}

ProcessParams ProcessParams::birth_death(double a1, double a2)
{
    return ProcessParams(a1 + a2, OffspringSpec(law::BirthDeath{a1, a2}));
}

double ProcessParams::u(double s) const
{
    return a * (pgf_eval(offspring, s) - s);
}

//---------------------------------------------------------------------------//
// pgf and L
//---------------------------------------------------------------------------//
double pgf_eval(OffspringSpec const& spec, double s)
{
    if (!(s >= 0.0 && s <= 1.0))
    {
        throw std::domain_error("pgf_eval: s must lie in [0, 1]");
    }
    if (s == 1.0)
    {
        return 1.0;
    }
    return std::visit(
        [s](auto const& law) -> double {
            using L = std::decay_t<decltype(law)>;
            double const w = 1.0 - s;
            if constexpr (std::is_same_v<L, law::Geometric>)
            {
                return law.p / (1.0 - (1.0 - law.p) * s);
            }
            else if constexpr (std::is_same_v<L, law::Poisson>)
            {
                return std::exp(law.mu * (s - 1.0));
            }
            else if constexpr (std::is_same_v<L, law::BirthDeath>)
            {
                return (law.a2 + law.a1 * s * s) / (law.a1 + law.a2);
            }
            else if constexpr (std::is_same_v<L, law::LogSupercritical>)
            {
                if (s < 0.01)
                {
                    // p_k = 4 / ((k-1) k (k+1))
                    double acc = 0.0;
                    double power = s * s;
                    for (int k = 2; k < 16; ++k)
                    {
                        acc += 4.0 / ((k - 1.0) * k * (k + 1.0)) * power;
                        power *= s;
                    }
                    return acc;
                }
                return 2.0 * w * w * -std::log1p(-s) / s - 2.0 + 3.0 * s;
            }
            else if constexpr (std::is_same_v<L, law::StableCritical>)
            {
                return s + std::pow(w, law.alpha) / law.alpha;
            }
            else if constexpr (std::is_same_v<L, law::NeveuHarmonic>)
            {
                return s + w * std::log(w);
            }
            else if constexpr (std::is_same_v<L, law::GeneralizedNeveu>)
            {
                return s + w * (law.c + law.b * std::log(w));
            }
            else if constexpr (std::is_same_v<L, law::LuriaDelbruck>)
            {
                if (s == 0.0)
                {
                    return std::exp(-law.b);
                }
                return std::exp(law.b * w * std::log1p(-s) / s);
            }
            else if constexpr (std::is_same_v<L, law::Sibuya>)
            {
                return 1.0 - std::pow(w, law.alpha);
            }
            else
            {
                return law.pgf(s);
            }
        },
        spec.law());
}

double one_minus_pgf(OffspringSpec const& spec, double w)
{
    if (!(w >= 0.0 && w <= 1.0))
    {
        throw std::domain_error("one_minus_pgf: w must lie in [0, 1]");
    }
    if (w == 0.0)
    {
        return 0.0;
    }
    if (auto const* c = spec.get_if<law::Custom>())
    {
        return custom_one_minus_pgf(*c, w);
    }
    return w * slowly_varying_L_log(spec, -std::log(w));
}

double slowly_varying_L(OffspringSpec const& spec, double x)
{
    if (!(x >= 1.0))
    {
        throw std::domain_error("slowly_varying_L: x must be >= 1");
    }
    return slowly_varying_L_log(spec, std::log(x));
}

double slowly_varying_L_log(OffspringSpec const& spec, double y)
{
    if (!(y >= 0.0))
    {
        throw std::domain_error("slowly_varying_L_log: log x must be >= 0");
    }
    // w = 1/x = e^{-y}; L = (1 - f(1 - w)) / w
    double const w = std::exp(-y);
    return std::visit(
        [&](auto const& law) -> double {
            using L = std::decay_t<decltype(law)>;
            if constexpr (std::is_same_v<L, law::Geometric>)
            {
                double const q = 1.0 - law.p;
                return q / (law.p + q * w);
            }
            else if constexpr (std::is_same_v<L, law::Poisson>)
            {
                double const z = law.mu * w;
                if (z < 1e-8)
                {
                    return law.mu * (1.0 - 0.5 * z);
                }
                return -std::expm1(-z) / w;
            }
            else if constexpr (std::is_same_v<L, law::BirthDeath>)
            {
                return law.a1 * (2.0 - w) / (law.a1 + law.a2);
            }
            else if constexpr (std::is_same_v<L, law::LogSupercritical>)
            {
                // 1 - f = 3w - 2 w^2 y / (1 - w)
                return 3.0 - 2.0 * log_ratio(y);
            }
            else if constexpr (std::is_same_v<L, law::StableCritical>)
            {
                return 1.0 - std::exp((1.0 - law.alpha) * y) / law.alpha;
            }
            else if constexpr (std::is_same_v<L, law::NeveuHarmonic>)
            {
                return 1.0 + y;
            }
            else if constexpr (std::is_same_v<L, law::GeneralizedNeveu>)
            {
                return 1.0 - law.c + law.b * y;
            }
            else if constexpr (std::is_same_v<L, law::LuriaDelbruck>)
            {
                // 1 - f(1 - w) = 1 - exp(-b y w / (1 - w))
                if (w == 0.0)
                {
                    return law.b * y;
                }
                double const expo = law.b * log_ratio(y);
                return -std::expm1(-expo) / w;
            }
            else if constexpr (std::is_same_v<L, law::Sibuya>)
            {
                return std::exp((1.0 - law.alpha) * y);
            }
            else
            {
                if (w == 0.0)
                {
                    auto const m = custom_mean(law);
                    if (m)
                    {
                        return *m;
                    }
                    throw std::domain_error(
                        "slowly_varying_L: argument beyond custom law range");
                }
                return custom_one_minus_pgf(law, w)
                       / custom_effective_w(law, w);
            }
        },
        spec.law());
}

std::uint64_t sample_offspring(OffspringSpec const& spec, RandomStream& rng)
{
    return detail::with_sampler(spec, [&](auto const& sampler) {
        return sampler(rng);
    });
}

//---------------------------------------------------------------------------//
// Moments
//---------------------------------------------------------------------------//
MomentProfile moment_profile(ProcessParams const& params)
{
    double mean = kInf;
    double factorial2 = kInf;
    bool approximate = false;
    std::visit(
        [&](auto const& law) {
            using L = std::decay_t<decltype(law)>;
            if constexpr (std::is_same_v<L, law::Geometric>)
            {
                double const r = (1.0 - law.p) / law.p;
                mean = r;
                factorial2 = 2.0 * r * r;
            }
            else if constexpr (std::is_same_v<L, law::Poisson>)
            {
                mean = law.mu;
                factorial2 = law.mu * law.mu;
            }
            else if constexpr (std::is_same_v<L, law::BirthDeath>)
            {
                mean = 2.0 * law.a1 / (law.a1 + law.a2);
                factorial2 = mean;
            }
            else if constexpr (std::is_same_v<L, law::LogSupercritical>)
            {
                mean = 3.0;
            }
            else if constexpr (std::is_same_v<L, law::StableCritical>)
            {
                mean = 1.0;
            }
            else if constexpr (std::is_same_v<L, law::Custom>)
            {
                auto const m = custom_mean(law);
                auto const f2 = custom_factorial2(law);
                if (m)
                {
                    mean = *m;
                }
                if (f2)
                {
                    factorial2 = *f2;
                }
                if (!m || !f2)
                {
                    approximate = true;
                    // L(x) -> m and x (m - L(x)) -> E xi(xi-1) / 2.
                    double const y_hi = std::min(custom_log_limit(law), 14.0);
                    double const l_hi = slowly_varying_L_log(params.offspring, y_hi);
                    double const l_lo
                        = slowly_varying_L_log(params.offspring, y_hi - 2.0);
                    if (!m)
                    {
                        mean = (l_hi - l_lo) > 1e-6 * l_hi ? kInf : l_hi;
                    }
                    if (!f2)
                    {
                        if (std::isfinite(mean))
                        {
                            double const y_mid = 0.5 * y_hi;
                            double const lam
                                = std::exp(y_mid)
                                  * (mean
                                     - slowly_varying_L_log(params.offspring,
                                                            y_mid));
                            factorial2 = 2.0 * lam;
                        }
                    }
                }
            }
        },
        params.offspring.law());

    MomentProfile out;
    out.mean_m = mean;
    out.lambda = std::isfinite(mean) ? params.a * (mean - 1.0) : kInf;
    out.tau2 = params.a * factorial2;
    out.second_moment_finite = std::isfinite(factorial2);
    out.approximate = approximate;
    return out;
}

//---------------------------------------------------------------------------//
// Tail constants
//---------------------------------------------------------------------------//
namespace
{
// Three-point Aitken/Richardson step on the tail of a sequence.
double accelerate(double s0, double s1, double s2)
{
    double const d1 = s1 - s0;
    double const d2 = s2 - s1;
    double const denom = d2 - d1;
    if (std::fabs(denom) < 1e-14 * std::max(1.0, std::fabs(s2))
        || d1 * d2 <= 0.0)
    {
        return s2;
    }
    return s2 - d2 * d2 / denom;
}

TailConstants numeric_tail_constants(OffspringSpec const& spec,
                                     law::Custom const& c)
{
    double const ln10 = std::numbers::ln10;
    int const k_max = c.one_minus_pgf ? 12 : 8;
    std::vector<double> values;
    for (int k = 2; k <= k_max; ++k)
    {
        values.push_back(slowly_varying_L_log(spec, k * ln10));
    }
    std::vector<double> slopes;
    for (std::size_t i = 0; i + 1 < values.size(); ++i)
    {
        slopes.push_back((values[i + 1] - values[i]) / ln10);
    }
    auto const n = slopes.size();
    TailConstants out{0.0, std::nullopt, TailProvenance::numeric_extrapolation};

    // Geometric growth of the slopes means L is regularly varying with a
    // positive index: the explosive side of the boundary.
    bool growing = true;
    for (std::size_t i = n - 3; i + 1 < n; ++i)
    {
        growing = growing && slopes[i] > 0.0 && slopes[i + 1] > 1.5 * slopes[i];
    }
    if (growing)
    {
        out.A = kInf;
        out.uncertainty = kInf;
        return out;
    }
    double const a_est = accelerate(slopes[n - 3], slopes[n - 2], slopes[n - 1]);
    out.uncertainty = std::fabs(slopes[n - 1] - slopes[n - 2])
                      + std::fabs(a_est - slopes[n - 1]);
    if (std::fabs(a_est) <= std::max(1e-6, out.uncertainty))
    {
        out.A = 0.0;
        return out;
    }
    out.A = a_est;
    std::vector<double> offsets;
    for (std::size_t i = 0; i < values.size(); ++i)
    {
        offsets.push_back(values[i] - a_est * (static_cast<double>(i) + 2.0) * ln10);
    }
    auto const m = offsets.size();
    out.B = accelerate(offsets[m - 3], offsets[m - 2], offsets[m - 1]);
    out.uncertainty += std::fabs(offsets[m - 1] - offsets[m - 2]);
    return out;
}
}  // namespace

TailConstants tail_constants(OffspringSpec const& spec)
{
    return std::visit(
        [&](auto const& law) -> TailConstants {
            using L = std::decay_t<decltype(law)>;
            if constexpr (std::is_same_v<L, law::NeveuHarmonic>)
            {
                return {1.0, 1.0, TailProvenance::closed_form};
            }
            else if constexpr (std::is_same_v<L, law::GeneralizedNeveu>)
            {
                return {law.b, 1.0 - law.c, TailProvenance::closed_form};
            }
            else if constexpr (std::is_same_v<L, law::LuriaDelbruck>)
            {
                return {law.b, 0.0, TailProvenance::closed_form};
            }
            else if constexpr (std::is_same_v<L, law::Sibuya>)
            {
                return {kInf, std::nullopt, TailProvenance::closed_form};
            }
            else if constexpr (std::is_same_v<L, law::Custom>)
            {
                if (law.metadata.tail_A)
                {
                    return {*law.metadata.tail_A,
                            law.metadata.tail_B,
                            TailProvenance::closed_form};
                }
                auto const m = custom_mean(law);
                if (m && std::isfinite(*m))
                {
                    throw std::invalid_argument(
                        "tail_constants: law has a finite mean");
                }
                return numeric_tail_constants(spec, law);
            }
            else
            {
                throw std::invalid_argument(
                    "tail_constants: law has a finite mean");
            }
        },
        spec.law());
}

//---------------------------------------------------------------------------//
// Extinction and explosion
//---------------------------------------------------------------------------//
double extinction_probability(ProcessParams const& params)
{
    auto const& spec = params.offspring;
    double const p0 = pgf_eval(spec, 0.0);
    if (p0 == 0.0)
    {
        return 0.0;
    }
    auto const moments = moment_profile(params);
    if (moments.mean_m <= 1.0 && p_one(spec) < 1.0)
    {
        return 1.0;
    }
    // g(s) = f(s) - s; g(0) = p0 > 0 and g < 0 just below 1 when m > 1.
    auto const g = [&](double s) {
        if (s > 0.5)
        {
            double const w = 1.0 - s;
            return w - one_minus_pgf(spec, w);
        }
        return pgf_eval(spec, s) - s;
    };
    double hi = 0.5;
    while (g(hi) >= 0.0)
    {
        hi = 0.5 * (hi + 1.0);
        if (1.0 - hi < 1e-15)
        {
            return 1.0;
        }
    }
    double lo = 0.0;
    while (hi - lo > 1e-12)
    {
        double const mid = 0.5 * (lo + hi);
        (g(mid) > 0.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

ExplosionVerdict check_non_explosion(ProcessParams const& params)
{
    auto const& spec = params.offspring;
    auto const* custom = spec.get_if<law::Custom>();
    if (!custom)
    {
        return spec.get_if<law::Sibuya>() ? ExplosionVerdict::explosive
                                          : ExplosionVerdict::non_explosive;
    }
    if (custom->metadata.explosive)
    {
        return *custom->metadata.explosive ? ExplosionVerdict::explosive
                                           : ExplosionVerdict::non_explosive;
    }
    if (auto m = custom_mean(*custom); m && std::isfinite(*m))
    {
        return ExplosionVerdict::non_explosive;
    }
    // Explosion iff the integral of dy / (L(e^y) - 1) converges. Compare
    // the contributions of the last three doublings of y: for an integrand
    // behaving like y^-p their ratio is 2^(1-p), and p <= 1 diverges.
    double const y_max = custom_log_limit(*custom);
    auto const integrand = [&](double y) {
        double const l = slowly_varying_L_log(spec, y);
        return l > 1.0 ? 1.0 / (l - 1.0) : 1e300;
    };
    using Quad = boost::math::quadrature::gauss_kronrod<double, 31>;
    double chunk[3];
    for (int i = 0; i < 3; ++i)
    {
        double const lo = y_max / std::pow(2.0, 3 - i);
        chunk[i] = Quad::integrate(integrand, lo, 2.0 * lo, 5, 1e-10);
    }
    double const r1 = chunk[1] / chunk[0];
    double const r2 = chunk[2] / chunk[1];
    if (r1 >= 0.97 && r2 >= 0.97)
    {
        return ExplosionVerdict::non_explosive;
    }
    if (r1 <= 0.9 && r2 <= 0.9)
    {
        return ExplosionVerdict::explosive;
    }
    return ExplosionVerdict::inconclusive;
}

char const* to_string(ExplosionVerdict verdict)
{
    switch (verdict)
    {
        case ExplosionVerdict::non_explosive:
            return "non_explosive";
        case ExplosionVerdict::explosive:
            return "explosive";
        case ExplosionVerdict::inconclusive:
            return "inconclusive";
    }
    return "?";
}

//---------------------------------------------------------------------------//
// Finite-mean regular variation
//---------------------------------------------------------------------------//
std::optional<double> regular_variation_index(OffspringSpec const& spec)
{
    return std::visit(
        [](auto const& law) -> std::optional<double> {
            using L = std::decay_t<decltype(law)>;
            if constexpr (std::is_same_v<L, law::StableCritical>)
            {
                return law.alpha;
            }
            else if constexpr (std::is_same_v<L, law::Geometric>
                               || std::is_same_v<L, law::Poisson>
                               || std::is_same_v<L, law::BirthDeath>
                               || std::is_same_v<L, law::LogSupercritical>)
            {
                return 2.0;
            }
            else if constexpr (std::is_same_v<L, law::Custom>)
            {
                auto const f2 = custom_factorial2(law);
                if (f2 && std::isfinite(*f2))
                {
                    return 2.0;
                }
                return std::nullopt;
            }
            else
            {
                return std::nullopt;
            }
        },
        spec.law());
}

double regular_variation_L(OffspringSpec const& spec, double x)
{
    if (!(x >= 1.0))
    {
        throw std::domain_error("regular_variation_L: x must be >= 1");
    }
    return std::visit(
        [&](auto const& law) -> double {
            using L = std::decay_t<decltype(law)>;
            if constexpr (std::is_same_v<L, law::StableCritical>)
            {
                return 1.0 / law.alpha;
            }
            else if constexpr (std::is_same_v<L, law::LogSupercritical>)
            {
                return 2.0 * log_ratio(std::log(x)) * x;
            }
            else if constexpr (std::is_same_v<L, law::Geometric>)
            {
                double const q = 1.0 - law.p;
                return q * q / (law.p * (law.p + q / x));
            }
            else if constexpr (std::is_same_v<L, law::Poisson>)
            {
                double const z = law.mu / x;
                if (z < 1e-3)
                {
                    return law.mu * law.mu
                           * (0.5 - z / 6.0 + z * z / 24.0 - z * z * z / 120.0);
                }
                return x * x * (z + std::expm1(-z));
            }
            else if constexpr (std::is_same_v<L, law::BirthDeath>)
            {
                return law.a1 / (law.a1 + law.a2);
            }
            else if constexpr (std::is_same_v<L, law::Custom>)
            {
                auto const m = custom_mean(law);
                if (!m || !std::isfinite(*m))
                {
                    throw std::invalid_argument(
                        "regular_variation_L: law has no finite mean");
                }
                return x * (*m - slowly_varying_L(spec, x));
            }
            else
            {
                throw std::invalid_argument(
                    "regular_variation_L: law has an infinite mean");
            }
        },
        spec.law());
}

}  // namespace branchlab
