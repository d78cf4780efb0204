#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "branchlab/offspring.hpp"
#include "branchlab/random.hpp"

namespace branchlab::detail
{

//---------------------------------------------------------------------------//
/*!
 * Tail P(xi > k) = scale * Gamma(k + 1 - index) / Gamma(k + 1) for k >= 1,
 * with P(xi > 0) = tail0.
 *
 * Covers the StableCritical law (index alpha in (1,2)) and the Sibuya law
 * (index alpha in (0,1)). Values up to `table_size` are tabulated by the
 * product recurrence T(k) = T(k-1) (k - index) / k; beyond the table the
 * tail is evaluated from the gamma ratio and inverted by local search around
 * the asymptotic root of scale * k^(-index) = u.
 */
class GammaRatioTail
{
  public:
    GammaRatioTail(double index,
                   double scale,
                   double tail0,
                   std::size_t table_size,
                   std::size_t guide_bins);

    double tail(std::uint64_t k) const;

    // Smallest k with tail(k) < u, for u in (0, 1).
    std::uint64_t invert(double u) const;

    std::size_t table_size() const { return table_.size(); }

  private:
    std::uint64_t invert_beyond_table(double u) const;

    double index_;
    double scale_;
    std::vector<double> table_;          // tail(0 .. K)
    std::vector<std::uint32_t> guide_;  // guide_[j]: first k with tail < (j+1)/M
};

//---------------------------------------------------------------------------//
// Per-law draws by inversion of P(xi > k) against one uniform.
//---------------------------------------------------------------------------//

inline std::uint64_t saturating_floor(double x)
{
    if (!(x < static_cast<double>(kSaturatedDraw)))
    {
        return kSaturatedDraw;
    }
    return static_cast<std::uint64_t>(x);
}

inline std::uint64_t draw(law::Geometric const& g, RandomStream& rng)
{
    // P(xi >= k) = q^k
    return saturating_floor(std::log(rng.uniform()) / std::log1p(-g.p));
}

std::uint64_t draw_poisson(double mu, RandomStream& rng);

inline std::uint64_t draw(law::Poisson const& p, RandomStream& rng)
{
    return draw_poisson(p.mu, rng);
}

inline std::uint64_t draw(law::BirthDeath const& bd, RandomStream& rng)
{
    return rng.uniform() * (bd.a1 + bd.a2) < bd.a2 ? 0 : 2;
}

inline std::uint64_t draw(law::LogSupercritical const&, RandomStream& rng)
{
    // P(xi > k) = 2 / (k (k+1)); smallest k with k (k+1) > 2/u
    double const r = 2.0 / rng.uniform();
    double k = std::floor(0.5 * (std::sqrt(1.0 + 4.0 * r) - 1.0)) + 1.0;
    if (!(k < static_cast<double>(kSaturatedDraw)))
    {
        return kSaturatedDraw;
    }
    while (k * (k + 1.0) <= r)
    {
        k += 1.0;
    }
    while (k > 2.0 && (k - 1.0) * k > r)
    {
        k -= 1.0;
    }
    return static_cast<std::uint64_t>(k);
}

inline std::uint64_t draw(law::NeveuHarmonic const&, RandomStream& rng)
{
    // P(xi >= k) = 1 / (k - 1)
    return 1 + saturating_floor(1.0 / rng.uniform());
}

inline std::uint64_t draw(law::GeneralizedNeveu const& g, RandomStream& rng)
{
    // P(xi > 0) = 1 - c, P(xi > k) = b / k for k >= 1
    double const u = rng.uniform();
    if (1.0 - g.c < u)
    {
        return 0;
    }
    if (g.b < u)
    {
        return 1;
    }
    return 1 + saturating_floor(g.b / u);
}

inline std::uint64_t draw(law::LuriaDelbruck const& ld, RandomStream& rng)
{
    // Compound Poisson: Poisson(b) clones, each of size Y with
    // P(Y >= j) = 1 / j, since f(s) = exp(b (h(s) - 1)) with
    // h(s) = sum_j s^j / (j (j+1)).
    std::uint64_t const clones = draw_poisson(ld.b, rng);
    std::uint64_t total = 0;
    for (std::uint64_t i = 0; i < clones; ++i)
    {
        total += saturating_floor(1.0 / rng.uniform());
        if (total >= kSaturatedDraw)
        {
            return kSaturatedDraw;
        }
    }
    return total;
}

inline std::uint64_t
draw(law::StableCritical const&, GammaRatioTail const& tail, RandomStream& rng)
{
    return tail.invert(rng.uniform());
}

inline std::uint64_t
draw(law::Sibuya const&, GammaRatioTail const& tail, RandomStream& rng)
{
    return tail.invert(rng.uniform());
}

inline std::uint64_t draw(law::Custom const& c, RandomStream& rng)
{
    return c.sampler(rng);
}

/*!
 * Callable drawing from one law; built once per path so that the event
 * loop is monomorphic.
 */
template<class Law>
struct LawSampler
{
    Law const& law;
    std::uint64_t operator()(RandomStream& rng) const
    {
        return draw(law, rng);
    }
};

template<class Law>
struct TailSampler
{
    Law const& law;
    GammaRatioTail const& tail;
    std::uint64_t operator()(RandomStream& rng) const
    {
        return draw(law, tail, rng);
    }
};

// Invoke `fn` with a sampler object specialised for the law held by `spec`.
template<class Fn>
decltype(auto) with_sampler(OffspringSpec const& spec, Fn&& fn)
{
    return std::visit(
        [&](auto const& law) -> decltype(auto) {
            using L = std::decay_t<decltype(law)>;
            if constexpr (std::is_same_v<L, law::StableCritical>
                          || std::is_same_v<L, law::Sibuya>)
            {
                return fn(TailSampler<L>{law, *spec.heavy_tail()});
            }
            else
            {
                return fn(LawSampler<L>{law});
            }
        },
        spec.law());
}

}  // namespace branchlab::detail
