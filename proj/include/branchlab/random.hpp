#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace branchlab
{

//---------------------------------------------------------------------------//
/*!
 * Philox4x32-10 counter-based block function.
 *
 * Maps a 128-bit counter and a 64-bit key to 128 pseudorandom bits. There is
 * no internal state, so any block of any stream can be computed directly.
 */
struct Philox4x32
{
    using Counter = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;

    static Counter generate(Counter ctr, Key key)
    {
        constexpr std::uint32_t weyl_a = 0x9E3779B9u;
        constexpr std::uint32_t weyl_b = 0xBB67AE85u;
        constexpr std::uint64_t mul_a = 0xD2511F53u;
        constexpr std::uint64_t mul_b = 0xCD9E8D57u;
        for (int round = 0; round < 10; ++round)
        {
            std::uint64_t const p0 = mul_a * ctr[0];
            std::uint64_t const p1 = mul_b * ctr[2];
            ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0],
                   static_cast<std::uint32_t>(p1),
                   static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1],
                   static_cast<std::uint32_t>(p0)};
            key[0] += weyl_a;
            key[1] += weyl_b;
        }
        return ctr;
    }
};

// SplitMix64 finalizer, used to whiten seeds and tags.
std::uint64_t mix64(std::uint64_t x);

// Derive an independent stream key from a user seed and a purpose tag.
std::uint64_t derive_key(std::uint64_t seed, std::uint64_t tag);

//---------------------------------------------------------------------------//
/*!
 * Random stream identified by (key, stream index).
 *
 * The Philox counter is laid out as (block_lo, block_hi, stream_lo,
 * stream_hi), so two streams with different indices never share a block.
 * Replicate r of an ensemble uses stream index r, which makes the output
 * independent of how replicates are scheduled onto threads.
 */
class RandomStream
{
  public:
    RandomStream(std::uint64_t key, std::uint64_t stream);

    std::uint64_t next_u64()
    {
        if (available_ == 0)
        {
            refill();
        }
        return buffer_[2 - available_--];
    }

    // Uniform on the open interval (0, 1); never returns 0 or 1.
    double uniform()
    {
        // 53 random bits centred in their cell: (k + 0.5) / 2^53.
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    double exponential() { return -std::log(uniform()); }

    // Standard normal via Box-Muller; the second variate is cached.
    double normal();

    std::uint64_t key() const { return key_; }
    std::uint64_t stream() const { return stream_; }

  private:
    void refill();

    std::uint64_t key_;
    std::uint64_t stream_;
    std::uint64_t block_ = 0;
    std::array<std::uint64_t, 2> buffer_{};
    int available_ = 0;
    double spare_normal_ = 0.0;
    bool has_spare_ = false;
};

// Tags for derive_key so that each consumer of a seed draws from its own key.
namespace stream_tag
{
inline constexpr std::uint64_t ensemble = 0x656e73656d626c65ull;
inline constexpr std::uint64_t limit = 0x6c696d6974000000ull;
inline constexpr std::uint64_t covariance = 0x636f766172000000ull;
inline constexpr std::uint64_t explosion = 0x6578706c6f736500ull;
inline constexpr std::uint64_t self_test = 0x73656c6674657374ull;
inline constexpr std::uint64_t marginal = 0x6d617267696e616cull;
}  // namespace stream_tag

}  // namespace branchlab
