#include "branchlab/random.hpp"

#include <cmath>
#include <numbers>

namespace branchlab
{
std::uint64_t mix64(std::uint64_t z)
{
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

std::uint64_t derive_key(std::uint64_t seed, std::uint64_t tag)
{
    return mix64(mix64(seed) ^ tag);
}

RandomStream::RandomStream(std::uint64_t key, std::uint64_t stream)
    : key_(key), stream_(stream)
{
}

void RandomStream::refill()
{
    Philox4x32::Counter const ctr{static_cast<std::uint32_t>(block_),
                                  static_cast<std::uint32_t>(block_ >> 32),
                                  static_cast<std::uint32_t>(stream_),
                                  static_cast<std::uint32_t>(stream_ >> 32)};
    Philox4x32::Key const key{static_cast<std::uint32_t>(key_),
                              static_cast<std::uint32_t>(key_ >> 32)};
    auto const out = Philox4x32::generate(ctr, key);
    buffer_[0] = (static_cast<std::uint64_t>(out[1]) << 32) | out[0];
    buffer_[1] = (static_cast<std::uint64_t>(out[3]) << 32) | out[2];
    ++block_;
    available_ = 2;
}

double RandomStream::normal()
{
    if (has_spare_)
    {
        has_spare_ = false;
        return spare_normal_;
    }
    double const radius = std::sqrt(-2.0 * std::log(uniform()));
    double const angle = 2.0 * std::numbers::pi * uniform();
    spare_normal_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
}

}  // namespace branchlab
