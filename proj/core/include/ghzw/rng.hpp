#pragma once

#include <cstdint>

namespace ghzw {

/// Counter-based random stream. Each (seed, stream, shot) triple yields an
/// independent deterministic sequence, so shots can be distributed over any
/// number of threads and still reproduce bit-identical results.
///
/// The generator is splitmix64 applied to a per-shot key; splitmix64's
/// finalizer is a full-avalanche mix, which is what makes keying by counter
/// sound.
class ShotRng {
  public:
    ShotRng(std::uint64_t seed, std::uint64_t stream, std::uint64_t shot) {
        state_ = mix(mix(seed ^ 0x9e3779b97f4a7c15ull) ^ stream);
        state_ = mix(state_ ^ shot);
    }

    std::uint64_t next_u64() {
        state_ += 0x9e3779b97f4a7c15ull;
        return mix(state_);
    }

    /// Uniform double in [0, 1).
    double uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

  private:
    static std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    std::uint64_t state_ = 0;
};

} // namespace ghzw
