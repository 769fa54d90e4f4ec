#pragma once

#include <cstdint>
#include <vector>

#include "core/real.h"

namespace canonify {

// Counter-keyed splitmix64 stream. Streams derived from distinct key tuples
// are statistically independent, so per-sample generators keyed by
// (seed, epoch, batch, index) make parallel and serial data generation
// bit-identical.
class RngStream {
public:
    explicit RngStream(std::uint64_t seed, std::uint64_t k1 = 0, std::uint64_t k2 = 0,
                       std::uint64_t k3 = 0) {
        state_ = mix(seed + 0x9E3779B97F4A7C15ull);
        state_ = mix(state_ ^ (k1 + 0xBF58476D1CE4E5B9ull));
        state_ = mix(state_ ^ (k2 + 0x94D049BB133111EBull));
        state_ = mix(state_ ^ (k3 + 0xD6E8FEB86659FD93ull));
    }

    std::uint64_t next_u64() {
        state_ += 0x9E3779B97F4A7C15ull;
        return mix(state_);
    }

    // Uniform in [0, 1), using 24 (f32) or 53 (f64) mantissa bits.
    real uniform() {
        if constexpr (kRealIsDouble) {
            return static_cast<real>(next_u64() >> 11) * static_cast<real>(0x1.0p-53);
        } else {
            return static_cast<real>(next_u64() >> 40) * static_cast<real>(0x1.0p-24);
        }
    }

    real uniform(real lo, real hi) { return lo + (hi - lo) * uniform(); }

    // Box-Muller; the paired value is cached.
    real normal();

    // Uniform integer in [0, n). Modulo bias is negligible for n << 2^64.
    std::uint64_t uniform_index(std::uint64_t n) { return n == 0 ? 0 : next_u64() % n; }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            const std::size_t j = static_cast<std::size_t>(uniform_index(i));
            std::swap(v[i - 1], v[j]);
        }
    }

    static std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

private:
    std::uint64_t state_ = 0;
    bool has_cached_ = false;
    real cached_ = 0;
};

}  // namespace canonify
