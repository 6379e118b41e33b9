#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

#include "thermix/types.hpp"

namespace thermix {

// SplitMix64 stream. Streams derived from (master seed, stream id) are
// independent of scheduling order, which keeps multi-walker runs bit-identical
// for a fixed seed no matter how walkers are distributed over threads.
class RngStream {
  public:
    explicit RngStream(std::uint64_t seed) : state_(seed) {}

    static RngStream derive(std::uint64_t master, std::uint64_t stream_id) {
        return RngStream(mix(master ^ mix(stream_id + 0x715DE1B0CB9A4C71ull)));
    }

    std::uint64_t next_u64() {
        state_ += 0x9E3779B97F4A7C15ull;
        return mix(state_);
    }

    // Uniform in [0,1), 53-bit resolution.
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform in {0,...,m-1} by rejection, exact for any m.
    std::uint64_t next_below(std::uint64_t m) {
        const std::uint64_t lim = UINT64_MAX - UINT64_MAX % m;
        std::uint64_t v;
        do {
            v = next_u64();
        } while (v >= lim);
        return v % m;
    }

    double next_normal() {
        double u = 0.0;
        while (u == 0.0) u = next_double();
        const double v = next_double();
        return std::sqrt(-2.0 * std::log(u)) * std::cos(2.0 * std::numbers::pi * v);
    }

    cxd next_complex_normal() { return cxd(next_normal(), next_normal()); }

  private:
    static std::uint64_t mix(std::uint64_t z) {
        z += 0x9E3779B97F4A7C15ull;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    std::uint64_t state_;
};

}  // namespace thermix
