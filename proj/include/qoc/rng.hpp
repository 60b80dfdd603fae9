#pragma once

#include <cmath>
#include <cstdint>

namespace qoc {

/// SplitMix64 counter generator (Steele/Lea/Vigna mixing constants).
/// Contract, so runs are reproducible across implementations:
///   state <- state + 0x9E3779B97F4A7C15
///   z = state; z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9;
///   z = (z ^ (z >> 27)) * 0x94D049BB133111EB; output z ^ (z >> 31)
/// First three outputs for seed 0:
///   0xE220A8397B1DCDAF, 0x6E789E6AA1B965F4, 0x06C45D188009454F
/// uniform01() maps the top 53 bits onto [0,1).
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        state_ += 0x9E3779B97F4A7C15ULL;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    double uniform_in(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    /// Standard normal via Box-Muller; consumes two outputs per call.
    double normal() {
        double u1 = uniform01();
        const double u2 = uniform01();
        if (u1 <= 0.0) u1 = 0x1.0p-53;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586477 * u2);
    }

    /// Independent child stream, seeded from this stream's next output.
    SplitMix64 split() { return SplitMix64(next()); }

private:
    std::uint64_t state_;
};

}  // namespace qoc
