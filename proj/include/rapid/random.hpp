#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace rapid {

/// Seeded random stream: std::mt19937_64 keyed by (seed, stream id) through
/// std::seed_seq, so independent streams (matrix, targets, shuffles) never
/// perturb one another. Uniform and normal transforms are written out here
/// because the standard distributions are implementation-defined and would
/// break cross-toolchain reproducibility.
class RandomStream {
public:
    enum Id : std::uint64_t { Matrix = 1, Targets = 2, Planted = 3, Shuffle = 4, Noise = 5, Test = 100 };

    RandomStream(std::uint64_t seed, std::uint64_t stream) {
        std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                          static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
        engine_.seed(seq);
    }

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform on [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, n). n must be positive.
    std::uint64_t below(std::uint64_t n) {
        // rejection keeps the draw unbiased
        const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
        std::uint64_t r;
        do r = engine_(); while (r >= limit);
        return r % n;
    }

    /// Standard normal via Box-Muller (cosine branch only).
    double normal() {
        const double u1 = 1.0 - uniform();  // (0, 1]
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

private:
    std::mt19937_64 engine_;
};

} // namespace rapid
