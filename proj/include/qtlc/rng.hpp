// rng.hpp — deterministic seeded random number generator.
//
// The generator is splitmix64, fixed here by its update equations so that a
// seed reproduces the same stream on every platform:
//
//     state += 0x9E3779B97F4A7C15
//     z = state
//     z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
//     z = (z ^ (z >> 27)) * 0x94D049BB133111EB
//     output = z ^ (z >> 31)
//
// Uniform doubles take the top 53 bits of the output. Gaussian variates use
// Box-Muller on two uniforms; their exact bits depend on libm's log/cos/sin,
// so gaussians are bit-stable per platform while the integer and uniform
// streams are bit-stable everywhere.

#pragma once

#include <cstdint>
#include <cmath>

namespace qtlc {

class SeededRng {
public:
    explicit SeededRng(std::uint64_t seed) : seed_(seed), state_(seed) {}

    std::uint64_t seed() const noexcept { return seed_; }

    std::uint64_t next_u64() noexcept {
        state_ += 0x9E3779B97F4A7C15ULL;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    /// Uniform in [0, 1).
    double next_double() noexcept {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    /// Uniform integer in [0, bound). bound must be nonzero.
    std::uint64_t next_below(std::uint64_t bound) noexcept {
        // Rejection-free modulo; bias is irrelevant at the bounds used here
        // (all far below 2^64) and keeps the stream consumption fixed.
        return next_u64() % bound;
    }

    /// Standard normal via Box-Muller, with the spare variate cached.
    double next_normal() noexcept {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double u1 = 1.0 - next_double();  // (0, 1], keeps log finite
        const double u2 = next_double();
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * 3.14159265358979323846 * u2;
        spare_ = radius * std::sin(theta);
        has_spare_ = true;
        return radius * std::cos(theta);
    }

    double next_normal(double mean, double stddev) noexcept {
        return mean + stddev * next_normal();
    }

private:
    std::uint64_t seed_;
    std::uint64_t state_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace qtlc
