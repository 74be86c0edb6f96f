#pragma once

#include <cstdint>

namespace xrl {

/// SplitMix64 in counter form.
///
/// The i-th draw (i = 0, 1, ...) of a generator created with (seed, stream) is
///
///     key   = mix64(seed ^ mix64(stream + 0x632BE59BD9B4E019))
///     draw  = mix64(key + (i + 1) * 0x9E3779B97F4A7C15)
///
/// where mix64 is the SplitMix64 finalizer (shift 30/27/31 with multipliers
/// 0xBF58476D1CE4E5B9 and 0x94D049BB133111EB). Uniform doubles take the top
/// 53 bits: (draw >> 11) * 2^-53, giving a value in [0, 1).
///
/// Everything stochastic in the toolkit draws from this generator, with one
/// stream constant per consumer, so results reproduce exactly across
/// platforms and languages.
class CounterRng {
public:
    /// Stream constants of the built-in consumers.
    enum Stream : std::uint64_t {
        kEnvReset = 1,
        kExploration = 2,
        kKMeansInit = 3,
        kTrainingSeeds = 4,
    };

    CounterRng(std::uint64_t seed, std::uint64_t stream) noexcept
        : key_(seed ^ mix64(stream + 0x632BE59BD9B4E019ULL)) {}

    static constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    std::uint64_t next_u64() noexcept {
        ++counter_;
        return mix64(key_ + counter_ * 0x9E3779B97F4A7C15ULL);
    }

    /// Uniform in [0, 1).
    double uniform() noexcept {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    /// Uniform in [lo, hi).
    double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, n). Uses rejection to avoid modulo bias.
    std::uint64_t below(std::uint64_t n) noexcept {
        if (n <= 1) return 0;
        const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
        std::uint64_t x = next_u64();
        while (x >= limit) x = next_u64();
        return x % n;
    }

    std::uint64_t draws() const noexcept { return counter_; }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

}  // namespace xrl
