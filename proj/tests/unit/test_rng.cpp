#include <gtest/gtest.h>

#include "xrl/rng.hpp"

using xrl::CounterRng;

namespace {

// Reference SplitMix64 sequence: state += golden; z = mix(state).
std::uint64_t splitmix_nth(std::uint64_t state, int n) {
    std::uint64_t z = 0;
    for (int i = 0; i < n; ++i) {
        state += 0x9E3779B97F4A7C15ULL;
        z = state;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        z ^= z >> 31;
    }
    return z;
}

}  // namespace

TEST(CounterRng, MatchesSequentialSplitMix) {
    CounterRng rng(42, 7);
    const std::uint64_t key = 42 ^ CounterRng::mix64(7 + 0x632BE59BD9B4E019ULL);
    for (int i = 1; i <= 100; ++i) EXPECT_EQ(rng.next_u64(), splitmix_nth(key, i));
}

TEST(CounterRng, StreamsAreIndependent) {
    CounterRng a(0, CounterRng::kEnvReset);
    CounterRng b(0, CounterRng::kExploration);
    int equal = 0;
    for (int i = 0; i < 1000; ++i) equal += a.next_u64() == b.next_u64();
    EXPECT_EQ(equal, 0);
}

TEST(CounterRng, UniformRange) {
    CounterRng rng(3, 1);
    double sum = 0.0;
    for (int i = 0; i < 100000; ++i) {
        const double u = rng.uniform();
        ASSERT_GE(u, 0.0);
        ASSERT_LT(u, 1.0);
        sum += u;
    }
    EXPECT_NEAR(sum / 100000, 0.5, 0.01);
    for (int i = 0; i < 1000; ++i) {
        const double v = rng.uniform(-0.6, -0.4);
        ASSERT_GE(v, -0.6);
        ASSERT_LT(v, -0.4);
    }
}

TEST(CounterRng, BelowIsUnbiasedEnough) {
    CounterRng rng(9, 2);
    std::vector<int> hist(3, 0);
    for (int i = 0; i < 30000; ++i) ++hist[rng.below(3)];
    for (int h : hist) EXPECT_NEAR(h, 10000, 400);
    EXPECT_EQ(rng.below(1), 0u);
}
