#include <gtest/gtest.h>

#include <algorithm>

#include "calmath/metrics.hpp"
#include "oracles.hpp"

namespace calmath {
namespace {

TEST(Mse, SingleSample) {
  std::vector<ScoredSample> s{{0.5, true}};
  EXPECT_EQ(mse(s), 0.25);
  s[0].correct = false;
  EXPECT_EQ(mse(s), 0.25);
  s = {{1.0, true}, {0.0, false}};
  EXPECT_EQ(mse(s), 0.0);
}

TEST(Mse, RejectsBadInput) {
  std::vector<ScoredSample> none;
  EXPECT_THROW(mse(none), std::invalid_argument);
  std::vector<ScoredSample> bad{{1.2, true}};
  EXPECT_THROW(mse(bad), std::invalid_argument);
  std::vector<ScoredSample> three{{0.1, true}, {0.2, false}, {0.3, true}};
  EXPECT_THROW(mad(three, 4), std::invalid_argument);
  EXPECT_THROW(mad(three, 0), std::invalid_argument);
}

TEST(Mad, HandComputed) {
  // Sorted: 0.1(F) 0.2(T) | 0.6(F) 0.9(T); bins: conf .15 acc .5 ; conf .75 acc .5
  std::vector<ScoredSample> s{{0.9, true}, {0.1, false}, {0.6, false}, {0.2, true}};
  const auto r = mad(s, 2);
  EXPECT_NEAR(r.mad, (0.35 + 0.25) / 2, 1e-15);
  ASSERT_EQ(r.bins.bins.size(), 2u);
  EXPECT_EQ(r.bins.bins[0].size, 2u);
  EXPECT_NEAR(r.bins.bins[1].conf, 0.75, 1e-15);
}

TEST(Mad, UnequalBinsFollowFloorBoundaries) {
  // n = 5, k = 2: bins hold ranks [0, 2) and [2, 5).
  std::vector<ScoredSample> s{{0.1, true}, {0.2, true}, {0.3, false}, {0.4, false}, {0.5, false}};
  const auto r = mad(s, 2);
  EXPECT_EQ(r.bins.bins[0].size, 2u);
  EXPECT_EQ(r.bins.bins[1].size, 3u);
}

TEST(Mad, TiesKeepInputOrder) {
  // All equal probabilities: bins follow input order.
  std::vector<ScoredSample> s{{0.5, true}, {0.5, true}, {0.5, false}, {0.5, false}};
  const auto r = mad(s, 2);
  EXPECT_DOUBLE_EQ(r.bins.bins[0].acc, 1.0);
  EXPECT_DOUBLE_EQ(r.bins.bins[1].acc, 0.0);
  EXPECT_DOUBLE_EQ(r.mad, 0.5);
}

TEST(Property, MatchesBruteForce) {
  Rng rng(12345);
  for (int trial = 0; trial < 2000; ++trial) {
    const auto k = static_cast<std::size_t>(rng.uniform_int(1, 5));
    const auto n = static_cast<std::size_t>(rng.uniform_int(static_cast<std::int64_t>(k), 50));
    const auto s = oracle::random_instance(rng, n);
    ASSERT_NEAR(mse(s), oracle::brute_mse(s), 1e-12);
    ASSERT_NEAR(mad(s, k).mad, oracle::brute_mad(s, k), 1e-12);
  }
}

TEST(Property, BoundsAndInvariances) {
  Rng rng(77);
  for (int trial = 0; trial < 300; ++trial) {
    const auto n = static_cast<std::size_t>(rng.uniform_int(10, 60));
    auto s = oracle::random_instance(rng, n);
    const auto r = score(s, 10);
    EXPECT_GE(r.mad, 0.0);
    EXPECT_LE(r.mad, 1.0);
    EXPECT_GE(r.mse, 0.0);
    EXPECT_LE(r.mse, 1.0);
    std::size_t total = 0;
    for (std::size_t i = 0; i < r.bins.bins.size(); ++i) {
      total += r.bins.bins[i].size;
      if (i) EXPECT_LE(r.bins.bins[i - 1].conf, r.bins.bins[i].conf + 1e-15);
    }
    EXPECT_EQ(total, n);

    // MSE ignores order.
    auto shuffled = s;
    rng.shuffle(shuffled);
    EXPECT_NEAR(mse(shuffled), r.mse, 1e-12);

    // Murphy: mse = reliability - resolution + uncertainty.
    const auto d = murphy_decomposition(s);
    EXPECT_NEAR(d.reliability - d.resolution + d.uncertainty, r.mse, 1e-12);
  }
}

TEST(Mad, PerfectlyCalibratedBinsScoreZero) {
  // Ten groups of ten at p = 0.05, 0.15, ...; each group has round(10p) hits.
  std::vector<ScoredSample> s;
  for (int g = 0; g < 10; ++g)
    for (int i = 0; i < 10; ++i) s.push_back({g / 10.0, i < g});
  EXPECT_NEAR(mad(s, 10).mad, 0.0, 1e-15);
}

}  // namespace
}  // namespace calmath
