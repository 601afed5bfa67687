#include <gtest/gtest.h>

#include <set>

#include "calmath/rng.hpp"

namespace calmath {
namespace {

TEST(Rng, SameSeedSameStream) {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a.next(), b.next());
}

TEST(Rng, UniformIntStaysInRangeAndCoversIt) {
  Rng rng(7);
  std::set<std::int64_t> seen;
  for (int i = 0; i < 5000; ++i) {
    auto v = rng.uniform_int(-3, 3);
    ASSERT_GE(v, -3);
    ASSERT_LE(v, 3);
    seen.insert(v);
  }
  EXPECT_EQ(seen.size(), 7u);
  EXPECT_EQ(rng.uniform_int(5, 5), 5);
}

TEST(Rng, Uniform01IsHalfOpen) {
  Rng rng(1);
  double sum = 0;
  for (int i = 0; i < 20000; ++i) {
    double u = rng.uniform01();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    sum += u;
  }
  EXPECT_NEAR(sum / 20000, 0.5, 0.01);
}

TEST(Rng, NormalMoments) {
  Rng rng(3);
  const int n = 50000;
  double s = 0, s2 = 0;
  for (int i = 0; i < n; ++i) {
    double x = rng.normal(1.0, 2.0);
    s += x;
    s2 += x * x;
  }
  const double mean = s / n;
  EXPECT_NEAR(mean, 1.0, 0.05);
  EXPECT_NEAR(s2 / n - mean * mean, 4.0, 0.15);
}

TEST(Rng, SampleWithoutReplacementIsDistinct) {
  Rng rng(9);
  for (std::size_t k : {0u, 1u, 5u, 50u}) {
    auto idx = rng.sample_without_replacement(50, k);
    ASSERT_EQ(idx.size(), k);
    std::set<std::size_t> uniq(idx.begin(), idx.end());
    EXPECT_EQ(uniq.size(), k);
    for (auto i : idx) EXPECT_LT(i, 50u);
  }
}

TEST(Rng, DerivedSeedsDiffer) {
  EXPECT_NE(derive_seed(1, 0), derive_seed(1, 1));
  EXPECT_NE(derive_seed(1, "a"), derive_seed(2, "a"));
  EXPECT_EQ(derive_seed(5, "x"), derive_seed(5, "x"));
}

TEST(Rng, Fnv1aReferenceValues) {
  EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cULL);
}

}  // namespace
}  // namespace calmath
