#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "scout/rng.hpp"
#include "scout/stats.hpp"

using namespace scout;

TEST(Stats, MeanAndVariances) {
  const std::vector<double> xs{1, 2, 3, 4};
  EXPECT_DOUBLE_EQ(stats::mean(xs), 2.5);
  EXPECT_DOUBLE_EQ(stats::variance(xs), 1.25);
  EXPECT_DOUBLE_EQ(stats::sample_variance(xs), 5.0 / 3.0);
  EXPECT_DOUBLE_EQ(stats::standard_error(xs), std::sqrt(5.0 / 3.0 / 4.0));
}

TEST(Stats, CompensatedSumKeepsSmallTerms) {
  stats::CompensatedSum s;
  s.add(1e16);
  for (int i = 0; i < 10; ++i) s.add(1.0);
  s.add(-1e16);
  EXPECT_DOUBLE_EQ(s.value(), 10.0);
}

TEST(Stats, QuantileInterpolates) {
  const std::vector<double> xs{4, 1, 3, 2};
  EXPECT_DOUBLE_EQ(stats::quantile(xs, 0.0), 1.0);
  EXPECT_DOUBLE_EQ(stats::quantile(xs, 1.0), 4.0);
  EXPECT_DOUBLE_EQ(stats::quantile(xs, 0.5), 2.5);
  EXPECT_DOUBLE_EQ(stats::quantile(xs, 0.75), 3.25);
}

TEST(Stats, PearsonBasics) {
  const std::vector<double> a{1, 2, 3, 4}, b{2, 4, 6, 8}, c{4, 3, 2, 1}, flat{1, 1, 1, 1};
  EXPECT_NEAR(stats::pearson(a, b), 1.0, 1e-15);
  EXPECT_NEAR(stats::pearson(a, c), -1.0, 1e-15);
  EXPECT_EQ(stats::pearson(a, flat), 0.0);
}

TEST(Stats, PairedTtestDegenerateCases) {
  const std::vector<double> b{1, 2, 3, 4};
  EXPECT_DOUBLE_EQ(stats::paired_ttest_less(b, b), 0.5);
  std::vector<double> shifted{0, 1, 2, 3};
  EXPECT_DOUBLE_EQ(stats::paired_ttest_less(shifted, b), 0.0);
  EXPECT_DOUBLE_EQ(stats::paired_ttest_less(b, shifted), 1.0);
}

TEST(Stats, PairedTtestMatchesIndependentOracle) {
  Rng rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 2 + rng.below(40);
    std::vector<double> a(n), b(n);
    const double shift = rng.normal(0.0, 0.5);
    for (std::size_t i = 0; i < n; ++i) {
      b[i] = rng.normal();
      a[i] = b[i] + shift + rng.normal(0.0, 1.0);
    }
    EXPECT_NEAR(stats::paired_ttest_less(a, b), oracle::paired_p_less(a, b), 1e-10) << "trial " << trial;
  }
}

TEST(Stats, StudentCdfSymmetry) {
  for (double dof : {1.0, 3.0, 29.0}) {
    EXPECT_NEAR(stats::student_t_cdf(0.0, dof), 0.5, 1e-15);
    EXPECT_NEAR(stats::student_t_cdf(1.3, dof) + stats::student_t_cdf(-1.3, dof), 1.0, 1e-14);
    EXPECT_NEAR(stats::student_t_cdf(1.3, dof), oracle::t_cdf(1.3, dof), 1e-12);
  }
}

TEST(Rng, DeterministicStreams) {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a.next_u64(), b.next_u64());
  EXPECT_NE(Rng::derive(1, 2), Rng::derive(1, 3));
  EXPECT_NE(Rng::derive(1, 2), Rng::derive(2, 2));
}

TEST(Rng, NormalMoments) {
  Rng r(3);
  std::vector<double> xs(200000);
  for (auto& x : xs) x = r.normal();
  EXPECT_NEAR(stats::mean(xs), 0.0, 0.01);
  EXPECT_NEAR(stats::variance(xs), 1.0, 0.01);
}

TEST(Rng, BelowAndShuffle) {
  Rng r(5);
  std::vector<int> counts(7, 0);
  for (int i = 0; i < 70000; ++i) ++counts[r.below(7)];
  for (int c : counts) EXPECT_NEAR(c, 10000, 500);
  auto idx = iota_indices(50);
  r.shuffle(idx);
  auto sorted = idx;
  std::sort(sorted.begin(), sorted.end());
  EXPECT_EQ(sorted, iota_indices(50));
  EXPECT_NE(idx, iota_indices(50));
}
