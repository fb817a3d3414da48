#include <gtest/gtest.h>

#include <cmath>
#include <map>

#include "helpers.hpp"
#include "scout/smoothing.hpp"

using namespace scout;
using testing_helpers::make_record;

namespace {
Dataset tagged(const std::vector<std::pair<std::string, Eigen::VectorXd>>& rows) {
  Dataset d;
  int i = 0;
  for (const auto& [tag, s] : rows) d.records.push_back(make_record("o" + std::to_string(i++), "v", tag, Eigen::VectorXd::Zero(1), s));
  return d;
}
}  // namespace

TEST(TagMeans, ArithmeticMean) {
  const auto d = tagged({{"cup", Eigen::Vector2d(1, 2)}, {"cup", Eigen::Vector2d(3, 4)}, {"bowl", Eigen::Vector2d(5, 9)}});
  const auto stats = compute_tag_means(d);
  ASSERT_NE(stats.find("cup"), nullptr);
  EXPECT_TRUE(stats.find("cup")->mean.isApprox(Eigen::Vector2d(2, 3)));
  EXPECT_EQ(stats.find("cup")->count, 2u);
  EXPECT_TRUE(stats.find("bowl")->mean.isApprox(Eigen::Vector2d(5, 9)));
  EXPECT_EQ(stats.find("plate"), nullptr);
}

TEST(TagMeans, MatchesBruteForceGroupBy) {
  const auto d = testing_helpers::random_dataset(30, 4, 2, 3, 8, 5);
  const auto stats = compute_tag_means(d);
  std::map<std::string, std::pair<Eigen::VectorXd, int>> acc;
  for (const auto& r : d.records) {
    auto [it, fresh] = acc.try_emplace(r.tag, Eigen::VectorXd::Zero(3), 0);
    it->second.first += r.scores_dep;
    ++it->second.second;
  }
  ASSERT_EQ(stats.entries().size(), acc.size());
  for (const auto& [tag, v] : acc) {
    const Eigen::VectorXd mean = v.first / v.second;
    EXPECT_LT((stats.find(tag)->mean - mean).cwiseAbs().maxCoeff(), 1e-12) << tag;
  }
}

TEST(Smoothing, BlendsTowardTagMean) {
  const auto d = tagged({{"a", Eigen::Vector2d(0, 4)}, {"a", Eigen::Vector2d(4, 0)}});
  const auto stats = compute_tag_means(d);
  const Eigen::VectorXd half = smooth_scores(d.records[0], stats, {0.5, 1.0});
  EXPECT_TRUE(half.isApprox(Eigen::Vector2d(1, 3)));
  EXPECT_EQ(smooth_scores(d.records[0], stats, {1.0, 1.0}), d.records[0].scores_dep);
  EXPECT_TRUE(smooth_scores(d.records[0], stats, {0.0, 1.0}).isApprox(Eigen::Vector2d(2, 2)));
}

TEST(Smoothing, UnseenTagFallsBackAndCounts) {
  const auto d = tagged({{"a", Eigen::Vector2d(0, 4)}});
  const auto stats = compute_tag_means(d);
  const auto r = make_record("x", "v", "zzz", Eigen::VectorXd::Zero(1), Eigen::Vector2d(7, 8));
  EXPECT_EQ(smooth_scores(r, stats, {0.3, 1.0}), r.scores_dep);
  EXPECT_EQ(stats.unseen_tag_count(), 1u);
}

TEST(Smoothing, ConfigValidation) {
  EXPECT_THROW((SmoothingConfig{1.5, 1.0}.validate()), std::invalid_argument);
  EXPECT_THROW((SmoothingConfig{0.5, 0.0}.validate()), std::invalid_argument);
  EXPECT_NO_THROW((SmoothingConfig{0.0, 0.1}.validate()));
}

TEST(Softmax, ClosedForms) {
  const auto u = softmax_targets(Eigen::Vector4d::Constant(3.0), 1.0);
  for (Eigen::Index j = 0; j < 4; ++j) EXPECT_NEAR(u[j], 0.25, 1e-15);
  const double T = 0.5;
  const auto p = softmax_targets(Eigen::Vector2d(0.0, T * std::log(2.0)), T);
  EXPECT_NEAR(p[0], 1.0 / 3.0, 1e-15);
  EXPECT_NEAR(p[1], 2.0 / 3.0, 1e-15);
}

TEST(Softmax, ShiftInvarianceAndLargeScores) {
  const Eigen::Vector3d s(0.3, -1.2, 2.0);
  const auto a = softmax_targets(s, 0.7);
  const auto b = softmax_targets((s.array() + 123.0).matrix(), 0.7);
  EXPECT_LT((a - b).cwiseAbs().maxCoeff(), 1e-12);
  const auto big = softmax_targets(Eigen::Vector2d(1000.0, 1001.0), 1.0);
  EXPECT_TRUE(big.allFinite());
  EXPECT_NEAR(big.sum(), 1.0, 1e-15);
}

TEST(Partition, ClosedFormsAndIdentity) {
  EXPECT_DOUBLE_EQ(true_partition(Eigen::Vector4d::Zero(), 1.0), 4.0);
  EXPECT_NEAR(true_partition(Eigen::Vector2d(std::log(2.0), std::log(3.0)), 1.0), 5.0, 1e-14);
  const Eigen::Vector3d s(0.4, 1.1, -0.5);
  const double T = 0.8;
  const auto p = softmax_targets(s, T);
  const double z = true_partition(s, T);
  for (Eigen::Index j = 0; j < 3; ++j) EXPECT_NEAR(p[j] * z, std::exp(s[j] / T), 1e-9);
  EXPECT_NEAR(log_partition(s, T), std::log(z), 1e-14);
  EXPECT_THROW(true_partition(Eigen::Vector2d(1e6, 0.0), 1.0), std::overflow_error);
  EXPECT_TRUE(std::isfinite(log_partition(Eigen::Vector2d(1e6, 0.0), 1.0)));
}
