#include <cmath>
#include <map>

#include <gtest/gtest.h>

#include "helpers.hpp"
#include "oracles.hpp"
#include "scout/baselines.hpp"
#include "scout/eval.hpp"

using namespace scout;

namespace {

// Returns a stored score vector per record id.
class LookupRouter final : public Router {
 public:
  LookupRouter(ModelRegistry reg, std::map<std::string, Eigen::VectorXd> table)
      : Router(std::move(reg)), table_(std::move(table)) {}
  std::string type() const override { return "lookup"; }
  Eigen::VectorXd predict_scores(const Eigen::VectorXd&) const override { throw std::logic_error("unused"); }
  Eigen::VectorXd predict_record(const ExampleRecord& r) const override { return table_.at(r.id); }
  Eigen::MatrixXd predict_matrix(const Dataset& data) const override {
    Eigen::MatrixXd m(static_cast<Eigen::Index>(data.size()), static_cast<Eigen::Index>(registry_.size()));
    for (std::size_t i = 0; i < data.size(); ++i) m.row(static_cast<Eigen::Index>(i)) = predict_record(data.records[i]);
    return m;
  }
  nlohmann::json to_json() const override { return base_json(); }

 private:
  std::map<std::string, Eigen::VectorXd> table_;
};

eval::DeferralCurve curve(std::initializer_list<eval::CurvePoint> pts) { return eval::DeferralCurve{pts}; }

}  // namespace

TEST(Eval, UtilityExample) {
  const Eigen::Vector2d s(1.0, 2.0);
  const CostVector c(Eigen::Vector2d(0.0, 0.5));
  EXPECT_DOUBLE_EQ(eval::utility(s, 1, c), 1.5);
  EXPECT_DOUBLE_EQ(eval::utility(s, 0, c), 1.0);
  EXPECT_THROW(eval::utility(s, 1, CostVector(Eigen::Vector2d(0.0, kInfiniteCost))), std::invalid_argument);
}

TEST(Eval, SingleMistakeGivesGapOverN) {
  const auto reg = testing_helpers::make_registry(2);
  const int n = 8;
  const double gap = 0.6;
  Dataset test;
  std::map<std::string, Eigen::VectorXd> table;
  for (int i = 0; i < n; ++i) {
    auto r = testing_helpers::make_record("o" + std::to_string(i), "v", "t", Eigen::VectorXd::Zero(1),
                                          Eigen::Vector2d(1.0 + gap, 1.0));
    // Correct guess everywhere except record 3.
    table[r.id] = i == 3 ? Eigen::Vector2d(0.0, 1.0) : Eigen::Vector2d(1.0, 0.0);
    test.records.push_back(r);
  }
  const LookupRouter router(reg, table);
  const auto costs = std::vector<CostVector>{CostVector(Eigen::Vector2d::Zero())};
  const auto reg_vals = eval::regrets(router, test, costs);
  ASSERT_EQ(reg_vals.size(), static_cast<std::size_t>(n));
  double mean = 0.0;
  for (double v : reg_vals) mean += v / n;
  EXPECT_NEAR(mean, gap / n, 1e-12);

  const OracleRouter oracle(reg);
  for (double v : eval::regrets(oracle, test, costs)) EXPECT_EQ(v, 0.0);
}

TEST(Eval, RegretsAreRecordMajor) {
  const auto reg = testing_helpers::make_registry(2);
  Dataset test;
  test.records.push_back(testing_helpers::make_record("a", "v", "t", Eigen::VectorXd::Zero(1), Eigen::Vector2d(1, 0)));
  test.records.push_back(testing_helpers::make_record("b", "v", "t", Eigen::VectorXd::Zero(1), Eigen::Vector2d(0, 1)));
  const AlwaysModelRouter always0(reg, 0);
  const std::vector<CostVector> costs{CostVector(Eigen::Vector2d(0, 0)), CostVector(Eigen::Vector2d(0, 2))};
  const auto r = eval::regrets(always0, test, costs);
  ASSERT_EQ(r.size(), 4u);
  EXPECT_DOUBLE_EQ(r[0], 0.0);  // a, c0
  EXPECT_DOUBLE_EQ(r[1], 0.0);  // a, c1
  EXPECT_DOUBLE_EQ(r[2], 1.0);  // b, c0
  EXPECT_DOUBLE_EQ(r[3], 0.0);  // b, c1: model 1 utility is -1
}

TEST(Eval, SummaryRatios) {
  const auto s = eval::summarize_regret({1.0, 3.0}, {4.0, 4.0});
  EXPECT_DOUBLE_EQ(s.mean, 2.0);
  EXPECT_DOUBLE_EQ(s.ratio, 0.5);
  EXPECT_DOUBLE_EQ(s.se, 1.0);
  EXPECT_DOUBLE_EQ(s.ratio_se, 0.25);
  EXPECT_EQ(s.count, 2u);
  EXPECT_TRUE(std::isnan(eval::summarize_regret({0.0}, {0.0}).ratio));
  EXPECT_TRUE(std::isinf(eval::summarize_regret({1.0}, {0.0}).ratio));
}

TEST(Eval, ZeroRouterHullExample) {
  const auto hull = eval::zero_router_curve({{1.0, 0.5}, {3.0, 0.9}, {2.0, 0.4}});
  ASSERT_EQ(hull.points.size(), 2u);
  EXPECT_NEAR(eval::curve_value(hull, 2.0), 0.7, 1e-12);
  EXPECT_NEAR(eval::curve_value(hull, 10.0), 0.9, 1e-12);
}

TEST(Eval, ZeroRouterStopsWhenUtilityFalls) {
  const auto hull = eval::zero_router_curve({{0.0, 0.2}, {1.0, 0.8}, {2.0, 0.9}, {3.0, 0.85}});
  ASSERT_EQ(hull.points.size(), 3u);
  EXPECT_DOUBLE_EQ(hull.points.back().cost, 2.0);
}

TEST(Eval, AiqExamples) {
  EXPECT_NEAR(eval::aiq(curve({{0.0, 0.7}}), 0.0, 5.0), 0.7, 1e-12);
  EXPECT_NEAR(eval::aiq(curve({{0.0, 0.0}, {1.0, 1.0}}), 0.0, 1.0), 0.5, 1e-12);
  // Constant extension to the right.
  EXPECT_NEAR(eval::aiq(curve({{0.0, 0.0}, {1.0, 1.0}}), 0.0, 2.0), 0.75, 1e-12);
  // Sub-interval.
  EXPECT_NEAR(eval::aiq(curve({{0.0, 0.0}, {2.0, 1.0}}), 1.0, 2.0), 0.75, 1e-12);
  EXPECT_THROW(eval::aiq(curve({{1.0, 0.5}}), 0.0, 2.0), std::invalid_argument);
  EXPECT_THROW(eval::aiq(curve({{0.0, 0.5}}), 1.0, 1.0), std::invalid_argument);
}

TEST(Eval, AiqMatchesFineRiemannSum) {
  const auto c = curve({{0.5, 0.1}, {1.0, 0.4}, {1.7, 0.45}, {3.0, 0.9}});
  const double lo = 0.8, hi = 4.0;
  const int steps = 400000;
  double area = 0.0;
  for (int i = 0; i < steps; ++i) area += eval::curve_value(c, lo + (i + 0.5) * (hi - lo) / steps);
  EXPECT_NEAR(eval::aiq(c, lo, hi), area / steps, 1e-9);
}

TEST(Eval, ParetoFrontier) {
  const auto f = eval::pareto_frontier({{2.0, 0.5}, {1.0, 0.6}, {1.0, 0.3}, {3.0, 0.9}, {2.5, 0.9}});
  ASSERT_EQ(f.points.size(), 2u);
  EXPECT_DOUBLE_EQ(f.points[0].cost, 1.0);
  EXPECT_DOUBLE_EQ(f.points[0].utility, 0.6);
  EXPECT_DOUBLE_EQ(f.points[1].cost, 2.5);
}

TEST(Eval, DeferralPointsAtExtremes) {
  const auto reg = testing_helpers::make_registry(3);
  const auto test = testing_helpers::random_dataset(10, 2, 2, 3, 9);
  const OracleRouter oracle(reg);
  const Eigen::Vector3d base(1.0, 2.0, 3.0);
  CostRay ray{base, {0.0, 1e9}};
  const auto pts = eval::deferral_points(oracle, oracle.predict_matrix(test), test, ray);
  ASSERT_EQ(pts.size(), 2u);
  EXPECT_NEAR(pts[0].utility, 1.0, 1e-12);
  EXPECT_NEAR(pts[1].cost, 1.0, 1e-12);
  const auto always = eval::always_model_points(test, reg, base);
  EXPECT_NEAR(pts[1].utility, always[0].utility, 1e-12);
  EXPECT_LE(always[2].utility, 1.0);
}

TEST(Eval, PairedTTestAgainstOracle) {
  const std::vector<double> a{1.0, 1.2, 0.9, 1.1, 1.05, 0.97};
  const std::vector<double> b{1.3, 1.25, 1.2, 1.4, 1.1, 1.2};
  EXPECT_NEAR(eval::paired_ttest_onesided(a, b), oracle::paired_p_less(a, b), 1e-10);
  EXPECT_LT(eval::paired_ttest_onesided(a, b), 0.05);
  EXPECT_GT(eval::paired_ttest_onesided(b, a), 0.95);
}

TEST(Eval, PolicyBreakdownMatchesCounts) {
  const auto reg = testing_helpers::make_registry(3, {0.0});
  const auto test = testing_helpers::random_dataset(12, 3, 2, 3, 5, 4);
  const AlwaysModelRouter always1(reg, 1);
  const CostVector cost(Eigen::Vector4d(0.0, 0.1, 0.2, 0.0));
  const auto pb = eval::policy_breakdown(always1, test, eval::GroupBy::Tag, cost);
  ASSERT_EQ(pb.groups.size(), 4u);
  std::size_t total = 0;
  for (std::size_t g = 0; g < pb.groups.size(); ++g) {
    total += pb.counts[g];
    const auto row = static_cast<Eigen::Index>(g);
    EXPECT_DOUBLE_EQ(pb.router_freq(row, 1), 1.0);
    EXPECT_NEAR(pb.oracle_freq.row(row).sum(), 1.0, 1e-12);
    std::vector<double> brute(4, 0.0);
    std::size_t n = 0;
    for (const auto& r : test.records) {
      if (r.tag != pb.groups[g]) continue;
      ++n;
      const Eigen::VectorXd u = full_scores(r, reg) - cost.values();
      Eigen::Index best = 0;
      u.maxCoeff(&best);
      brute[static_cast<std::size_t>(best)] += 1.0;
    }
    EXPECT_EQ(n, pb.counts[g]);
    for (int j = 0; j < 4; ++j) EXPECT_NEAR(pb.oracle_freq(row, j), brute[static_cast<std::size_t>(j)] / n, 1e-12);
  }
  EXPECT_EQ(total, test.size());
  const auto by_view = eval::policy_breakdown(always1, test, eval::GroupBy::ViewBucket, cost);
  EXPECT_EQ(by_view.groups.size(), 3u);
}
