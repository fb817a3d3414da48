#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "scout/costs.hpp"
#include "scout/dataset.hpp"
#include "scout/router.hpp"

namespace scout::eval {

// s[choice] - c[choice] with true scores; throws when the choice is infeasible.
double utility(const Eigen::VectorXd& true_scores, std::size_t choice, const CostVector& cost);

// Oracle utility minus router utility for every (record, cost vector)
// pair, record-major. `predicted` is the router's N x k score matrix.
std::vector<double> regrets(const Router& router, const Eigen::MatrixXd& predicted, const Dataset& test,
                            const std::vector<CostVector>& costs);
std::vector<double> regrets(const Router& router, const Dataset& test, const std::vector<CostVector>& costs);

struct RegretSummary {
  double mean = 0.0;
  double se = 0.0;        // standard error of the pooled per-sample regrets
  double ratio = 0.0;     // mean / baseline mean on the identical sample
  double ratio_se = 0.0;  // se / baseline mean
  std::size_t count = 0;
};

RegretSummary summarize_regret(const std::vector<double>& regrets, const std::vector<double>& baseline);

RegretSummary regret_over_subspace(const Router& router, const Router& baseline, const Dataset& test,
                                   const std::vector<CostVector>& costs);

struct CurvePoint {
  double cost = 0.0;
  double utility = 0.0;
};

struct DeferralCurve {
  std::vector<CurvePoint> points;  // sorted by cost, utility non-decreasing
};

// Mean over records of the best true score across all models.
double oracle_quality(const Dataset& test, const ModelRegistry& registry);

// One point per lambda: (mean base cost of the chosen models, mean true
// quality of the chosen models / oracle quality).
std::vector<CurvePoint> deferral_points(const Router& router, const Eigen::MatrixXd& predicted, const Dataset& test,
                                        const CostRay& ray);

// Sort by cost and keep only points that improve on every cheaper point.
DeferralCurve pareto_frontier(std::vector<CurvePoint> points);

DeferralCurve deferral_curve(const Router& router, const Dataset& test, const CostRay& ray);

// (mean base cost, normalised quality) of always routing to each model.
std::vector<CurvePoint> always_model_points(const Dataset& test, const ModelRegistry& registry,
                                            const Eigen::VectorXd& base);

// Non-decreasing upper convex hull of constant routers; points between
// vertices correspond to random mixing of the two neighbours.
DeferralCurve zero_router_curve(std::vector<CurvePoint> vertices);

// Piecewise-linear value of the curve at cost c, constant past the last point.
double curve_value(const DeferralCurve& curve, double c);

// Normalised area under the curve on [c_min, c_max]. The curve is
// extended as a constant past its last point; c_min below the first
// point is an error.
double aiq(const DeferralCurve& curve, double c_min, double c_max);

// H1: mean(a) < mean(b), paired by position.
double paired_ttest_onesided(const std::vector<double>& a, const std::vector<double>& b);

enum class GroupBy { Tag, ViewBucket };

struct PolicyBreakdown {
  std::vector<std::string> groups;
  std::vector<std::size_t> counts;
  Eigen::MatrixXd router_freq;  // groups x k, rows sum to 1
  Eigen::MatrixXd oracle_freq;
};

PolicyBreakdown policy_breakdown(const Router& router, const Dataset& test, GroupBy group_by, const CostVector& cost);

}  // namespace scout::eval
