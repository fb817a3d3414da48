#include "scout/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

#include "scout/stats.hpp"

namespace scout::eval {

double utility(const Eigen::VectorXd& true_scores, std::size_t choice, const CostVector& cost) {
  const auto j = static_cast<Eigen::Index>(choice);
  if (j >= true_scores.size() || !cost.feasible(j)) throw std::invalid_argument("utility of an infeasible choice");
  return true_scores[j] - cost[j];
}

std::vector<double> regrets(const Router& router, const Eigen::MatrixXd& predicted, const Dataset& test,
                            const std::vector<CostVector>& costs) {
  if (test.empty() || costs.empty()) throw std::invalid_argument("regret needs records and cost vectors");
  if (predicted.rows() != static_cast<Eigen::Index>(test.size())) throw std::invalid_argument("prediction rows differ from test size");
  const auto& registry = router.registry();
  std::vector<double> out;
  out.reserve(test.size() * costs.size());
  for (std::size_t i = 0; i < test.size(); ++i) {
    const Eigen::VectorXd truth = full_scores(test.records[i], registry);
    const Eigen::VectorXd pred = predicted.row(static_cast<Eigen::Index>(i)).transpose();
    for (const auto& c : costs) {
      const auto best = route_by_utility(truth, c);
      const auto mine = router.decide(pred, c);
      const double regret = best.utilities[static_cast<Eigen::Index>(best.choice)] - utility(truth, mine.choice, c);
      out.push_back(std::max(regret, 0.0));
    }
  }
  return out;
}

std::vector<double> regrets(const Router& router, const Dataset& test, const std::vector<CostVector>& costs) {
  return regrets(router, router.predict_matrix(test), test, costs);
}

RegretSummary summarize_regret(const std::vector<double>& r, const std::vector<double>& baseline) {
  if (r.size() != baseline.size()) throw std::invalid_argument("regret samples are not aligned with the baseline");
  RegretSummary s;
  s.count = r.size();
  s.mean = stats::mean(r);
  s.se = stats::standard_error(r);
  const double base = stats::mean(baseline);
  if (base > 0.0) {
    s.ratio = s.mean / base;
    s.ratio_se = s.se / base;
  } else {
    // 0/0 is left undefined rather than guessed.
    s.ratio = s.mean > 0.0 ? std::numeric_limits<double>::infinity() : std::numeric_limits<double>::quiet_NaN();
    s.ratio_se = std::numeric_limits<double>::quiet_NaN();
  }
  return s;
}

RegretSummary regret_over_subspace(const Router& router, const Router& baseline, const Dataset& test,
                                   const std::vector<CostVector>& costs) {
  return summarize_regret(regrets(router, test, costs), regrets(baseline, test, costs));
}

double oracle_quality(const Dataset& test, const ModelRegistry& registry) {
  if (test.empty()) throw std::invalid_argument("oracle quality of an empty set");
  stats::CompensatedSum acc;
  for (const auto& r : test.records) acc.add(full_scores(r, registry).maxCoeff());
  return acc.value() / static_cast<double>(test.size());
}

std::vector<CurvePoint> deferral_points(const Router& router, const Eigen::MatrixXd& predicted, const Dataset& test,
                                        const CostRay& ray) {
  ray.validate();
  const auto& registry = router.registry();
  if (ray.base.size() != static_cast<Eigen::Index>(registry.size())) throw std::invalid_argument("ray base length differs from k");
  const double norm = oracle_quality(test, registry);
  std::vector<Eigen::VectorXd> truth;
  truth.reserve(test.size());
  for (const auto& r : test.records) truth.push_back(full_scores(r, registry));

  std::vector<CurvePoint> points;
  points.reserve(ray.lambdas.size());
  for (double lambda : ray.lambdas) {
    const CostVector c(lambda * ray.base);
    stats::CompensatedSum cost_acc, quality_acc;
    for (std::size_t i = 0; i < test.size(); ++i) {
      const auto d = router.decide(predicted.row(static_cast<Eigen::Index>(i)).transpose(), c);
      const auto j = static_cast<Eigen::Index>(d.choice);
      cost_acc.add(ray.base[j]);
      quality_acc.add(truth[i][j]);
    }
    const auto n = static_cast<double>(test.size());
    points.push_back({cost_acc.value() / n, quality_acc.value() / n / norm});
  }
  return points;
}

DeferralCurve pareto_frontier(std::vector<CurvePoint> points) {
  std::sort(points.begin(), points.end(), [](const CurvePoint& a, const CurvePoint& b) {
    return a.cost < b.cost || (a.cost == b.cost && a.utility > b.utility);
  });
  DeferralCurve curve;
  for (const auto& p : points) {
    if (curve.points.empty() || p.utility > curve.points.back().utility) {
      if (!curve.points.empty() && curve.points.back().cost == p.cost) continue;
      curve.points.push_back(p);
    }
  }
  return curve;
}

DeferralCurve deferral_curve(const Router& router, const Dataset& test, const CostRay& ray) {
  if (ray.lambdas.empty()) throw std::invalid_argument("empty lambda grid");
  return pareto_frontier(deferral_points(router, router.predict_matrix(test), test, ray));
}

std::vector<CurvePoint> always_model_points(const Dataset& test, const ModelRegistry& registry,
                                            const Eigen::VectorXd& base) {
  const double norm = oracle_quality(test, registry);
  std::vector<CurvePoint> pts;
  for (std::size_t j = 0; j < registry.size(); ++j) {
    stats::CompensatedSum acc;
    for (const auto& r : test.records) acc.add(full_scores(r, registry)[static_cast<Eigen::Index>(j)]);
    pts.push_back({base[static_cast<Eigen::Index>(j)], acc.value() / static_cast<double>(test.size()) / norm});
  }
  return pts;
}

namespace {
double cross(const CurvePoint& o, const CurvePoint& a, const CurvePoint& b) {
  return (a.cost - o.cost) * (b.utility - o.utility) - (a.utility - o.utility) * (b.cost - o.cost);
}
}  // namespace

DeferralCurve zero_router_curve(std::vector<CurvePoint> vertices) {
  if (vertices.empty()) throw std::invalid_argument("zero router needs at least one vertex");
  std::sort(vertices.begin(), vertices.end(), [](const CurvePoint& a, const CurvePoint& b) {
    return a.cost < b.cost || (a.cost == b.cost && a.utility > b.utility);
  });
  // Drop equal-cost duplicates, keeping the best.
  std::vector<CurvePoint> pts;
  for (const auto& v : vertices) {
    if (pts.empty() || v.cost != pts.back().cost) pts.push_back(v);
  }
  std::vector<CurvePoint> hull;
  for (const auto& p : pts) {
    while (hull.size() >= 2 && cross(hull[hull.size() - 2], hull.back(), p) >= 0.0) hull.pop_back();
    hull.push_back(p);
  }
  DeferralCurve curve;
  for (const auto& p : hull) {
    if (!curve.points.empty() && p.utility <= curve.points.back().utility) break;
    curve.points.push_back(p);
  }
  return curve;
}

double curve_value(const DeferralCurve& curve, double c) {
  const auto& pts = curve.points;
  if (pts.empty()) throw std::invalid_argument("empty curve");
  if (c <= pts.front().cost) return pts.front().utility;
  if (c >= pts.back().cost) return pts.back().utility;
  auto hi = std::upper_bound(pts.begin(), pts.end(), c, [](double v, const CurvePoint& p) { return v < p.cost; });
  auto lo = hi - 1;
  const double t = (c - lo->cost) / (hi->cost - lo->cost);
  return lo->utility + t * (hi->utility - lo->utility);
}

double aiq(const DeferralCurve& curve, double c_min, double c_max) {
  const auto& pts = curve.points;
  if (pts.empty()) throw std::invalid_argument("AIQ of an empty curve");
  if (!(c_max > c_min)) throw std::invalid_argument("AIQ bounds must satisfy c_min < c_max");
  const double tol = 1e-12 * std::max(1.0, std::abs(pts.front().cost));
  if (c_min < pts.front().cost - tol) throw std::invalid_argument("AIQ lower bound lies below the curve support");

  std::vector<double> knots{c_min};
  for (const auto& p : pts) {
    if (p.cost > c_min && p.cost < c_max) knots.push_back(p.cost);
  }
  knots.push_back(c_max);
  stats::CompensatedSum area;
  for (std::size_t i = 1; i < knots.size(); ++i) {
    area.add(0.5 * (curve_value(curve, knots[i - 1]) + curve_value(curve, knots[i])) * (knots[i] - knots[i - 1]));
  }
  return area.value() / (c_max - c_min);
}

double paired_ttest_onesided(const std::vector<double>& a, const std::vector<double>& b) {
  return stats::paired_ttest_less(a, b);
}

PolicyBreakdown policy_breakdown(const Router& router, const Dataset& test, GroupBy group_by, const CostVector& cost) {
  const auto& registry = router.registry();
  const auto k = static_cast<Eigen::Index>(registry.size());
  const Eigen::MatrixXd predicted = router.predict_matrix(test);
  std::map<std::string, std::pair<Eigen::VectorXd, Eigen::VectorXd>> counts;
  std::map<std::string, std::size_t> sizes;
  for (std::size_t i = 0; i < test.size(); ++i) {
    const auto& r = test.records[i];
    const std::string& key = group_by == GroupBy::Tag ? r.tag : r.view_id;
    auto [it, inserted] = counts.try_emplace(key, Eigen::VectorXd::Zero(k), Eigen::VectorXd::Zero(k));
    const auto mine = router.decide(predicted.row(static_cast<Eigen::Index>(i)).transpose(), cost);
    const auto best = route_by_utility(full_scores(r, registry), cost);
    it->second.first[static_cast<Eigen::Index>(mine.choice)] += 1.0;
    it->second.second[static_cast<Eigen::Index>(best.choice)] += 1.0;
    ++sizes[key];
  }
  PolicyBreakdown out;
  out.router_freq.resize(static_cast<Eigen::Index>(counts.size()), k);
  out.oracle_freq.resize(static_cast<Eigen::Index>(counts.size()), k);
  Eigen::Index row = 0;
  for (const auto& [key, c] : counts) {
    const auto n = static_cast<double>(sizes[key]);
    out.groups.push_back(key);
    out.counts.push_back(sizes[key]);
    out.router_freq.row(row) = c.first.transpose() / n;
    out.oracle_freq.row(row) = c.second.transpose() / n;
    ++row;
  }
  return out;
}

}  // namespace scout::eval
