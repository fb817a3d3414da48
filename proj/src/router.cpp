#include "scout/router.hpp"

#include <cmath>

namespace scout {

namespace {
nlohmann::json vec_json(const Eigen::VectorXd& v) {
  auto a = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}
Eigen::VectorXd json_vec(const nlohmann::json& a) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(a.size()));
  for (std::size_t i = 0; i < a.size(); ++i) v[static_cast<Eigen::Index>(i)] = a[i].get<double>();
  return v;
}
}  // namespace

RouteDecision route_by_utility(const Eigen::VectorXd& scores, const CostVector& cost) {
  if (scores.size() != cost.size()) throw std::invalid_argument("cost length differs from the score vector");
  RouteDecision d;
  d.utilities.resize(scores.size());
  std::optional<std::size_t> best;
  for (Eigen::Index j = 0; j < scores.size(); ++j) {
    if (!cost.feasible(j)) {
      d.utilities[j] = -kInfiniteCost;
      continue;
    }
    d.utilities[j] = scores[j] - cost[j];
    if (!best || d.utilities[j] > d.utilities[static_cast<Eigen::Index>(*best)]) best = static_cast<std::size_t>(j);
  }
  if (!best) throw NoFeasibleModel();
  d.choice = *best;
  return d;
}

Eigen::MatrixXd Router::predict_matrix(const Dataset& data) const {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(data.size()), static_cast<Eigen::Index>(registry_.size()));
  for (std::size_t i = 0; i < data.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) = predict_record(data.records[i]).transpose();
  }
  return out;
}

Eigen::VectorXd Router::prepare(const Eigen::VectorXd& features) const {
  return standardizer_ ? standardizer_->apply(features) : features;
}

Eigen::MatrixXd Router::prepare_rows(const Dataset& data) const {
  Eigen::MatrixXd x = data.feature_matrix();
  if (standardizer_) {
    if (x.cols() != standardizer_->dim()) throw DataError("feature dimension mismatch");
    x = (x.rowwise() - standardizer_->means().transpose()).array().rowwise() /
        standardizer_->stds().transpose().array();
  }
  return x;
}

Eigen::VectorXd Router::with_invariant(const Eigen::VectorXd& dependent) const {
  const auto k1 = static_cast<Eigen::Index>(registry_.num_dependent());
  if (dependent.size() != k1) throw std::logic_error("dependent prediction length differs from k1");
  Eigen::VectorXd s(static_cast<Eigen::Index>(registry_.size()));
  s.head(k1) = dependent;
  s.tail(static_cast<Eigen::Index>(registry_.num_invariant())) = registry_.invariant_scores();
  return s;
}

nlohmann::json Router::base_json() const {
  nlohmann::json j;
  j["type"] = type();
  j["registry"] = registry_to_json(registry_);
  j["registry_hash"] = registry_.hash();
  if (standardizer_) j["standardizer"] = standardizer_to_json(*standardizer_);
  return j;
}

nlohmann::json standardizer_to_json(const Standardizer& s) {
  return {{"means", vec_json(s.means())}, {"stds", vec_json(s.stds())}};
}

Standardizer standardizer_from_json(const nlohmann::json& j) {
  return Standardizer(json_vec(j.at("means")), json_vec(j.at("stds")));
}

}  // namespace scout
