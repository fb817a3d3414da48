#pragma once

#include <memory>
#include <optional>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>
#include <json.hpp>

#include "scout/costs.hpp"
#include "scout/dataset.hpp"

namespace scout {

class NoFeasibleModel : public std::runtime_error {
 public:
  NoFeasibleModel() : std::runtime_error("no feasible model: every cost entry is +inf") {}
};

struct RouteDecision {
  std::size_t choice = 0;
  // Estimated utility per model; -inf where the cost is +inf.
  Eigen::VectorXd utilities;
};

// argmax_j (scores_j - cost_j) over models with finite cost, lowest index on ties.
RouteDecision route_by_utility(const Eigen::VectorXd& scores, const CostVector& cost);

// Common contract of every router: a full k-vector of estimated scores
// (dependent predictions followed by registry fixed scores), then the
// shared route-by-utility step.
class Router {
 public:
  explicit Router(ModelRegistry registry, std::optional<Standardizer> standardizer = std::nullopt)
      : registry_(std::move(registry)), standardizer_(std::move(standardizer)) {}
  virtual ~Router() = default;

  virtual std::string type() const = 0;

  // Estimated scores from raw (unstandardised) features.
  virtual Eigen::VectorXd predict_scores(const Eigen::VectorXd& features) const = 0;

  // Estimated scores for a dataset record. Routers with access to ground
  // truth override this.
  virtual Eigen::VectorXd predict_record(const ExampleRecord& record) const {
    return predict_scores(record.features);
  }

  // N x k estimated scores for every record.
  virtual Eigen::MatrixXd predict_matrix(const Dataset& data) const;

  // Decision given already-predicted scores.
  virtual RouteDecision decide(const Eigen::VectorXd& scores, const CostVector& cost) const {
    return route_by_utility(scores, cost);
  }

  RouteDecision route(const Eigen::VectorXd& features, const CostVector& cost) const {
    return decide(predict_scores(features), cost);
  }

  RouteDecision route(const ExampleRecord& record, const CostVector& cost) const {
    return decide(predict_record(record), cost);
  }

  virtual nlohmann::json to_json() const = 0;

  const ModelRegistry& registry() const { return registry_; }
  const std::optional<Standardizer>& standardizer() const { return standardizer_; }

 protected:
  Eigen::VectorXd prepare(const Eigen::VectorXd& features) const;
  Eigen::MatrixXd prepare_rows(const Dataset& data) const;
  // Dependent predictions followed by the fixed invariant scores.
  Eigen::VectorXd with_invariant(const Eigen::VectorXd& dependent) const;
  nlohmann::json base_json() const;

  ModelRegistry registry_;
  std::optional<Standardizer> standardizer_;
};

nlohmann::json standardizer_to_json(const Standardizer& s);
Standardizer standardizer_from_json(const nlohmann::json& j);

}  // namespace scout
