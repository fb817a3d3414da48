#pragma once

#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "scout/neuralnet.hpp"
#include "scout/ridge.hpp"
#include "scout/router.hpp"

namespace scout {

// Per-model train means for dependent models, identical for every input.
class InputAgnosticRouter final : public Router {
 public:
  InputAgnosticRouter(ModelRegistry registry, Eigen::VectorXd dependent_means);

  std::string type() const override { return "input_agnostic"; }
  Eigen::VectorXd predict_scores(const Eigen::VectorXd& features) const override;
  nlohmann::json to_json() const override;
  static std::unique_ptr<InputAgnosticRouter> from_json(const nlohmann::json& j);

 private:
  Eigen::VectorXd scores_;
};

std::unique_ptr<InputAgnosticRouter> train_input_agnostic(const Dataset& train, const ModelRegistry& registry);

// Always selects one model; routing fails when that model's cost is +inf.
class AlwaysModelRouter final : public Router {
 public:
  AlwaysModelRouter(ModelRegistry registry, std::size_t index);

  std::string type() const override { return "always"; }
  std::size_t index() const { return index_; }
  Eigen::VectorXd predict_scores(const Eigen::VectorXd& features) const override;
  RouteDecision decide(const Eigen::VectorXd& scores, const CostVector& cost) const override;
  nlohmann::json to_json() const override;

 private:
  std::size_t index_;
};

// Mean dependent scores of the k nearest training records (Euclidean on
// standardised features; ties resolved by record id).
class KnnRouter final : public Router {
 public:
  KnnRouter(ModelRegistry registry, std::optional<Standardizer> standardizer, Eigen::MatrixXd train_x,
            Eigen::MatrixXd train_scores, std::vector<std::string> ids, std::size_t k_neighbors);

  std::string type() const override { return "knn"; }
  Eigen::VectorXd predict_scores(const Eigen::VectorXd& features) const override;
  nlohmann::json to_json() const override;
  static std::unique_ptr<KnnRouter> from_json(const nlohmann::json& j);

  std::size_t k_neighbors() const { return k_; }

  // Indices (into the id-sorted training rows) of the k nearest neighbours.
  std::vector<std::size_t> neighbours(const Eigen::VectorXd& standardized) const;

 private:
  Eigen::MatrixXd x_;       // N x D, sorted by id
  Eigen::MatrixXd scores_;  // N x k1
  std::vector<std::string> ids_;
  std::size_t k_;
};

inline constexpr std::size_t kDefaultKnnK = 32;

std::unique_ptr<KnnRouter> train_knn(const Dataset& train, const ModelRegistry& registry, std::size_t k_neighbors,
                                     bool standardize = true);

// One ridge regression per dependent model.
class RidgeRouter final : public Router {
 public:
  RidgeRouter(ModelRegistry registry, std::optional<Standardizer> standardizer, RidgeModel model);

  std::string type() const override { return "lr"; }
  Eigen::VectorXd predict_scores(const Eigen::VectorXd& features) const override;
  Eigen::MatrixXd predict_matrix(const Dataset& data) const override;
  nlohmann::json to_json() const override;
  static std::unique_ptr<RidgeRouter> from_json(const nlohmann::json& j);

  const RidgeModel& model() const { return model_; }

 private:
  RidgeModel model_;
};

std::unique_ptr<RidgeRouter> train_ridge_router(const Dataset& train, const ModelRegistry& registry, double alpha,
                                                bool standardize = true);

// Identity-head perceptron regressing raw dependent scores with MSE.
class MlpRouter final : public Router {
 public:
  MlpRouter(ModelRegistry registry, std::optional<Standardizer> standardizer, nn::MlpParams net);

  std::string type() const override { return "mlp"; }
  Eigen::VectorXd predict_scores(const Eigen::VectorXd& features) const override;
  Eigen::MatrixXd predict_matrix(const Dataset& data) const override;
  nlohmann::json to_json() const override;
  static std::unique_ptr<MlpRouter> from_json(const nlohmann::json& j);

  const nn::MlpParams& net() const { return net_; }

 private:
  nn::MlpParams net_;
};

std::unique_ptr<MlpRouter> train_mlp_router(const Dataset& train, const ModelRegistry& registry,
                                            const nn::TrainConfig& cfg, bool standardize = true);

// Matrix factorisation: s_j(x) = <U x + u0, V_j> + b_j.
struct MfParams {
  Eigen::MatrixXd u;   // r x D
  Eigen::VectorXd u0;  // r
  Eigen::MatrixXd v;   // r x k1
  Eigen::VectorXd b;   // k1

  Eigen::Index rank() const { return u.rows(); }
  Eigen::MatrixXd predict_rows(const Eigen::MatrixXd& x_rows) const;  // N x k1
};

class MfRouter final : public Router {
 public:
  MfRouter(ModelRegistry registry, std::optional<Standardizer> standardizer, MfParams params);

  std::string type() const override { return "mf"; }
  Eigen::VectorXd predict_scores(const Eigen::VectorXd& features) const override;
  Eigen::MatrixXd predict_matrix(const Dataset& data) const override;
  nlohmann::json to_json() const override;
  static std::unique_ptr<MfRouter> from_json(const nlohmann::json& j);

  const MfParams& params() const { return params_; }

 private:
  MfParams params_;
};

inline constexpr int kDefaultMfRank = 32;

// Trained by mini-batch Adam on MSE; cfg.loss and cfg.dropout_p are ignored.
std::unique_ptr<MfRouter> train_mf_router(const Dataset& train, const ModelRegistry& registry, int rank,
                                          const nn::TrainConfig& cfg, bool standardize = true);

// Uses the true scores of each record. Defines zero regret.
class OracleRouter final : public Router {
 public:
  explicit OracleRouter(ModelRegistry registry) : Router(std::move(registry)) {}

  std::string type() const override { return "oracle"; }
  Eigen::VectorXd predict_scores(const Eigen::VectorXd& features) const override;
  Eigen::VectorXd predict_record(const ExampleRecord& record) const override;
  nlohmann::json to_json() const override;
};

}  // namespace scout
