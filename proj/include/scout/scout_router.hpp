#pragma once

#include <atomic>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "scout/dataset.hpp"
#include "scout/neuralnet.hpp"
#include "scout/ridge.hpp"
#include "scout/router.hpp"
#include "scout/smoothing.hpp"

namespace scout {

inline constexpr double kClipFloor = 1e-12;

// Combination weights for the per-model partition-function proxies,
// together with the quantities they were derived from.
struct ProxyWeights {
  Eigen::VectorXd w;                 // sums to 1
  Eigen::VectorXd s_sq;              // Var_i[p_hat_j]
  Eigen::VectorXd r_sq;              // squared correlation of p_j and p_hat_j
  Eigen::VectorXd sigma_sq;          // s_sq * (1 - r_sq)
  Eigen::VectorXd expectation_term;  // mean_i z^4 / exp(2 s_j / T)
  Eigen::VectorXd tau_bar_sq;        // sigma_sq * expectation_term

  static ProxyWeights equal(Eigen::Index k1);
  static ProxyWeights one_hot(Eigen::Index k1, Eigen::Index j);
};

// Inverse-variance weights from out-of-fold probabilities. All matrices
// are N x k1 and row-aligned.
ProxyWeights estimate_weights(const Eigen::MatrixXd& p_hat, const Eigen::MatrixXd& p_true,
                              const Eigen::MatrixXd& scores_dep, double temperature);

// Per-model proxies exp(s_j / T) / p_hat_j, N x k1. p_hat clipped at 1e-12.
Eigen::MatrixXd per_model_proxies(const Eigen::MatrixXd& p_hat, const Eigen::MatrixXd& scores_dep,
                                  double temperature, std::size_t* clip_count = nullptr);

// Weighted combination of the per-model proxies, one value per record.
Eigen::VectorXd build_proxy_targets(const Eigen::MatrixXd& p_hat, const Eigen::MatrixXd& scores_dep,
                                    double temperature, const ProxyWeights& weights,
                                    std::size_t* clip_count = nullptr);

// Partition function sum_j exp(s_j / T) per row.
Eigen::VectorXd true_partitions(const Eigen::MatrixXd& scores_dep, double temperature);

// Row-wise softmax of (optionally smoothed) scores.
Eigen::MatrixXd softmax_rows(const Eigen::MatrixXd& scores, double temperature);

// Fold index per record: contiguous blocks of a seed-shuffled index.
std::vector<int> fold_assignment(std::size_t n, int folds, std::uint64_t seed);

// Out-of-fold predictions of the probability network. x_rows must already
// be standardised. Each fold trains a fresh network on the other folds.
Eigen::MatrixXd cv_predict_probs(const Eigen::MatrixXd& x_rows, const Eigen::MatrixXd& targets,
                                 const nn::TrainConfig& cfg, int folds = 5);

using PartitionRegressor = RidgeModel;

// Ridge regressor for the partition function on standardised features.
PartitionRegressor fit_partition(const Eigen::MatrixXd& x_rows, const Eigen::VectorXd& proxy_targets,
                                 double alpha);

enum class ProxyMode { Optimal, Equal, OneHot, TrueZ };

struct ScoutOptions {
  SmoothingConfig smoothing;
  nn::TrainConfig train;
  double alpha = 1e3;
  int folds = 5;
  bool standardize = true;
  // Proxy targets from out-of-fold predictions (true) or from the final
  // network's in-sample predictions (false).
  bool out_of_fold_proxies = true;
  ProxyMode proxy_mode = ProxyMode::Optimal;
};

struct ScoutTrainingLog {
  std::vector<double> epoch_loss;
  std::size_t proxy_clip_count = 0;
  std::size_t unseen_tags = 0;
};

class ScoutRouter final : public Router {
 public:
  ScoutRouter(ModelRegistry registry, std::optional<Standardizer> standardizer, nn::MlpParams prob_model,
              PartitionRegressor partition, ProxyWeights weights, double temperature);

  std::string type() const override { return "scout"; }
  Eigen::VectorXd predict_scores(const Eigen::VectorXd& features) const override;
  Eigen::MatrixXd predict_matrix(const Dataset& data) const override;
  nlohmann::json to_json() const override;
  static std::unique_ptr<ScoutRouter> from_json(const nlohmann::json& j);

  // Estimated scores: T ln(p_hat_j z_hat) for dependent models, fixed
  // scores for invariant ones.
  Eigen::VectorXd recover_scores(const Eigen::VectorXd& features) const { return predict_scores(features); }

  Eigen::VectorXd predict_probabilities(const Eigen::VectorXd& features) const;
  double predict_partition(const Eigen::VectorXd& features) const;

  const nn::MlpParams& prob_model() const { return prob_model_; }
  const PartitionRegressor& partition() const { return partition_; }
  const ProxyWeights& weights() const { return weights_; }
  double temperature() const { return temperature_; }
  std::size_t clip_events() const { return clip_events_.load(); }

  ScoutTrainingLog log;

 private:
  Eigen::VectorXd scores_from(const Eigen::VectorXd& p_hat, double z_hat) const;

  nn::MlpParams prob_model_;
  PartitionRegressor partition_;
  ProxyWeights weights_;
  double temperature_;
  mutable std::atomic<std::size_t> clip_events_{0};
};

// Recovered dependent scores T ln(clip(p_hat_j) clip(z_hat)).
Eigen::VectorXd recover_dependent_scores(const Eigen::VectorXd& p_hat, double z_hat, double temperature,
                                         std::size_t* clip_count = nullptr);

std::unique_ptr<ScoutRouter> train_scout(const Dataset& train, const ModelRegistry& registry,
                                         const ScoutOptions& options);

// Ablation: one network over the full score vector (dependent scores
// smoothed, invariant fixed scores appended) with utilities T ln p_hat_j - c_j.
class NoDecouplingRouter final : public Router {
 public:
  NoDecouplingRouter(ModelRegistry registry, std::optional<Standardizer> standardizer, nn::MlpParams prob_model,
                     double temperature);

  std::string type() const override { return "scout_no_dc"; }
  Eigen::VectorXd predict_scores(const Eigen::VectorXd& features) const override;
  Eigen::MatrixXd predict_matrix(const Dataset& data) const override;
  nlohmann::json to_json() const override;
  static std::unique_ptr<NoDecouplingRouter> from_json(const nlohmann::json& j);

  const nn::MlpParams& prob_model() const { return prob_model_; }

 private:
  nn::MlpParams prob_model_;
  double temperature_;
};

// Default epoch count for the ablation.
inline constexpr int kNoDecouplingEpochs = 25;

std::unique_ptr<NoDecouplingRouter> train_no_decoupling(const Dataset& train, const ModelRegistry& registry,
                                                        const SmoothingConfig& smoothing,
                                                        const nn::TrainConfig& cfg, bool standardize = true);

// Serialisation helpers shared with the baselines.
nlohmann::json mlp_to_json(const nn::MlpParams& p);
nn::MlpParams mlp_from_json(const nlohmann::json& j);
nlohmann::json ridge_to_json(const RidgeModel& m);
RidgeModel ridge_from_json(const nlohmann::json& j);
nlohmann::json vector_to_json(const Eigen::VectorXd& v);
Eigen::VectorXd vector_from_json(const nlohmann::json& j);

}  // namespace scout
