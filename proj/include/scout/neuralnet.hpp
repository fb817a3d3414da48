#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "scout/rng.hpp"

namespace scout::nn {

enum class OutputHead { Softmax, Identity };
enum class LossKind { KL, MSE };

struct TrainConfig {
  double learning_rate = 1e-4;
  double weight_decay = 1e-4;
  int batch_size = 128;
  int epochs = 10;
  double dropout_p = 0.2;
  std::uint64_t seed = 0;
  LossKind loss = LossKind::KL;
  int hidden = 128;
  // AdamW-style decay instead of adding weight_decay * theta to the gradient.
  bool decoupled_weight_decay = false;

  void validate() const;
};

// D -> H -> H -> K perceptron, parameters stored in one flat vector:
// w1 (H x D), b1 (H), w2 (H x H), b2 (H), w3 (K x H), b3 (K); matrices column-major.
class MlpParams {
 public:
  using MatMap = Eigen::Map<Eigen::MatrixXd>;
  using ConstMatMap = Eigen::Map<const Eigen::MatrixXd>;
  using VecMap = Eigen::Map<Eigen::VectorXd>;
  using ConstVecMap = Eigen::Map<const Eigen::VectorXd>;

  MlpParams() = default;
  MlpParams(Eigen::Index input_dim, Eigen::Index hidden, Eigen::Index output_dim, OutputHead head);

  // Uniform He fan-in initialisation for weights, zero biases.
  static MlpParams initialize(Eigen::Index input_dim, Eigen::Index hidden, Eigen::Index output_dim,
                              OutputHead head, Rng& rng);

  Eigen::Index input_dim() const { return in_; }
  Eigen::Index hidden_dim() const { return hidden_; }
  Eigen::Index output_dim() const { return out_; }
  OutputHead head() const { return head_; }

  Eigen::VectorXd& flat() { return theta_; }
  const Eigen::VectorXd& flat() const { return theta_; }
  static Eigen::Index parameter_count(Eigen::Index in, Eigen::Index hidden, Eigen::Index out);

  MatMap w1() { return {theta_.data() + off_w1(), hidden_, in_}; }
  VecMap b1() { return {theta_.data() + off_b1(), hidden_}; }
  MatMap w2() { return {theta_.data() + off_w2(), hidden_, hidden_}; }
  VecMap b2() { return {theta_.data() + off_b2(), hidden_}; }
  MatMap w3() { return {theta_.data() + off_w3(), out_, hidden_}; }
  VecMap b3() { return {theta_.data() + off_b3(), out_}; }
  ConstMatMap w1() const { return {theta_.data() + off_w1(), hidden_, in_}; }
  ConstVecMap b1() const { return {theta_.data() + off_b1(), hidden_}; }
  ConstMatMap w2() const { return {theta_.data() + off_w2(), hidden_, hidden_}; }
  ConstVecMap b2() const { return {theta_.data() + off_b2(), hidden_}; }
  ConstMatMap w3() const { return {theta_.data() + off_w3(), out_, hidden_}; }
  ConstVecMap b3() const { return {theta_.data() + off_b3(), out_}; }

  // Same architecture, all parameters zero.
  MlpParams zeros_like() const { return MlpParams(in_, hidden_, out_, head_); }

  bool same_shape(const MlpParams& o) const {
    return in_ == o.in_ && hidden_ == o.hidden_ && out_ == o.out_;
  }

 private:
  Eigen::Index off_w1() const { return 0; }
  Eigen::Index off_b1() const { return hidden_ * in_; }
  Eigen::Index off_w2() const { return off_b1() + hidden_; }
  Eigen::Index off_b2() const { return off_w2() + hidden_ * hidden_; }
  Eigen::Index off_w3() const { return off_b2() + hidden_; }
  Eigen::Index off_b3() const { return off_w3() + out_ * hidden_; }

  Eigen::Index in_ = 0;
  Eigen::Index hidden_ = 0;
  Eigen::Index out_ = 0;
  OutputHead head_ = OutputHead::Softmax;
  Eigen::VectorXd theta_;
};

// Inverted-dropout masks for one batch: entries are 0 or 1 / (1 - p).
struct DropoutMasks {
  Eigen::MatrixXd hidden1;  // H x B
  Eigen::MatrixXd hidden2;  // H x B

  static DropoutMasks ones(Eigen::Index hidden, Eigen::Index batch);
  static DropoutMasks sample(Eigen::Index hidden, Eigen::Index batch, double p, Rng& rng);
};

// Activations of a train-mode pass over a batch stored column-per-example.
struct ForwardCache {
  Eigen::MatrixXd input;   // D x B
  Eigen::MatrixXd pre1;    // H x B
  Eigen::MatrixXd act1;    // after ReLU and dropout
  Eigen::MatrixXd pre2;
  Eigen::MatrixXd act2;
  Eigen::MatrixXd logits;  // K x B
  Eigen::MatrixXd output;  // softmax(logits) or logits
  DropoutMasks masks;
};

// Eval-mode forward for one example.
Eigen::VectorXd forward(const MlpParams& params, const Eigen::VectorXd& x);

// Eval-mode forward for a row-per-example matrix; returns N x K.
Eigen::MatrixXd predict(const MlpParams& params, const Eigen::MatrixXd& x_rows);

// Train-mode forward over a D x B batch with fixed masks.
ForwardCache forward_train(const MlpParams& params, const Eigen::MatrixXd& x_cols, DropoutMasks masks);

// KL(target || predicted); predicted entries clipped at 1e-12 before the log.
double kl_loss(const Eigen::VectorXd& target, const Eigen::VectorXd& predicted);

// Batch-mean loss of a cached pass plus weight_decay * 0.5 * ||theta||^2.
double batch_loss(const MlpParams& params, const ForwardCache& cache, const Eigen::MatrixXd& targets_cols,
                  LossKind loss, double weight_decay);

// Analytic gradient of batch_loss with respect to every parameter.
MlpParams backward(const MlpParams& params, const ForwardCache& cache, const Eigen::MatrixXd& targets_cols,
                   LossKind loss, double weight_decay);

struct AdamState {
  static constexpr double beta1 = 0.9;
  static constexpr double beta2 = 0.999;
  static constexpr double epsilon = 1e-8;

  Eigen::VectorXd m;
  Eigen::VectorXd v;
  std::int64_t step = 0;

  explicit AdamState(Eigen::Index n = 0) : m(Eigen::VectorXd::Zero(n)), v(Eigen::VectorXd::Zero(n)) {}
};

// Bias-corrected Adam update of a flat parameter vector in place.
// Throws on a non-finite gradient.
void adam_update(Eigen::VectorXd& theta, const Eigen::VectorXd& grad, AdamState& state, double lr,
                 double decoupled_decay = 0.0);

void adam_step(MlpParams& params, const MlpParams& grads, AdamState& state, double lr,
               double decoupled_decay = 0.0);

struct TrainResult {
  MlpParams params;
  std::vector<double> epoch_loss;  // mean batch loss per epoch (without the decay term)
};

// Mini-batch Adam training. x_rows is N x D, targets_rows is N x K.
TrainResult train(const Eigen::MatrixXd& x_rows, const Eigen::MatrixXd& targets_rows, const TrainConfig& cfg);

}  // namespace scout::nn
