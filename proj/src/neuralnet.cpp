#include "scout/neuralnet.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace scout::nn {

namespace {

constexpr double kProbFloor = 1e-12;

Eigen::MatrixXd softmax_cols(const Eigen::MatrixXd& logits) {
  Eigen::MatrixXd out(logits.rows(), logits.cols());
  for (Eigen::Index c = 0; c < logits.cols(); ++c) {
    const double m = logits.col(c).maxCoeff();
    Eigen::ArrayXd e = (logits.col(c).array() - m).exp();
    out.col(c) = (e / e.sum()).matrix();
  }
  return out;
}

Eigen::MatrixXd relu(const Eigen::MatrixXd& a) { return a.cwiseMax(0.0); }

void check_targets(const ForwardCache& cache, const Eigen::MatrixXd& targets) {
  if (targets.rows() != cache.output.rows() || targets.cols() != cache.output.cols()) {
    throw std::invalid_argument("target shape does not match the cached forward pass");
  }
}

}  // namespace

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw std::invalid_argument("learning_rate must be positive");
  if (!(weight_decay >= 0.0)) throw std::invalid_argument("weight_decay must be non-negative");
  if (batch_size < 1) throw std::invalid_argument("batch_size must be positive");
  if (epochs < 0) throw std::invalid_argument("epochs must be non-negative");
  if (!(dropout_p >= 0.0 && dropout_p < 1.0)) throw std::invalid_argument("dropout_p must lie in [0, 1)");
  if (hidden < 1) throw std::invalid_argument("hidden width must be positive");
}

MlpParams::MlpParams(Eigen::Index input_dim, Eigen::Index hidden, Eigen::Index output_dim, OutputHead head)
    : in_(input_dim),
      hidden_(hidden),
      out_(output_dim),
      head_(head),
      theta_(Eigen::VectorXd::Zero(parameter_count(input_dim, hidden, output_dim))) {
  if (in_ < 1 || hidden_ < 1 || out_ < 1) throw std::invalid_argument("network dimensions must be positive");
}

Eigen::Index MlpParams::parameter_count(Eigen::Index in, Eigen::Index hidden, Eigen::Index out) {
  return hidden * in + hidden + hidden * hidden + hidden + out * hidden + out;
}

MlpParams MlpParams::initialize(Eigen::Index input_dim, Eigen::Index hidden, Eigen::Index output_dim,
                                OutputHead head, Rng& rng) {
  MlpParams p(input_dim, hidden, output_dim, head);
  auto fill = [&rng](MatMap w) {
    const double bound = std::sqrt(6.0 / static_cast<double>(w.cols()));
    for (Eigen::Index j = 0; j < w.cols(); ++j) {
      for (Eigen::Index i = 0; i < w.rows(); ++i) w(i, j) = rng.uniform(-bound, bound);
    }
  };
  fill(p.w1());
  fill(p.w2());
  fill(p.w3());
  return p;
}

DropoutMasks DropoutMasks::ones(Eigen::Index hidden, Eigen::Index batch) {
  return {Eigen::MatrixXd::Ones(hidden, batch), Eigen::MatrixXd::Ones(hidden, batch)};
}

DropoutMasks DropoutMasks::sample(Eigen::Index hidden, Eigen::Index batch, double p, Rng& rng) {
  if (p <= 0.0) return ones(hidden, batch);
  const double keep_scale = 1.0 / (1.0 - p);
  DropoutMasks m{Eigen::MatrixXd(hidden, batch), Eigen::MatrixXd(hidden, batch)};
  for (auto* mat : {&m.hidden1, &m.hidden2}) {
    for (Eigen::Index c = 0; c < batch; ++c) {
      for (Eigen::Index r = 0; r < hidden; ++r) (*mat)(r, c) = rng.uniform() < p ? 0.0 : keep_scale;
    }
  }
  return m;
}

ForwardCache forward_train(const MlpParams& params, const Eigen::MatrixXd& x_cols, DropoutMasks masks) {
  if (x_cols.rows() != params.input_dim()) {
    throw std::invalid_argument("input dimension " + std::to_string(x_cols.rows()) + " does not match network (" +
                                std::to_string(params.input_dim()) + ")");
  }
  ForwardCache c;
  c.input = x_cols;
  c.pre1 = (params.w1() * x_cols).colwise() + params.b1();
  c.act1 = relu(c.pre1).cwiseProduct(masks.hidden1);
  c.pre2 = (params.w2() * c.act1).colwise() + params.b2();
  c.act2 = relu(c.pre2).cwiseProduct(masks.hidden2);
  c.logits = (params.w3() * c.act2).colwise() + params.b3();
  c.output = params.head() == OutputHead::Softmax ? softmax_cols(c.logits) : c.logits;
  c.masks = std::move(masks);
  return c;
}

Eigen::MatrixXd predict(const MlpParams& params, const Eigen::MatrixXd& x_rows) {
  if (x_rows.cols() != params.input_dim()) throw std::invalid_argument("feature dimension mismatch");
  const Eigen::MatrixXd x = x_rows.transpose();
  Eigen::MatrixXd h1 = relu((params.w1() * x).colwise() + params.b1());
  Eigen::MatrixXd h2 = relu((params.w2() * h1).colwise() + params.b2());
  Eigen::MatrixXd logits = (params.w3() * h2).colwise() + params.b3();
  if (params.head() == OutputHead::Softmax) logits = softmax_cols(logits);
  return logits.transpose();
}

Eigen::VectorXd forward(const MlpParams& params, const Eigen::VectorXd& x) {
  return predict(params, x.transpose()).row(0).transpose();
}

double kl_loss(const Eigen::VectorXd& target, const Eigen::VectorXd& predicted) {
  if (target.size() != predicted.size()) throw std::invalid_argument("kl_loss: length mismatch");
  double loss = 0.0;
  for (Eigen::Index j = 0; j < target.size(); ++j) {
    if (target[j] <= 0.0) continue;
    loss += target[j] * (std::log(target[j]) - std::log(std::max(predicted[j], kProbFloor)));
  }
  return loss;
}

double batch_loss(const MlpParams& params, const ForwardCache& cache, const Eigen::MatrixXd& targets_cols,
                  LossKind loss, double weight_decay) {
  check_targets(cache, targets_cols);
  const auto batch = static_cast<double>(cache.output.cols());
  double total = 0.0;
  if (loss == LossKind::KL) {
    for (Eigen::Index c = 0; c < cache.output.cols(); ++c) {
      total += kl_loss(targets_cols.col(c), cache.output.col(c));
    }
    total /= batch;
  } else {
    total = (cache.output - targets_cols).squaredNorm() / (batch * static_cast<double>(cache.output.rows()));
  }
  return total + 0.5 * weight_decay * params.flat().squaredNorm();
}

MlpParams backward(const MlpParams& params, const ForwardCache& cache, const Eigen::MatrixXd& targets_cols,
                   LossKind loss, double weight_decay) {
  check_targets(cache, targets_cols);
  if (cache.input.rows() != params.input_dim() || cache.logits.rows() != params.output_dim() ||
      cache.pre1.rows() != params.hidden_dim()) {
    throw std::invalid_argument("stale forward cache: shape mismatch");
  }
  const auto batch = static_cast<double>(cache.output.cols());
  Eigen::MatrixXd d_logits;
  if (loss == LossKind::KL) {
    if (params.head() != OutputHead::Softmax) throw std::invalid_argument("KL loss requires a softmax head");
    d_logits = (cache.output - targets_cols) / batch;
  } else {
    if (params.head() != OutputHead::Identity) throw std::invalid_argument("MSE loss requires an identity head");
    d_logits = 2.0 * (cache.output - targets_cols) / (batch * static_cast<double>(cache.output.rows()));
  }

  MlpParams g = params.zeros_like();
  g.w3() = d_logits * cache.act2.transpose();
  g.b3() = d_logits.rowwise().sum();
  Eigen::MatrixXd d_pre2 = (params.w3().transpose() * d_logits)
                               .cwiseProduct(cache.masks.hidden2)
                               .cwiseProduct((cache.pre2.array() > 0.0).cast<double>().matrix());
  g.w2() = d_pre2 * cache.act1.transpose();
  g.b2() = d_pre2.rowwise().sum();
  Eigen::MatrixXd d_pre1 = (params.w2().transpose() * d_pre2)
                               .cwiseProduct(cache.masks.hidden1)
                               .cwiseProduct((cache.pre1.array() > 0.0).cast<double>().matrix());
  g.w1() = d_pre1 * cache.input.transpose();
  g.b1() = d_pre1.rowwise().sum();
  if (weight_decay != 0.0) g.flat() += weight_decay * params.flat();
  return g;
}

void adam_update(Eigen::VectorXd& theta, const Eigen::VectorXd& g, AdamState& state, double lr,
                 double decoupled_decay) {
  if (g.size() != theta.size() || state.m.size() != theta.size()) {
    throw std::invalid_argument("adam_update: shape mismatch");
  }
  if (!g.allFinite()) {
    throw std::runtime_error("non-finite gradient at Adam step " + std::to_string(state.step + 1));
  }
  ++state.step;
  state.m = AdamState::beta1 * state.m + (1.0 - AdamState::beta1) * g;
  state.v = AdamState::beta2 * state.v + (1.0 - AdamState::beta2) * g.cwiseAbs2();
  const double bc1 = 1.0 - std::pow(AdamState::beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(AdamState::beta2, static_cast<double>(state.step));
  if (decoupled_decay != 0.0) theta *= (1.0 - lr * decoupled_decay);
  theta.array() -= lr * (state.m.array() / bc1) / ((state.v.array() / bc2).sqrt() + AdamState::epsilon);
  if (!theta.allFinite()) throw std::runtime_error("non-finite parameters after Adam step");
}

void adam_step(MlpParams& params, const MlpParams& grads, AdamState& state, double lr, double decoupled_decay) {
  if (!params.same_shape(grads)) throw std::invalid_argument("adam_step: shape mismatch");
  adam_update(params.flat(), grads.flat(), state, lr, decoupled_decay);
}

TrainResult train(const Eigen::MatrixXd& x_rows, const Eigen::MatrixXd& targets_rows, const TrainConfig& cfg) {
  cfg.validate();
  if (x_rows.rows() < 1) throw std::invalid_argument("train: need at least one example");
  if (x_rows.rows() != targets_rows.rows()) throw std::invalid_argument("train: feature/target row mismatch");

  const OutputHead head = cfg.loss == LossKind::KL ? OutputHead::Softmax : OutputHead::Identity;
  Rng init_rng(Rng::derive(cfg.seed, 1));
  Rng shuffle_rng(Rng::derive(cfg.seed, 2));
  Rng dropout_rng(Rng::derive(cfg.seed, 3));

  TrainResult result{MlpParams::initialize(x_rows.cols(), cfg.hidden, targets_rows.cols(), head, init_rng), {}};
  MlpParams& params = result.params;
  AdamState state(params.flat().size());
  const double coupled = cfg.decoupled_weight_decay ? 0.0 : cfg.weight_decay;
  const double decoupled = cfg.decoupled_weight_decay ? cfg.weight_decay : 0.0;

  const Eigen::MatrixXd x_cols = x_rows.transpose();
  const Eigen::MatrixXd t_cols = targets_rows.transpose();
  const auto n = static_cast<std::size_t>(x_rows.rows());
  auto order = iota_indices(n);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    double loss_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < n; start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t end = std::min(n, start + static_cast<std::size_t>(cfg.batch_size));
      const auto b = static_cast<Eigen::Index>(end - start);
      Eigen::MatrixXd xb(x_cols.rows(), b);
      Eigen::MatrixXd tb(t_cols.rows(), b);
      for (Eigen::Index c = 0; c < b; ++c) {
        const auto src = static_cast<Eigen::Index>(order[start + static_cast<std::size_t>(c)]);
        xb.col(c) = x_cols.col(src);
        tb.col(c) = t_cols.col(src);
      }
      auto masks = DropoutMasks::sample(params.hidden_dim(), b, cfg.dropout_p, dropout_rng);
      const ForwardCache cache = forward_train(params, xb, std::move(masks));
      loss_sum += batch_loss(params, cache, tb, cfg.loss, 0.0);
      ++batches;
      const MlpParams grads = backward(params, cache, tb, cfg.loss, coupled);
      adam_step(params, grads, state, cfg.learning_rate, decoupled);
    }
    result.epoch_loss.push_back(loss_sum / static_cast<double>(batches));
  }
  return result;
}

}  // namespace scout::nn
