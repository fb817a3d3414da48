#include "scout/scout_router.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "scout/stats.hpp"

namespace scout {

// ---- proxy weights ------------------------------------------------------

ProxyWeights ProxyWeights::equal(Eigen::Index k1) {
  ProxyWeights w;
  w.w = Eigen::VectorXd::Constant(k1, 1.0 / static_cast<double>(k1));
  return w;
}

ProxyWeights ProxyWeights::one_hot(Eigen::Index k1, Eigen::Index j) {
  ProxyWeights w;
  w.w = Eigen::VectorXd::Zero(k1);
  w.w[j] = 1.0;
  return w;
}

Eigen::VectorXd true_partitions(const Eigen::MatrixXd& scores_dep, double temperature) {
  Eigen::VectorXd z(scores_dep.rows());
  for (Eigen::Index i = 0; i < scores_dep.rows(); ++i) z[i] = true_partition(scores_dep.row(i).transpose(), temperature);
  return z;
}

Eigen::MatrixXd softmax_rows(const Eigen::MatrixXd& scores, double temperature) {
  Eigen::MatrixXd p(scores.rows(), scores.cols());
  for (Eigen::Index i = 0; i < scores.rows(); ++i) p.row(i) = softmax_targets(scores.row(i).transpose(), temperature).transpose();
  return p;
}

ProxyWeights estimate_weights(const Eigen::MatrixXd& p_hat, const Eigen::MatrixXd& p_true,
                              const Eigen::MatrixXd& scores_dep, double temperature) {
  if (p_hat.rows() != p_true.rows() || p_hat.rows() != scores_dep.rows() || p_hat.cols() != p_true.cols() ||
      p_hat.cols() != scores_dep.cols()) {
    throw std::invalid_argument("estimate_weights: inputs are not aligned");
  }
  if (p_hat.rows() < 3) throw std::invalid_argument("estimate_weights: need at least three records");
  if (!(temperature > 0.0)) throw std::invalid_argument("temperature must be positive");

  const Eigen::Index n = p_hat.rows();
  const Eigen::Index k1 = p_hat.cols();
  ProxyWeights out;
  out.s_sq.resize(k1);
  out.r_sq.resize(k1);
  out.sigma_sq.resize(k1);
  out.expectation_term.resize(k1);
  out.tau_bar_sq.resize(k1);

  std::vector<double> log_z(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) log_z[static_cast<std::size_t>(i)] = log_partition(scores_dep.row(i).transpose(), temperature);

  std::vector<double> ph(static_cast<std::size_t>(n)), pt(static_cast<std::size_t>(n)), term(static_cast<std::size_t>(n));
  for (Eigen::Index j = 0; j < k1; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto u = static_cast<std::size_t>(i);
      ph[u] = p_hat(i, j);
      pt[u] = p_true(i, j);
      term[u] = std::exp(4.0 * log_z[u] - 2.0 * scores_dep(i, j) / temperature);
    }
    out.s_sq[j] = stats::variance(ph);
    const double r = stats::pearson(pt, ph);
    out.r_sq[j] = r * r;
    out.sigma_sq[j] = out.s_sq[j] * (1.0 - out.r_sq[j]);
    out.expectation_term[j] = stats::mean(term);
    out.tau_bar_sq[j] = out.sigma_sq[j] * out.expectation_term[j];
  }

  out.w = Eigen::VectorXd::Zero(k1);
  const auto zero_count = (out.tau_bar_sq.array() <= 0.0).count();
  if (zero_count > 0) {
    // Noise-free proxies dominate; share the weight among them.
    for (Eigen::Index j = 0; j < k1; ++j) {
      if (out.tau_bar_sq[j] <= 0.0) out.w[j] = 1.0 / static_cast<double>(zero_count);
    }
  } else {
    const Eigen::ArrayXd inv = out.tau_bar_sq.array().inverse();
    out.w = (inv / inv.sum()).matrix();
  }
  return out;
}

Eigen::MatrixXd per_model_proxies(const Eigen::MatrixXd& p_hat, const Eigen::MatrixXd& scores_dep,
                                  double temperature, std::size_t* clip_count) {
  if (p_hat.rows() != scores_dep.rows() || p_hat.cols() != scores_dep.cols()) {
    throw std::invalid_argument("per_model_proxies: inputs are not aligned");
  }
  Eigen::MatrixXd proxies(p_hat.rows(), p_hat.cols());
  std::size_t clips = 0;
  for (Eigen::Index i = 0; i < p_hat.rows(); ++i) {
    for (Eigen::Index j = 0; j < p_hat.cols(); ++j) {
      double p = p_hat(i, j);
      if (!(p >= kClipFloor)) {
        p = kClipFloor;
        ++clips;
      }
      proxies(i, j) = std::exp(scores_dep(i, j) / temperature) / p;
    }
  }
  if (clip_count) *clip_count += clips;
  return proxies;
}

Eigen::VectorXd build_proxy_targets(const Eigen::MatrixXd& p_hat, const Eigen::MatrixXd& scores_dep,
                                    double temperature, const ProxyWeights& weights, std::size_t* clip_count) {
  if (weights.w.size() != p_hat.cols()) throw std::invalid_argument("weight length differs from k1");
  return per_model_proxies(p_hat, scores_dep, temperature, clip_count) * weights.w;
}

// ---- cross-validation ---------------------------------------------------

std::vector<int> fold_assignment(std::size_t n, int folds, std::uint64_t seed) {
  if (folds < 2) throw std::invalid_argument("need at least two folds");
  if (n < static_cast<std::size_t>(folds)) throw std::invalid_argument("fewer records than folds");
  auto order = iota_indices(n);
  Rng rng(seed);
  rng.shuffle(order);
  std::vector<int> fold(n);
  const auto f = static_cast<std::size_t>(folds);
  for (std::size_t b = 0; b < f; ++b) {
    const std::size_t lo = b * n / f;
    const std::size_t hi = (b + 1) * n / f;
    for (std::size_t p = lo; p < hi; ++p) fold[order[p]] = static_cast<int>(b);
  }
  return fold;
}

Eigen::MatrixXd cv_predict_probs(const Eigen::MatrixXd& x_rows, const Eigen::MatrixXd& targets,
                                 const nn::TrainConfig& cfg, int folds) {
  const auto n = static_cast<std::size_t>(x_rows.rows());
  const auto fold = fold_assignment(n, folds, Rng::derive(cfg.seed, 11));
  Eigen::MatrixXd out(x_rows.rows(), targets.cols());
  for (int f = 0; f < folds; ++f) {
    std::vector<Eigen::Index> in, held;
    for (std::size_t i = 0; i < n; ++i) (fold[i] == f ? held : in).push_back(static_cast<Eigen::Index>(i));
    nn::TrainConfig fold_cfg = cfg;
    fold_cfg.seed = Rng::derive(cfg.seed, 100 + static_cast<std::uint64_t>(f));
    const auto fit = nn::train(x_rows(in, Eigen::all), targets(in, Eigen::all), fold_cfg);
    out(held, Eigen::all) = nn::predict(fit.params, x_rows(held, Eigen::all));
  }
  return out;
}

PartitionRegressor fit_partition(const Eigen::MatrixXd& x_rows, const Eigen::VectorXd& proxy_targets, double alpha) {
  return fit_ridge(x_rows, proxy_targets, alpha);
}

// ---- ScoutRouter --------------------------------------------------------

Eigen::VectorXd recover_dependent_scores(const Eigen::VectorXd& p_hat, double z_hat, double temperature,
                                         std::size_t* clip_count) {
  std::size_t clips = 0;
  if (!(z_hat >= kClipFloor)) {
    z_hat = kClipFloor;
    ++clips;
  }
  Eigen::VectorXd s(p_hat.size());
  const double log_z = std::log(z_hat);
  for (Eigen::Index j = 0; j < p_hat.size(); ++j) {
    double p = p_hat[j];
    if (!(p >= kClipFloor)) {
      p = kClipFloor;
      ++clips;
    }
    s[j] = temperature * (std::log(p) + log_z);
  }
  if (clip_count) *clip_count += clips;
  return s;
}

ScoutRouter::ScoutRouter(ModelRegistry registry, std::optional<Standardizer> standardizer, nn::MlpParams prob_model,
                         PartitionRegressor partition, ProxyWeights weights, double temperature)
    : Router(std::move(registry), std::move(standardizer)),
      prob_model_(std::move(prob_model)),
      partition_(std::move(partition)),
      weights_(std::move(weights)),
      temperature_(temperature) {
  if (prob_model_.output_dim() != static_cast<Eigen::Index>(registry_.num_dependent())) {
    throw std::invalid_argument("probability model output size differs from k1");
  }
  if (prob_model_.head() != nn::OutputHead::Softmax) throw std::invalid_argument("probability model needs a softmax head");
}

Eigen::VectorXd ScoutRouter::predict_probabilities(const Eigen::VectorXd& features) const {
  return nn::forward(prob_model_, prepare(features));
}

double ScoutRouter::predict_partition(const Eigen::VectorXd& features) const {
  return partition_.predict(prepare(features))[0];
}

Eigen::VectorXd ScoutRouter::scores_from(const Eigen::VectorXd& p_hat, double z_hat) const {
  std::size_t clips = 0;
  Eigen::VectorXd s = with_invariant(recover_dependent_scores(p_hat, z_hat, temperature_, &clips));
  if (clips) clip_events_.fetch_add(clips);
  return s;
}

Eigen::VectorXd ScoutRouter::predict_scores(const Eigen::VectorXd& features) const {
  const Eigen::VectorXd x = prepare(features);
  return scores_from(nn::forward(prob_model_, x), partition_.predict(x)[0]);
}

Eigen::MatrixXd ScoutRouter::predict_matrix(const Dataset& data) const {
  const Eigen::MatrixXd x = prepare_rows(data);
  const Eigen::MatrixXd p = nn::predict(prob_model_, x);
  const Eigen::MatrixXd z = partition_.predict_rows(x);
  Eigen::MatrixXd out(x.rows(), static_cast<Eigen::Index>(registry_.size()));
  for (Eigen::Index i = 0; i < x.rows(); ++i) out.row(i) = scores_from(p.row(i).transpose(), z(i, 0)).transpose();
  return out;
}

namespace {
nlohmann::json weights_to_json(const ProxyWeights& w) {
  nlohmann::json j;
  j["w"] = vector_to_json(w.w);
  auto opt = [&j](const char* key, const Eigen::VectorXd& v) {
    if (v.size() > 0) j[key] = vector_to_json(v);
  };
  opt("s_sq", w.s_sq);
  opt("r_sq", w.r_sq);
  opt("sigma_sq", w.sigma_sq);
  opt("expectation_term", w.expectation_term);
  opt("tau_bar_sq", w.tau_bar_sq);
  return j;
}

ProxyWeights weights_from_json(const nlohmann::json& j) {
  ProxyWeights w;
  w.w = vector_from_json(j.at("w"));
  auto opt = [&j](const char* key, Eigen::VectorXd& v) {
    if (j.contains(key)) v = vector_from_json(j[key]);
  };
  opt("s_sq", w.s_sq);
  opt("r_sq", w.r_sq);
  opt("sigma_sq", w.sigma_sq);
  opt("expectation_term", w.expectation_term);
  opt("tau_bar_sq", w.tau_bar_sq);
  return w;
}

std::optional<Standardizer> optional_standardizer(const nlohmann::json& j) {
  if (j.contains("standardizer")) return standardizer_from_json(j["standardizer"]);
  return std::nullopt;
}
}  // namespace

nlohmann::json ScoutRouter::to_json() const {
  nlohmann::json j = base_json();
  j["temperature"] = temperature_;
  j["prob_model"] = mlp_to_json(prob_model_);
  j["partition"] = ridge_to_json(partition_);
  j["proxy_weights"] = weights_to_json(weights_);
  return j;
}

std::unique_ptr<ScoutRouter> ScoutRouter::from_json(const nlohmann::json& j) {
  return std::make_unique<ScoutRouter>(registry_from_json(j.at("registry")), optional_standardizer(j),
                                       mlp_from_json(j.at("prob_model")), ridge_from_json(j.at("partition")),
                                       weights_from_json(j.at("proxy_weights")), j.at("temperature").get<double>());
}

std::unique_ptr<ScoutRouter> train_scout(const Dataset& train, const ModelRegistry& registry,
                                         const ScoutOptions& options) {
  options.smoothing.validate();
  options.train.validate();
  if (train.empty()) throw std::invalid_argument("train_scout: empty training set");
  const double t = options.smoothing.temperature;

  std::optional<Standardizer> standardizer;
  if (options.standardize) standardizer = fit_standardizer(train);
  const Dataset prepared = standardizer ? standardizer->apply(train) : train;
  const Eigen::MatrixXd x = prepared.feature_matrix();
  const Eigen::MatrixXd scores = train.score_matrix();
  if (scores.cols() != static_cast<Eigen::Index>(registry.num_dependent())) {
    throw std::invalid_argument("train_scout: score length differs from registry k1");
  }

  const TagStats tags = compute_tag_means(train);
  Eigen::MatrixXd targets(x.rows(), scores.cols());
  for (std::size_t i = 0; i < train.size(); ++i) {
    const auto smoothed = smooth_scores(train.records[i], tags, options.smoothing);
    targets.row(static_cast<Eigen::Index>(i)) = softmax_targets(smoothed, t).transpose();
  }

  nn::TrainConfig cfg = options.train;
  cfg.loss = nn::LossKind::KL;
  auto fit = nn::train(x, targets, cfg);

  const Eigen::MatrixXd p_oof = cv_predict_probs(x, targets, cfg, options.folds);
  const Eigen::MatrixXd p_true = softmax_rows(scores, t);
  ProxyWeights weights = estimate_weights(p_oof, p_true, scores, t);

  const Eigen::MatrixXd p_proxy = options.out_of_fold_proxies ? p_oof : nn::predict(fit.params, x);
  ScoutTrainingLog log;
  log.epoch_loss = fit.epoch_loss;
  log.unseen_tags = tags.unseen_tag_count();

  Eigen::VectorXd z_targets;
  switch (options.proxy_mode) {
    case ProxyMode::Optimal:
      z_targets = build_proxy_targets(p_proxy, scores, t, weights, &log.proxy_clip_count);
      break;
    case ProxyMode::Equal: {
      ProxyWeights eq = ProxyWeights::equal(scores.cols());
      z_targets = build_proxy_targets(p_proxy, scores, t, eq, &log.proxy_clip_count);
      break;
    }
    case ProxyMode::OneHot: {
      Eigen::Index best = 0;
      weights.w.maxCoeff(&best);
      z_targets = build_proxy_targets(p_proxy, scores, t, ProxyWeights::one_hot(scores.cols(), best),
                                      &log.proxy_clip_count);
      break;
    }
    case ProxyMode::TrueZ:
      z_targets = true_partitions(scores, t);
      break;
  }

  auto partition = fit_partition(x, z_targets, options.alpha);
  auto router = std::make_unique<ScoutRouter>(registry, std::move(standardizer), std::move(fit.params),
                                              std::move(partition), std::move(weights), t);
  router->log = std::move(log);
  return router;
}

// ---- no-decoupling ablation ---------------------------------------------

NoDecouplingRouter::NoDecouplingRouter(ModelRegistry registry, std::optional<Standardizer> standardizer,
                                       nn::MlpParams prob_model, double temperature)
    : Router(std::move(registry), std::move(standardizer)),
      prob_model_(std::move(prob_model)),
      temperature_(temperature) {
  if (prob_model_.output_dim() != static_cast<Eigen::Index>(registry_.size())) {
    throw std::invalid_argument("ablation network output size differs from k");
  }
}

Eigen::VectorXd NoDecouplingRouter::predict_scores(const Eigen::VectorXd& features) const {
  const Eigen::VectorXd p = nn::forward(prob_model_, prepare(features));
  return temperature_ * p.cwiseMax(kClipFloor).array().log().matrix();
}

Eigen::MatrixXd NoDecouplingRouter::predict_matrix(const Dataset& data) const {
  const Eigen::MatrixXd p = nn::predict(prob_model_, prepare_rows(data));
  return temperature_ * p.cwiseMax(kClipFloor).array().log().matrix();
}

nlohmann::json NoDecouplingRouter::to_json() const {
  nlohmann::json j = base_json();
  j["temperature"] = temperature_;
  j["prob_model"] = mlp_to_json(prob_model_);
  return j;
}

std::unique_ptr<NoDecouplingRouter> NoDecouplingRouter::from_json(const nlohmann::json& j) {
  return std::make_unique<NoDecouplingRouter>(registry_from_json(j.at("registry")), optional_standardizer(j),
                                              mlp_from_json(j.at("prob_model")), j.at("temperature").get<double>());
}

std::unique_ptr<NoDecouplingRouter> train_no_decoupling(const Dataset& train, const ModelRegistry& registry,
                                                        const SmoothingConfig& smoothing,
                                                        const nn::TrainConfig& train_cfg, bool standardize) {
  smoothing.validate();
  if (train.empty()) throw std::invalid_argument("train_no_decoupling: empty training set");
  std::optional<Standardizer> standardizer;
  if (standardize) standardizer = fit_standardizer(train);
  const Dataset prepared = standardizer ? standardizer->apply(train) : train;
  const Eigen::MatrixXd x = prepared.feature_matrix();

  const TagStats tags = compute_tag_means(train);
  const auto k = static_cast<Eigen::Index>(registry.size());
  const auto k1 = static_cast<Eigen::Index>(registry.num_dependent());
  const Eigen::VectorXd inv = registry.invariant_scores();
  Eigen::MatrixXd targets(x.rows(), k);
  for (std::size_t i = 0; i < train.size(); ++i) {
    Eigen::VectorXd full(k);
    full.head(k1) = smooth_scores(train.records[i], tags, smoothing);
    full.tail(k - k1) = inv;
    targets.row(static_cast<Eigen::Index>(i)) = softmax_targets(full, smoothing.temperature).transpose();
  }
  nn::TrainConfig cfg = train_cfg;
  cfg.loss = nn::LossKind::KL;
  auto fit = nn::train(x, targets, cfg);
  return std::make_unique<NoDecouplingRouter>(registry, std::move(standardizer), std::move(fit.params),
                                              smoothing.temperature);
}

// ---- serialisation helpers ----------------------------------------------

nlohmann::json vector_to_json(const Eigen::VectorXd& v) {
  auto a = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

Eigen::VectorXd vector_from_json(const nlohmann::json& j) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  return v;
}

nlohmann::json mlp_to_json(const nn::MlpParams& p) {
  return {{"input_dim", p.input_dim()},
          {"hidden", p.hidden_dim()},
          {"output_dim", p.output_dim()},
          {"head", p.head() == nn::OutputHead::Softmax ? "softmax" : "identity"},
          {"theta", vector_to_json(p.flat())}};
}

nn::MlpParams mlp_from_json(const nlohmann::json& j) {
  const auto head = j.at("head").get<std::string>() == "softmax" ? nn::OutputHead::Softmax : nn::OutputHead::Identity;
  nn::MlpParams p(j.at("input_dim").get<Eigen::Index>(), j.at("hidden").get<Eigen::Index>(),
                  j.at("output_dim").get<Eigen::Index>(), head);
  Eigen::VectorXd theta = vector_from_json(j.at("theta"));
  if (theta.size() != p.flat().size()) throw std::invalid_argument("checkpoint: parameter count mismatch");
  p.flat() = std::move(theta);
  return p;
}

nlohmann::json ridge_to_json(const RidgeModel& m) {
  auto coef = nlohmann::json::array();
  for (Eigen::Index t = 0; t < m.coef.cols(); ++t) coef.push_back(vector_to_json(m.coef.col(t)));
  return {{"alpha", m.alpha}, {"coef", coef}, {"intercept", vector_to_json(m.intercept)}};
}

RidgeModel ridge_from_json(const nlohmann::json& j) {
  RidgeModel m;
  m.alpha = j.at("alpha").get<double>();
  m.intercept = vector_from_json(j.at("intercept"));
  const auto& coef = j.at("coef");
  if (coef.size() != static_cast<std::size_t>(m.intercept.size()) || coef.empty()) {
    throw std::invalid_argument("checkpoint: malformed ridge coefficients");
  }
  m.coef.resize(static_cast<Eigen::Index>(coef[0].size()), m.intercept.size());
  for (std::size_t t = 0; t < coef.size(); ++t) m.coef.col(static_cast<Eigen::Index>(t)) = vector_from_json(coef[t]);
  return m;
}

}  // namespace scout
