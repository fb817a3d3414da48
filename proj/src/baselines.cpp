#include "scout/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "scout/scout_router.hpp"
#include "scout/stats.hpp"

namespace scout {

namespace {

std::optional<Standardizer> maybe_fit(const Dataset& train, bool standardize) {
  if (standardize) return fit_standardizer(train);
  return std::nullopt;
}

std::optional<Standardizer> optional_standardizer(const nlohmann::json& j) {
  if (j.contains("standardizer")) return standardizer_from_json(j["standardizer"]);
  return std::nullopt;
}

// Record positions sorted by id.
std::vector<std::size_t> id_order(const Dataset& data) {
  auto order = iota_indices(data.size());
  std::sort(order.begin(), order.end(),
            [&data](std::size_t a, std::size_t b) { return data.records[a].id < data.records[b].id; });
  return order;
}

// Column means over the given rows, accumulated in the order given.
Eigen::VectorXd column_means(const Eigen::MatrixXd& m, const std::vector<std::size_t>& rows) {
  Eigen::VectorXd out(m.cols());
  for (Eigen::Index c = 0; c < m.cols(); ++c) {
    stats::CompensatedSum acc;
    for (std::size_t r : rows) acc.add(m(static_cast<Eigen::Index>(r), c));
    out[c] = acc.value() / static_cast<double>(rows.size());
  }
  return out;
}

void check_train(const Dataset& train, const ModelRegistry& registry) {
  if (train.empty()) throw std::invalid_argument("empty training set");
  if (train.records.front().scores_dep.size() != static_cast<Eigen::Index>(registry.num_dependent())) {
    throw std::invalid_argument("score length differs from registry k1");
  }
}

Eigen::MatrixXd matrix_from_json(const nlohmann::json& j) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  Eigen::VectorXd flat = vector_from_json(j.at("data"));
  if (flat.size() != rows * cols) throw std::invalid_argument("checkpoint: matrix size mismatch");
  return Eigen::Map<Eigen::MatrixXd>(flat.data(), rows, cols);
}

nlohmann::json matrix_to_json(const Eigen::MatrixXd& m) {
  Eigen::VectorXd flat = Eigen::Map<const Eigen::VectorXd>(m.data(), m.size());
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", vector_to_json(flat)}};
}

}  // namespace

// ---- input-agnostic ------------------------------------------------------

InputAgnosticRouter::InputAgnosticRouter(ModelRegistry registry, Eigen::VectorXd dependent_means)
    : Router(std::move(registry)) {
  scores_ = with_invariant(dependent_means);
}

Eigen::VectorXd InputAgnosticRouter::predict_scores(const Eigen::VectorXd&) const { return scores_; }

nlohmann::json InputAgnosticRouter::to_json() const {
  nlohmann::json j = base_json();
  j["dependent_means"] = vector_to_json(scores_.head(static_cast<Eigen::Index>(registry_.num_dependent())));
  return j;
}

std::unique_ptr<InputAgnosticRouter> InputAgnosticRouter::from_json(const nlohmann::json& j) {
  return std::make_unique<InputAgnosticRouter>(registry_from_json(j.at("registry")),
                                               vector_from_json(j.at("dependent_means")));
}

std::unique_ptr<InputAgnosticRouter> train_input_agnostic(const Dataset& train, const ModelRegistry& registry) {
  check_train(train, registry);
  return std::make_unique<InputAgnosticRouter>(registry, column_means(train.score_matrix(), id_order(train)));
}

// ---- always-m -----------------------------------------------------------

AlwaysModelRouter::AlwaysModelRouter(ModelRegistry registry, std::size_t index)
    : Router(std::move(registry)), index_(index) {
  if (index_ >= registry_.size()) throw std::invalid_argument("always-model index out of range");
}

Eigen::VectorXd AlwaysModelRouter::predict_scores(const Eigen::VectorXd&) const {
  Eigen::VectorXd s = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(registry_.size()));
  s[static_cast<Eigen::Index>(index_)] = 1.0;
  return s;
}

RouteDecision AlwaysModelRouter::decide(const Eigen::VectorXd& scores, const CostVector& cost) const {
  if (!cost.feasible(static_cast<Eigen::Index>(index_))) {
    throw NoFeasibleModel();
  }
  RouteDecision d{index_, Eigen::VectorXd::Constant(scores.size(), -kInfiniteCost)};
  d.utilities[static_cast<Eigen::Index>(index_)] = scores[static_cast<Eigen::Index>(index_)] - cost[static_cast<Eigen::Index>(index_)];
  return d;
}

nlohmann::json AlwaysModelRouter::to_json() const {
  nlohmann::json j = base_json();
  j["index"] = index_;
  return j;
}

// ---- kNN ----------------------------------------------------------------

KnnRouter::KnnRouter(ModelRegistry registry, std::optional<Standardizer> standardizer, Eigen::MatrixXd train_x,
                     Eigen::MatrixXd train_scores, std::vector<std::string> ids, std::size_t k_neighbors)
    : Router(std::move(registry), std::move(standardizer)),
      x_(std::move(train_x)),
      scores_(std::move(train_scores)),
      ids_(std::move(ids)),
      k_(k_neighbors) {
  if (x_.rows() == 0) throw std::invalid_argument("kNN needs a non-empty training set");
  if (k_ < 1 || k_ > static_cast<std::size_t>(x_.rows())) {
    throw std::invalid_argument("k_neighbors must lie in [1, training size]");
  }
  if (!std::is_sorted(ids_.begin(), ids_.end())) throw std::invalid_argument("kNN training rows must be sorted by id");
}

std::vector<std::size_t> KnnRouter::neighbours(const Eigen::VectorXd& z) const {
  if (z.size() != x_.cols()) throw DataError("feature dimension mismatch");
  const Eigen::VectorXd dist = (x_.rowwise() - z.transpose()).rowwise().squaredNorm();
  auto order = iota_indices(static_cast<std::size_t>(x_.rows()));
  auto closer = [&dist](std::size_t a, std::size_t b) {
    const double da = dist[static_cast<Eigen::Index>(a)];
    const double db = dist[static_cast<Eigen::Index>(b)];
    return da < db || (da == db && a < b);
  };
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k_), order.end(), closer);
  order.resize(k_);
  std::sort(order.begin(), order.end());
  return order;
}

Eigen::VectorXd KnnRouter::predict_scores(const Eigen::VectorXd& features) const {
  return with_invariant(column_means(scores_, neighbours(prepare(features))));
}

nlohmann::json KnnRouter::to_json() const {
  nlohmann::json j = base_json();
  j["k_neighbors"] = k_;
  j["ids"] = ids_;
  j["train_x"] = matrix_to_json(x_);
  j["train_scores"] = matrix_to_json(scores_);
  return j;
}

std::unique_ptr<KnnRouter> KnnRouter::from_json(const nlohmann::json& j) {
  return std::make_unique<KnnRouter>(registry_from_json(j.at("registry")), optional_standardizer(j),
                                     matrix_from_json(j.at("train_x")), matrix_from_json(j.at("train_scores")),
                                     j.at("ids").get<std::vector<std::string>>(), j.at("k_neighbors").get<std::size_t>());
}

std::unique_ptr<KnnRouter> train_knn(const Dataset& train, const ModelRegistry& registry, std::size_t k_neighbors,
                                     bool standardize) {
  check_train(train, registry);
  auto standardizer = maybe_fit(train, standardize);
  const Dataset sorted = train.subset(id_order(train));
  const Dataset prepared = standardizer ? standardizer->apply(sorted) : sorted;
  std::vector<std::string> ids;
  ids.reserve(sorted.size());
  for (const auto& r : sorted.records) ids.push_back(r.id);
  return std::make_unique<KnnRouter>(registry, std::move(standardizer), prepared.feature_matrix(),
                                     sorted.score_matrix(), std::move(ids), k_neighbors);
}

// ---- ridge (LR) ---------------------------------------------------------

RidgeRouter::RidgeRouter(ModelRegistry registry, std::optional<Standardizer> standardizer, RidgeModel model)
    : Router(std::move(registry), std::move(standardizer)), model_(std::move(model)) {}

Eigen::VectorXd RidgeRouter::predict_scores(const Eigen::VectorXd& features) const {
  return with_invariant(model_.predict(prepare(features)));
}

Eigen::MatrixXd RidgeRouter::predict_matrix(const Dataset& data) const {
  const Eigen::MatrixXd dep = model_.predict_rows(prepare_rows(data));
  Eigen::MatrixXd out(dep.rows(), static_cast<Eigen::Index>(registry_.size()));
  for (Eigen::Index i = 0; i < dep.rows(); ++i) out.row(i) = with_invariant(dep.row(i).transpose()).transpose();
  return out;
}

nlohmann::json RidgeRouter::to_json() const {
  nlohmann::json j = base_json();
  j["ridge"] = ridge_to_json(model_);
  return j;
}

std::unique_ptr<RidgeRouter> RidgeRouter::from_json(const nlohmann::json& j) {
  return std::make_unique<RidgeRouter>(registry_from_json(j.at("registry")), optional_standardizer(j),
                                       ridge_from_json(j.at("ridge")));
}

std::unique_ptr<RidgeRouter> train_ridge_router(const Dataset& train, const ModelRegistry& registry, double alpha,
                                                bool standardize) {
  check_train(train, registry);
  auto standardizer = maybe_fit(train, standardize);
  const Dataset prepared = standardizer ? standardizer->apply(train) : train;
  return std::make_unique<RidgeRouter>(registry, std::move(standardizer),
                                       fit_ridge(prepared.feature_matrix(), train.score_matrix(), alpha));
}

// ---- MLP ----------------------------------------------------------------

MlpRouter::MlpRouter(ModelRegistry registry, std::optional<Standardizer> standardizer, nn::MlpParams net)
    : Router(std::move(registry), std::move(standardizer)), net_(std::move(net)) {
  if (net_.output_dim() != static_cast<Eigen::Index>(registry_.num_dependent())) {
    throw std::invalid_argument("MLP output size differs from k1");
  }
}

Eigen::VectorXd MlpRouter::predict_scores(const Eigen::VectorXd& features) const {
  return with_invariant(nn::forward(net_, prepare(features)));
}

Eigen::MatrixXd MlpRouter::predict_matrix(const Dataset& data) const {
  const Eigen::MatrixXd dep = nn::predict(net_, prepare_rows(data));
  Eigen::MatrixXd out(dep.rows(), static_cast<Eigen::Index>(registry_.size()));
  for (Eigen::Index i = 0; i < dep.rows(); ++i) out.row(i) = with_invariant(dep.row(i).transpose()).transpose();
  return out;
}

nlohmann::json MlpRouter::to_json() const {
  nlohmann::json j = base_json();
  j["net"] = mlp_to_json(net_);
  return j;
}

std::unique_ptr<MlpRouter> MlpRouter::from_json(const nlohmann::json& j) {
  return std::make_unique<MlpRouter>(registry_from_json(j.at("registry")), optional_standardizer(j),
                                     mlp_from_json(j.at("net")));
}

std::unique_ptr<MlpRouter> train_mlp_router(const Dataset& train, const ModelRegistry& registry,
                                            const nn::TrainConfig& cfg, bool standardize) {
  check_train(train, registry);
  auto standardizer = maybe_fit(train, standardize);
  const Dataset prepared = standardizer ? standardizer->apply(train) : train;
  nn::TrainConfig mse = cfg;
  mse.loss = nn::LossKind::MSE;
  auto fit = nn::train(prepared.feature_matrix(), train.score_matrix(), mse);
  return std::make_unique<MlpRouter>(registry, std::move(standardizer), std::move(fit.params));
}

// ---- matrix factorisation -----------------------------------------------

Eigen::MatrixXd MfParams::predict_rows(const Eigen::MatrixXd& x_rows) const {
  if (x_rows.cols() != u.cols()) throw DataError("feature dimension mismatch");
  const Eigen::MatrixXd h = (x_rows * u.transpose()).rowwise() + u0.transpose();
  return (h * v).rowwise() + b.transpose();
}

MfRouter::MfRouter(ModelRegistry registry, std::optional<Standardizer> standardizer, MfParams params)
    : Router(std::move(registry), std::move(standardizer)), params_(std::move(params)) {
  if (params_.v.cols() != static_cast<Eigen::Index>(registry_.num_dependent())) {
    throw std::invalid_argument("MF model count differs from k1");
  }
}

Eigen::VectorXd MfRouter::predict_scores(const Eigen::VectorXd& features) const {
  return with_invariant(params_.predict_rows(prepare(features).transpose()).row(0).transpose());
}

Eigen::MatrixXd MfRouter::predict_matrix(const Dataset& data) const {
  const Eigen::MatrixXd dep = params_.predict_rows(prepare_rows(data));
  Eigen::MatrixXd out(dep.rows(), static_cast<Eigen::Index>(registry_.size()));
  for (Eigen::Index i = 0; i < dep.rows(); ++i) out.row(i) = with_invariant(dep.row(i).transpose()).transpose();
  return out;
}

nlohmann::json MfRouter::to_json() const {
  nlohmann::json j = base_json();
  j["u"] = matrix_to_json(params_.u);
  j["u0"] = vector_to_json(params_.u0);
  j["v"] = matrix_to_json(params_.v);
  j["b"] = vector_to_json(params_.b);
  return j;
}

std::unique_ptr<MfRouter> MfRouter::from_json(const nlohmann::json& j) {
  MfParams p{matrix_from_json(j.at("u")), vector_from_json(j.at("u0")), matrix_from_json(j.at("v")),
             vector_from_json(j.at("b"))};
  return std::make_unique<MfRouter>(registry_from_json(j.at("registry")), optional_standardizer(j), std::move(p));
}

std::unique_ptr<MfRouter> train_mf_router(const Dataset& train, const ModelRegistry& registry, int rank,
                                          const nn::TrainConfig& cfg, bool standardize) {
  check_train(train, registry);
  if (rank < 1) throw std::invalid_argument("MF rank must be at least 1");
  cfg.validate();
  auto standardizer = maybe_fit(train, standardize);
  const Dataset prepared = standardizer ? standardizer->apply(train) : train;
  const Eigen::MatrixXd x = prepared.feature_matrix();
  const Eigen::MatrixXd s = train.score_matrix();
  const Eigen::Index d = x.cols();
  const Eigen::Index k1 = s.cols();
  const Eigen::Index r = rank;

  // flat layout: u (r x d), u0 (r), v (r x k1), b (k1)
  const Eigen::Index off_u0 = r * d;
  const Eigen::Index off_v = off_u0 + r;
  const Eigen::Index off_b = off_v + r * k1;
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(off_b + k1);
  using Map = Eigen::Map<Eigen::MatrixXd>;
  Map u(theta.data(), r, d);
  Eigen::Map<Eigen::VectorXd> u0(theta.data() + off_u0, r);
  Map v(theta.data() + off_v, r, k1);
  Eigen::Map<Eigen::VectorXd> b(theta.data() + off_b, k1);

  Rng init_rng(Rng::derive(cfg.seed, 21));
  Rng shuffle_rng(Rng::derive(cfg.seed, 22));
  const double bu = std::sqrt(3.0 / static_cast<double>(d));
  const double bv = std::sqrt(3.0 / static_cast<double>(r));
  for (Eigen::Index c = 0; c < d; ++c)
    for (Eigen::Index i = 0; i < r; ++i) u(i, c) = init_rng.uniform(-bu, bu);
  for (Eigen::Index c = 0; c < k1; ++c)
    for (Eigen::Index i = 0; i < r; ++i) v(i, c) = init_rng.uniform(-bv, bv);
  b = s.colwise().mean().transpose();

  nn::AdamState state(theta.size());
  const double coupled = cfg.decoupled_weight_decay ? 0.0 : cfg.weight_decay;
  const double decoupled = cfg.decoupled_weight_decay ? cfg.weight_decay : 0.0;
  const auto n = static_cast<std::size_t>(x.rows());
  auto order = iota_indices(n);
  Eigen::VectorXd grad(theta.size());

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    for (std::size_t start = 0; start < n; start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t end = std::min(n, start + static_cast<std::size_t>(cfg.batch_size));
      std::vector<Eigen::Index> rows;
      for (std::size_t p = start; p < end; ++p) rows.push_back(static_cast<Eigen::Index>(order[p]));
      const Eigen::MatrixXd xb = x(rows, Eigen::all).transpose();  // d x B
      const Eigen::MatrixXd sb = s(rows, Eigen::all).transpose();  // k1 x B
      const auto batch = static_cast<double>(rows.size());

      const Eigen::MatrixXd h = (u * xb).colwise() + u0;                 // r x B
      const Eigen::MatrixXd pred = (v.transpose() * h).colwise() + b;    // k1 x B
      const Eigen::MatrixXd e = 2.0 * (pred - sb) / (batch * static_cast<double>(k1));
      const Eigen::MatrixXd dh = v * e;

      Map gu(grad.data(), r, d);
      Map gv(grad.data() + off_v, r, k1);
      gu = dh * xb.transpose();
      grad.segment(off_u0, r) = dh.rowwise().sum();
      gv = h * e.transpose();
      grad.segment(off_b, k1) = e.rowwise().sum();
      if (coupled != 0.0) grad += coupled * theta;
      nn::adam_update(theta, grad, state, cfg.learning_rate, decoupled);
    }
  }
  MfParams params{u, u0, v, b};
  return std::make_unique<MfRouter>(registry, std::move(standardizer), std::move(params));
}

// ---- oracle -------------------------------------------------------------

Eigen::VectorXd OracleRouter::predict_scores(const Eigen::VectorXd&) const {
  throw std::logic_error("oracle router needs ground-truth scores; route records, not bare features");
}

Eigen::VectorXd OracleRouter::predict_record(const ExampleRecord& record) const {
  if (record.scores_dep.size() != static_cast<Eigen::Index>(registry_.num_dependent())) {
    throw DataError("record '" + record.id + "' has no ground-truth scores");
  }
  return full_scores(record, registry_);
}

nlohmann::json OracleRouter::to_json() const { return base_json(); }

}  // namespace scout
