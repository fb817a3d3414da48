#include "scout/costs.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "scout/rng.hpp"
#include "scout/stats.hpp"

namespace scout {

CostVector::CostVector(Eigen::VectorXd c) : c_(std::move(c)) {
  for (Eigen::Index j = 0; j < c_.size(); ++j) {
    if (std::isnan(c_[j])) throw std::invalid_argument("cost vector contains NaN");
    if (c_[j] == -kInfiniteCost) throw std::invalid_argument("cost vector contains -inf");
  }
}

bool CostVector::any_feasible() const {
  for (Eigen::Index j = 0; j < c_.size(); ++j) {
    if (feasible(j)) return true;
  }
  return false;
}

CostVector canonical_c0(const ModelRegistry& registry) {
  Eigen::VectorXd c = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(registry.size()));
  for (std::size_t j = registry.num_dependent(); j < registry.size(); ++j) {
    c[static_cast<Eigen::Index>(j)] = kInfiniteCost;
  }
  return CostVector(std::move(c));
}

CostBox build_interesting_box(const std::vector<std::vector<double>>& per_model_scores, bool exclude_zero_iqr) {
  if (per_model_scores.empty()) throw std::invalid_argument("cost box: no models");
  const auto k = static_cast<Eigen::Index>(per_model_scores.size());
  CostBox box;
  box.p75.resize(k);
  box.iqr.resize(k);
  for (Eigen::Index j = 0; j < k; ++j) {
    const auto& s = per_model_scores[static_cast<std::size_t>(j)];
    if (s.empty()) throw std::invalid_argument("cost box: empty score sample");
    box.p75[j] = stats::quantile(s, 0.75);
    box.iqr[j] = box.p75[j] - stats::quantile(s, 0.25);
  }
  std::optional<double> width;
  for (Eigen::Index j = 0; j < k; ++j) {
    if (exclude_zero_iqr && !(box.iqr[j] > 0.0)) continue;
    width = width ? std::min(*width, box.iqr[j]) : box.iqr[j];
  }
  box.width = width.value_or(0.0);
  box.hi = box.p75;
  box.lo = box.p75.array() - box.width;
  return box;
}

CostBox build_interesting_box(const Dataset& train, const ModelRegistry& registry, bool exclude_zero_iqr) {
  if (train.empty()) throw std::invalid_argument("cost box: empty training set");
  std::vector<std::vector<double>> samples(registry.size());
  const auto k1 = registry.num_dependent();
  for (const auto& r : train.records) {
    for (std::size_t j = 0; j < k1; ++j) samples[j].push_back(r.scores_dep[static_cast<Eigen::Index>(j)]);
  }
  for (std::size_t j = k1; j < registry.size(); ++j) samples[j].push_back(*registry[j].fixed_score);
  return build_interesting_box(samples, exclude_zero_iqr);
}

std::vector<CostVector> sample_box(const CostBox& box, std::size_t n, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("sample_box: n must be at least 1");
  Rng rng(seed);
  std::vector<CostVector> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Eigen::VectorXd c(box.lo.size());
    for (Eigen::Index j = 0; j < c.size(); ++j) c[j] = rng.uniform(box.lo[j], box.hi[j]);
    out.emplace_back(std::move(c));
  }
  return out;
}

std::vector<CostVector> with_invariant_infinite(const std::vector<CostVector>& costs,
                                                const ModelRegistry& registry) {
  std::vector<CostVector> out;
  out.reserve(costs.size());
  for (const auto& cv : costs) {
    Eigen::VectorXd c = cv.values();
    for (std::size_t j = registry.num_dependent(); j < registry.size(); ++j) {
      c[static_cast<Eigen::Index>(j)] = kInfiniteCost;
    }
    out.emplace_back(std::move(c));
  }
  return out;
}

void CostRay::validate() const {
  if (!base.allFinite()) throw std::invalid_argument("ray base must be finite");
  if (lambdas.empty()) throw std::invalid_argument("empty lambda grid");
  for (std::size_t i = 0; i < lambdas.size(); ++i) {
    if (!(lambdas[i] >= 0.0) || !std::isfinite(lambdas[i])) throw std::invalid_argument("lambda must be finite and >= 0");
    if (i > 0 && !(lambdas[i] > lambdas[i - 1])) throw std::invalid_argument("lambda grid must be strictly increasing");
  }
}

std::vector<CostVector> ray_points(const CostRay& ray) {
  ray.validate();
  std::vector<CostVector> out;
  out.reserve(ray.lambdas.size());
  for (double l : ray.lambdas) out.emplace_back(l * ray.base);
  return out;
}

const char* family_name(CostFamily family) {
  switch (family) {
    case CostFamily::LatencyMemory: return "latency_memory";
    case CostFamily::Latency: return "latency";
    case CostFamily::Memory: return "memory";
  }
  return "?";
}

CostFamily family_from_name(const std::string& name) {
  for (auto f : {CostFamily::LatencyMemory, CostFamily::Latency, CostFamily::Memory})
    if (name == family_name(f)) return f;
  throw std::invalid_argument("unknown cost family '" + name + "'");
}

Eigen::VectorXd family_base(const ModelRegistry& registry, CostFamily family) {
  switch (family) {
    case CostFamily::LatencyMemory: return registry.latency().cwiseProduct(registry.memory());
    case CostFamily::Latency: return registry.latency();
    case CostFamily::Memory: return registry.memory();
  }
  throw std::invalid_argument("unknown cost family");
}

std::vector<double> lambda_grid(double lo, double hi, std::size_t points) {
  if (points < 2) throw std::invalid_argument("lambda grid needs at least two points");
  if (!(lo > 0.0) || !(hi > lo)) throw std::invalid_argument("lambda grid bounds must satisfy 0 < lo < hi");
  std::vector<double> grid{0.0};
  const std::size_t m = points - 1;
  const double log_lo = std::log(lo);
  const double log_hi = std::log(hi);
  for (std::size_t i = 0; i < m; ++i) {
    const double t = m == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(m - 1);
    grid.push_back(std::exp(log_lo + t * (log_hi - log_lo)));
  }
  return grid;
}

std::vector<double> default_lambda_grid(const Eigen::VectorXd& base, double score_spread, std::size_t points) {
  double max_gap = 0.0;
  double min_gap = kInfiniteCost;
  for (Eigen::Index a = 0; a < base.size(); ++a) {
    for (Eigen::Index b = a + 1; b < base.size(); ++b) {
      const double gap = std::abs(base[a] - base[b]);
      max_gap = std::max(max_gap, gap);
      if (gap > 0.0) min_gap = std::min(min_gap, gap);
    }
  }
  if (!(max_gap > 0.0)) throw std::invalid_argument("ray base has no cost differences between models");
  const double spread = score_spread > 0.0 ? score_spread : 1.0;
  return lambda_grid(1e-3 * spread / max_gap, 1e3 * spread / min_gap, points);
}

nlohmann::json cost_to_json(const Eigen::VectorXd& c) {
  auto arr = nlohmann::json::array();
  for (Eigen::Index j = 0; j < c.size(); ++j) {
    if (std::isinf(c[j])) {
      arr.push_back("inf");
    } else {
      arr.push_back(c[j]);
    }
  }
  return arr;
}

Eigen::VectorXd cost_from_json(const nlohmann::json& arr) {
  if (!arr.is_array()) throw std::invalid_argument("cost base must be an array");
  Eigen::VectorXd c(static_cast<Eigen::Index>(arr.size()));
  for (std::size_t j = 0; j < arr.size(); ++j) {
    const auto& e = arr[j];
    const auto idx = static_cast<Eigen::Index>(j);
    if (e.is_null()) {
      c[idx] = kInfiniteCost;
    } else if (e.is_string()) {
      const auto s = e.get<std::string>();
      if (s != "inf" && s != "+inf" && s != "Infinity") throw std::invalid_argument("bad cost entry '" + s + "'");
      c[idx] = kInfiniteCost;
    } else {
      c[idx] = e.get<double>();
    }
  }
  return c;
}

CostConfig CostConfig::from_json(const nlohmann::json& j) {
  CostConfig cfg;
  const auto mode = j.value("mode", std::string("c0"));
  if (mode == "c0") {
    cfg.mode = Mode::C0;
  } else if (mode == "box") {
    cfg.mode = Mode::Box;
  } else if (mode == "ray") {
    cfg.mode = Mode::Ray;
  } else if (mode == "vector") {
    cfg.mode = Mode::Vector;
  } else {
    throw std::invalid_argument("unknown cost mode '" + mode + "'");
  }
  if (j.contains("base")) cfg.base = cost_from_json(j["base"]);
  if (j.contains("family")) cfg.family = family_from_name(j["family"].get<std::string>());
  if (j.contains("lambda")) {
    const auto& l = j["lambda"];
    cfg.lambda_min = l.value("min", cfg.lambda_min);
    cfg.lambda_max = l.value("max", cfg.lambda_max);
    cfg.lambda_points = l.value("points", cfg.lambda_points);
  }
  cfg.samples = j.value("samples", cfg.samples);
  cfg.seed = j.value("seed", cfg.seed);
  cfg.inv_infinite = j.value("inv_infinite", cfg.inv_infinite);
  return cfg;
}

nlohmann::json CostConfig::to_json() const {
  static const char* names[] = {"c0", "box", "ray", "vector"};
  nlohmann::json j;
  j["mode"] = names[static_cast<int>(mode)];
  if (base) j["base"] = cost_to_json(*base);
  if (family) j["family"] = family_name(*family);
  j["lambda"] = {{"min", lambda_min}, {"max", lambda_max}, {"points", lambda_points}};
  j["samples"] = samples;
  j["seed"] = seed;
  j["inv_infinite"] = inv_infinite;
  return j;
}

std::vector<CostVector> CostConfig::expand(const ModelRegistry& registry, const CostBox* box) const {
  const auto k = static_cast<Eigen::Index>(registry.size());
  std::vector<CostVector> out;
  switch (mode) {
    case Mode::C0:
      out.push_back(canonical_c0(registry));
      break;
    case Mode::Vector:
      if (!base || base->size() != k) throw std::invalid_argument("vector cost needs a base of length k");
      out.emplace_back(*base);
      break;
    case Mode::Box:
      if (box == nullptr) throw std::invalid_argument("box cost mode needs a cost box");
      out = sample_box(*box, samples, seed);
      break;
    case Mode::Ray: {
      const Eigen::VectorXd b = family ? family_base(registry, *family) : base.value_or(Eigen::VectorXd());
      if (b.size() != k) throw std::invalid_argument("ray cost needs a base of length k or a family");
      CostRay ray{b, {}};
      if (lambda_points == 1) {
        ray.lambdas = {lambda_min};
      } else if (lambda_min == 0.0) {
        ray.lambdas = lambda_grid(lambda_max * 1e-6, lambda_max, lambda_points);
      } else {
        ray.lambdas = lambda_grid(lambda_min, lambda_max, lambda_points + 1);
        ray.lambdas.erase(ray.lambdas.begin());
      }
      out = ray_points(ray);
      break;
    }
  }
  if (inv_infinite) out = with_invariant_infinite(out, registry);
  for (const auto& c : out) {
    if (c.size() != k) throw std::invalid_argument("cost vector length differs from the registry");
  }
  return out;
}

}  // namespace scout
