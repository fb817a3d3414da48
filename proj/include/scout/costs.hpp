#pragma once

#include <cstdint>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "scout/dataset.hpp"

namespace scout {

inline constexpr double kInfiniteCost = std::numeric_limits<double>::infinity();

// Per-model cost coefficients over R and +inf. +inf marks an infeasible model.
class CostVector {
 public:
  CostVector() = default;
  explicit CostVector(Eigen::VectorXd c);

  const Eigen::VectorXd& values() const { return c_; }
  double operator[](Eigen::Index j) const { return c_[j]; }
  Eigen::Index size() const { return c_.size(); }
  bool feasible(Eigen::Index j) const { return std::isfinite(c_[j]); }
  bool any_feasible() const;

 private:
  Eigen::VectorXd c_;
};

// Zeros on dependent models, +inf on invariant models.
CostVector canonical_c0(const ModelRegistry& registry);

struct CostBox {
  Eigen::VectorXd lo;
  Eigen::VectorXd hi;
  Eigen::VectorXd p75;
  Eigen::VectorXd iqr;
  double width = 0.0;
};

// Intervals [P75_j - min IQR, P75_j] per model from its score sample.
// With exclude_zero_iqr, zero IQRs (constant invariant scores) do not enter the minimum.
CostBox build_interesting_box(const std::vector<std::vector<double>>& per_model_scores,
                              bool exclude_zero_iqr = true);
CostBox build_interesting_box(const Dataset& train, const ModelRegistry& registry,
                              bool exclude_zero_iqr = true);

// Uniform sampling per coordinate.
std::vector<CostVector> sample_box(const CostBox& box, std::size_t n, std::uint64_t seed);

// Copy of `costs` with every invariant slot set to +inf.
std::vector<CostVector> with_invariant_infinite(const std::vector<CostVector>& costs,
                                                const ModelRegistry& registry);

struct CostRay {
  Eigen::VectorXd base;
  std::vector<double> lambdas;  // strictly increasing, >= 0

  void validate() const;
};

std::vector<CostVector> ray_points(const CostRay& ray);

enum class CostFamily { LatencyMemory, Latency, Memory };

const char* family_name(CostFamily family);
CostFamily family_from_name(const std::string& name);
Eigen::VectorXd family_base(const ModelRegistry& registry, CostFamily family);

// 0 followed by a geometric grid over [lo, hi]; `points` counts the zero.
std::vector<double> lambda_grid(double lo, double hi, std::size_t points);

// Grid whose ends make cost either negligible or dominant relative to
// the spread of scores: lo = 1e-3 * spread / max base gap,
// hi = 1e3 * spread / min positive base gap.
std::vector<double> default_lambda_grid(const Eigen::VectorXd& base, double score_spread,
                                        std::size_t points = 64);

// JSON cost configuration:
// {"mode": "c0"|"box"|"ray"|"vector", "base": [...] or "family": "latency"|"memory"|"latency_memory",
//  "lambda": {"min","max","points"},
//  "samples": n, "seed": s, "inv_infinite": bool}
struct CostConfig {
  enum class Mode { C0, Box, Ray, Vector };
  Mode mode = Mode::C0;
  std::optional<Eigen::VectorXd> base;  // "inf" strings or null read as +inf
  std::optional<CostFamily> family;     // ray base taken from the registry instead of `base`
  double lambda_min = 0.0;
  double lambda_max = 1.0;
  std::size_t lambda_points = 64;
  std::size_t samples = 256;
  std::uint64_t seed = 0;
  bool inv_infinite = false;

  static CostConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;

  // Materialise the vectors. Box mode needs a box.
  std::vector<CostVector> expand(const ModelRegistry& registry, const CostBox* box) const;
};

nlohmann::json cost_to_json(const Eigen::VectorXd& c);
Eigen::VectorXd cost_from_json(const nlohmann::json& arr);

}  // namespace scout
