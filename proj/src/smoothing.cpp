#include "scout/smoothing.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace scout {

void SmoothingConfig::validate() const {
  if (!(beta >= 0.0 && beta <= 1.0)) throw std::invalid_argument("beta must lie in [0, 1]");
  if (!(temperature > 0.0) || !std::isfinite(temperature)) {
    throw std::invalid_argument("temperature must be positive");
  }
}

const TagMean* TagStats::find(const std::string& tag) const {
  auto it = entries_.find(tag);
  return it == entries_.end() ? nullptr : &it->second;
}

TagStats compute_tag_means(const Dataset& train) {
  TagStats stats;
  for (const auto& r : train.records) {
    auto [it, inserted] = stats.entries_.try_emplace(r.tag);
    if (inserted) it->second.mean = Eigen::VectorXd::Zero(r.scores_dep.size());
    it->second.mean += r.scores_dep;
    ++it->second.count;
  }
  for (auto& [tag, entry] : stats.entries_) entry.mean /= static_cast<double>(entry.count);
  return stats;
}

Eigen::VectorXd smooth_scores(const ExampleRecord& record, const TagStats& stats,
                              const SmoothingConfig& cfg) {
  const TagMean* entry = stats.find(record.tag);
  if (entry == nullptr) {
    stats.unseen_.fetch_add(1);
    return record.scores_dep;
  }
  if (entry->mean.size() != record.scores_dep.size()) {
    throw std::invalid_argument("tag mean length differs from record scores");
  }
  return cfg.beta * record.scores_dep + (1.0 - cfg.beta) * entry->mean;
}

Eigen::VectorXd softmax_targets(const Eigen::VectorXd& scores, double temperature) {
  if (!(temperature > 0.0)) throw std::invalid_argument("temperature must be positive");
  if (!scores.allFinite()) throw std::invalid_argument("softmax of non-finite scores");
  const Eigen::ArrayXd shifted = (scores.array() - scores.maxCoeff()) / temperature;
  const Eigen::ArrayXd e = shifted.exp();
  return (e / e.sum()).matrix();
}

double log_partition(const Eigen::VectorXd& scores_dep, double temperature) {
  if (!(temperature > 0.0)) throw std::invalid_argument("temperature must be positive");
  const Eigen::ArrayXd a = scores_dep.array() / temperature;
  const double m = a.maxCoeff();
  return m + std::log((a - m).exp().sum());
}

double true_partition(const Eigen::VectorXd& scores_dep, double temperature) {
  const double lz = log_partition(scores_dep, temperature);
  if (lz > std::log(std::numeric_limits<double>::max())) {
    throw std::overflow_error("partition function exceeds the representable range");
  }
  return std::exp(lz);
}

}  // namespace scout
