#pragma once

#include <atomic>
#include <map>
#include <string>

#include <Eigen/Dense>

#include "scout/dataset.hpp"

namespace scout {

struct SmoothingConfig {
  double beta = 0.7;
  double temperature = 1.0;

  void validate() const;
};

struct TagMean {
  Eigen::VectorXd mean;
  std::size_t count = 0;
};

class TagStats {
 public:
  TagStats() = default;
  TagStats(const TagStats& o) : entries_(o.entries_), unseen_(o.unseen_.load()) {}
  TagStats& operator=(const TagStats& o) {
    entries_ = o.entries_;
    unseen_ = o.unseen_.load();
    return *this;
  }

  const TagMean* find(const std::string& tag) const;
  const std::map<std::string, TagMean>& entries() const { return entries_; }

  // Number of lookups that fell back to the unsmoothed scores.
  std::size_t unseen_tag_count() const { return unseen_.load(); }

 private:
  friend TagStats compute_tag_means(const Dataset& train);
  friend Eigen::VectorXd smooth_scores(const ExampleRecord&, const TagStats&, const SmoothingConfig&);

  std::map<std::string, TagMean> entries_;
  mutable std::atomic<std::size_t> unseen_{0};
};

TagStats compute_tag_means(const Dataset& train);

// beta * scores + (1 - beta) * tag mean. Unseen tags fall back to beta = 1.
Eigen::VectorXd smooth_scores(const ExampleRecord& record, const TagStats& stats,
                              const SmoothingConfig& cfg);

// Temperature softmax with max subtraction.
Eigen::VectorXd softmax_targets(const Eigen::VectorXd& scores, double temperature);

// Sum of exp(s_j / T) over the unsmoothed dependent scores.
double true_partition(const Eigen::VectorXd& scores_dep, double temperature);

// log of true_partition, computed stably.
double log_partition(const Eigen::VectorXd& scores_dep, double temperature);

}  // namespace scout
