#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

namespace scout {

class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class ModelKind { Dependent, Invariant };

struct ModelInfo {
  std::string name;
  ModelKind kind = ModelKind::Dependent;
  std::optional<double> fixed_score;  // present iff kind == Invariant
  double latency_s = 0.0;
  double memory_gb = 0.0;
};

// Ordered model pool. Viewpoint-dependent models always come first.
class ModelRegistry {
 public:
  ModelRegistry() = default;
  explicit ModelRegistry(std::vector<ModelInfo> models);

  const std::vector<ModelInfo>& models() const { return models_; }
  const ModelInfo& operator[](std::size_t i) const { return models_.at(i); }
  std::size_t size() const { return models_.size(); }
  std::size_t num_dependent() const { return k1_; }
  std::size_t num_invariant() const { return models_.size() - k1_; }
  bool is_invariant(std::size_t i) const { return i >= k1_; }

  // Fixed scores of the invariant models, in registry order.
  Eigen::VectorXd invariant_scores() const;
  Eigen::VectorXd latency() const;
  Eigen::VectorXd memory() const;

  std::optional<std::size_t> index_of(const std::string& name) const;

  // Stable fingerprint of names, kinds and fixed scores.
  std::uint64_t hash() const;

 private:
  std::vector<ModelInfo> models_;
  std::size_t k1_ = 0;
};

struct ExampleRecord {
  std::string id;
  std::string object_id;
  std::string view_id;
  std::string tag;
  Eigen::VectorXd features;
  Eigen::VectorXd scores_dep;
};

struct Dataset {
  std::vector<ExampleRecord> records;

  bool empty() const { return records.empty(); }
  std::size_t size() const { return records.size(); }
  // Feature dimension; throws on an empty dataset.
  Eigen::Index dim() const;

  // Row-per-record matrices.
  Eigen::MatrixXd feature_matrix() const;
  Eigen::MatrixXd score_matrix() const;

  Dataset subset(const std::vector<std::size_t>& indices) const;
};

// Full k-vector of true scores: dependent scores then registry fixed scores.
Eigen::VectorXd full_scores(const ExampleRecord& r, const ModelRegistry& registry);

enum class SplitMode { NovelObject, NovelView };

struct SplitSpec {
  SplitMode mode = SplitMode::NovelObject;
  double test_fraction = 0.2;
  std::uint64_t seed = 0;
};

struct TrainTestSplit {
  Dataset train;
  Dataset test;
};

TrainTestSplit split(const Dataset& data, const SplitSpec& spec);

class Standardizer {
 public:
  Standardizer() = default;
  Standardizer(Eigen::VectorXd means, Eigen::VectorXd stds);

  static Standardizer identity(Eigen::Index dim);

  Eigen::VectorXd apply(const Eigen::VectorXd& x) const;
  Eigen::VectorXd invert(const Eigen::VectorXd& z) const;
  Dataset apply(const Dataset& data) const;

  const Eigen::VectorXd& means() const { return means_; }
  const Eigen::VectorXd& stds() const { return stds_; }
  Eigen::Index dim() const { return means_.size(); }

 private:
  Eigen::VectorXd means_;
  Eigen::VectorXd stds_;
};

// Population statistics; zero-variance dimensions get std = 1.
Standardizer fit_standardizer(const Dataset& train);

// ---- file formats -------------------------------------------------------

ModelRegistry registry_from_json(const nlohmann::json& j);
nlohmann::json registry_to_json(const ModelRegistry& registry);
ModelRegistry load_registry(const std::filesystem::path& path);
void save_registry(const ModelRegistry& registry, const std::filesystem::path& path);

// Line-delimited JSON, one record per line. Blank lines are skipped.
Dataset parse_dataset(std::istream& in, const ModelRegistry& registry);
Dataset load_dataset(const std::filesystem::path& path, const ModelRegistry& registry);
void write_dataset(const Dataset& data, std::ostream& out);
void save_dataset(const Dataset& data, const std::filesystem::path& path);

// Feature-only records for routing (`id` and `features` keys; other keys ignored).
struct FeatureRow {
  std::string id;
  Eigen::VectorXd features;
};
std::vector<FeatureRow> load_feature_rows(const std::filesystem::path& path);

}  // namespace scout
