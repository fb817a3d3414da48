#include "scout/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <unordered_set>

#include "scout/rng.hpp"

namespace scout {

namespace {

bool finite_nonneg(double v) { return std::isfinite(v) && v >= 0.0; }

std::uint64_t fnv1a(std::uint64_t h, const void* data, std::size_t n) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

Eigen::VectorXd to_vector(const nlohmann::json& arr, const char* key) {
  if (!arr.is_array()) throw DataError(std::string("'") + key + "' must be an array");
  Eigen::VectorXd v(static_cast<Eigen::Index>(arr.size()));
  for (std::size_t i = 0; i < arr.size(); ++i) {
    if (!arr[i].is_number()) throw DataError(std::string("'") + key + "' has a non-numeric entry");
    v[static_cast<Eigen::Index>(i)] = arr[i].get<double>();
  }
  return v;
}

nlohmann::json to_array(const Eigen::VectorXd& v) {
  auto arr = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

std::string string_field(const nlohmann::json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) throw DataError(std::string("missing key '") + key + "'");
  if (it->is_string()) return it->get<std::string>();
  if (it->is_number_integer()) return std::to_string(it->get<long long>());
  throw DataError(std::string("'") + key + "' must be a string");
}

}  // namespace

// ---- ModelRegistry ------------------------------------------------------

ModelRegistry::ModelRegistry(std::vector<ModelInfo> models) : models_(std::move(models)) {
  std::set<std::string> names;
  bool seen_invariant = false;
  k1_ = 0;
  for (const auto& m : models_) {
    if (m.name.empty()) throw DataError("model name must be non-empty");
    if (!names.insert(m.name).second) throw DataError("duplicate model name '" + m.name + "'");
    if (!finite_nonneg(m.latency_s) || !finite_nonneg(m.memory_gb)) {
      throw DataError("model '" + m.name + "': latency and memory must be finite and non-negative");
    }
    if (m.kind == ModelKind::Dependent) {
      if (seen_invariant) {
        throw DataError("model '" + m.name + "': dependent models must precede invariant models");
      }
      if (m.fixed_score) throw DataError("model '" + m.name + "': dependent model has a fixed_score");
      ++k1_;
    } else {
      seen_invariant = true;
      if (!m.fixed_score || !std::isfinite(*m.fixed_score)) {
        throw DataError("model '" + m.name + "': invariant model needs a finite fixed_score");
      }
    }
  }
  if (k1_ < 2) throw DataError("registry needs at least two viewpoint-dependent models");
}

Eigen::VectorXd ModelRegistry::invariant_scores() const {
  Eigen::VectorXd v(static_cast<Eigen::Index>(num_invariant()));
  for (std::size_t i = k1_; i < models_.size(); ++i) {
    v[static_cast<Eigen::Index>(i - k1_)] = *models_[i].fixed_score;
  }
  return v;
}

Eigen::VectorXd ModelRegistry::latency() const {
  Eigen::VectorXd v(static_cast<Eigen::Index>(size()));
  for (std::size_t i = 0; i < size(); ++i) v[static_cast<Eigen::Index>(i)] = models_[i].latency_s;
  return v;
}

Eigen::VectorXd ModelRegistry::memory() const {
  Eigen::VectorXd v(static_cast<Eigen::Index>(size()));
  for (std::size_t i = 0; i < size(); ++i) v[static_cast<Eigen::Index>(i)] = models_[i].memory_gb;
  return v;
}

std::optional<std::size_t> ModelRegistry::index_of(const std::string& name) const {
  for (std::size_t i = 0; i < models_.size(); ++i) {
    if (models_[i].name == name) return i;
  }
  return std::nullopt;
}

std::uint64_t ModelRegistry::hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& m : models_) {
    h = fnv1a(h, m.name.data(), m.name.size());
    const int kind = m.kind == ModelKind::Dependent ? 0 : 1;
    h = fnv1a(h, &kind, sizeof kind);
    if (m.fixed_score) h = fnv1a(h, &*m.fixed_score, sizeof(double));
  }
  return h;
}

// ---- Dataset ------------------------------------------------------------

Eigen::Index Dataset::dim() const {
  if (records.empty()) throw DataError("empty dataset has no feature dimension");
  return records.front().features.size();
}

Eigen::MatrixXd Dataset::feature_matrix() const {
  Eigen::MatrixXd x(static_cast<Eigen::Index>(size()), dim());
  for (std::size_t i = 0; i < size(); ++i) x.row(static_cast<Eigen::Index>(i)) = records[i].features.transpose();
  return x;
}

Eigen::MatrixXd Dataset::score_matrix() const {
  if (records.empty()) throw DataError("empty dataset");
  Eigen::MatrixXd s(static_cast<Eigen::Index>(size()), records.front().scores_dep.size());
  for (std::size_t i = 0; i < size(); ++i) s.row(static_cast<Eigen::Index>(i)) = records[i].scores_dep.transpose();
  return s;
}

Dataset Dataset::subset(const std::vector<std::size_t>& indices) const {
  Dataset out;
  out.records.reserve(indices.size());
  for (std::size_t i : indices) out.records.push_back(records.at(i));
  return out;
}

Eigen::VectorXd full_scores(const ExampleRecord& r, const ModelRegistry& registry) {
  const auto k1 = static_cast<Eigen::Index>(registry.num_dependent());
  if (r.scores_dep.size() != k1) throw DataError("record '" + r.id + "': score length mismatch");
  Eigen::VectorXd s(static_cast<Eigen::Index>(registry.size()));
  s.head(k1) = r.scores_dep;
  s.tail(static_cast<Eigen::Index>(registry.num_invariant())) = registry.invariant_scores();
  return s;
}

// ---- split --------------------------------------------------------------

TrainTestSplit split(const Dataset& data, const SplitSpec& spec) {
  if (data.empty()) throw DataError("cannot split an empty dataset");
  if (!(spec.test_fraction > 0.0 && spec.test_fraction < 1.0)) {
    throw DataError("test_fraction must lie in (0, 1)");
  }
  Rng rng(spec.seed);
  std::vector<bool> in_test(data.size(), false);

  if (spec.mode == SplitMode::NovelObject) {
    std::set<std::string> object_set;
    for (const auto& r : data.records) object_set.insert(r.object_id);
    std::vector<std::string> objects(object_set.begin(), object_set.end());
    if (objects.size() < 2) throw DataError("novel-object split needs at least two distinct objects");
    const auto n = objects.size();
    const auto n_test = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::llround(spec.test_fraction * static_cast<double>(n))));
    if (n_test >= n) throw DataError("too few objects to honor test_fraction");
    rng.shuffle(objects);
    std::unordered_set<std::string> test_objects(objects.begin(), objects.begin() + static_cast<std::ptrdiff_t>(n_test));
    for (std::size_t i = 0; i < data.size(); ++i) {
      in_test[i] = test_objects.count(data.records[i].object_id) > 0;
    }
  } else {
    std::map<std::string, std::set<std::string>> views;
    for (const auto& r : data.records) views[r.object_id].insert(r.view_id);
    std::set<std::pair<std::string, std::string>> test_pairs;
    for (auto& [object, view_set] : views) {
      std::vector<std::string> vs(view_set.begin(), view_set.end());
      rng.shuffle(vs);
      const auto n_test = static_cast<std::size_t>(
          std::llround(spec.test_fraction * static_cast<double>(vs.size())));
      for (std::size_t i = 0; i < n_test && i < vs.size(); ++i) test_pairs.emplace(object, vs[i]);
    }
    for (std::size_t i = 0; i < data.size(); ++i) {
      const auto& r = data.records[i];
      in_test[i] = test_pairs.count({r.object_id, r.view_id}) > 0;
    }
  }

  TrainTestSplit out;
  for (std::size_t i = 0; i < data.size(); ++i) {
    (in_test[i] ? out.test : out.train).records.push_back(data.records[i]);
  }
  if (out.train.empty() || out.test.empty()) {
    throw DataError("too few groups to honor test_fraction (need one on each side)");
  }
  return out;
}

// ---- Standardizer -------------------------------------------------------

Standardizer::Standardizer(Eigen::VectorXd means, Eigen::VectorXd stds)
    : means_(std::move(means)), stds_(std::move(stds)) {
  if (means_.size() != stds_.size()) throw DataError("standardizer: mean/std length mismatch");
  for (Eigen::Index i = 0; i < stds_.size(); ++i) {
    if (!(stds_[i] > 0.0) || !std::isfinite(stds_[i])) throw DataError("standardizer: std must be positive");
  }
}

Standardizer Standardizer::identity(Eigen::Index dim) {
  return Standardizer(Eigen::VectorXd::Zero(dim), Eigen::VectorXd::Ones(dim));
}

Eigen::VectorXd Standardizer::apply(const Eigen::VectorXd& x) const {
  if (x.size() != means_.size()) throw DataError("feature dimension mismatch");
  return (x - means_).cwiseQuotient(stds_);
}

Eigen::VectorXd Standardizer::invert(const Eigen::VectorXd& z) const {
  if (z.size() != means_.size()) throw DataError("feature dimension mismatch");
  return z.cwiseProduct(stds_) + means_;
}

Dataset Standardizer::apply(const Dataset& data) const {
  Dataset out = data;
  for (auto& r : out.records) r.features = apply(r.features);
  return out;
}

Standardizer fit_standardizer(const Dataset& train) {
  if (train.empty()) throw DataError("cannot fit a standardizer on an empty set");
  const Eigen::MatrixXd x = train.feature_matrix();
  const double n = static_cast<double>(x.rows());
  Eigen::VectorXd means = x.colwise().sum().transpose() / n;
  Eigen::VectorXd stds(x.cols());
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    const double var = (x.col(j).array() - means[j]).square().sum() / n;
    const double sd = std::sqrt(var);
    // Relative threshold: constant columns can leave rounding-level variance.
    stds[j] = sd > 1e-12 * std::max(1.0, std::abs(means[j])) ? sd : 1.0;
  }
  return Standardizer(std::move(means), std::move(stds));
}

// ---- files --------------------------------------------------------------

ModelRegistry registry_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("models") || !j["models"].is_array()) {
    throw DataError("registry: expected an object with a 'models' array");
  }
  std::vector<ModelInfo> models;
  for (const auto& m : j["models"]) {
    ModelInfo info;
    info.name = m.at("name").get<std::string>();
    const auto kind = m.at("kind").get<std::string>();
    if (kind == "dependent") {
      info.kind = ModelKind::Dependent;
    } else if (kind == "invariant") {
      info.kind = ModelKind::Invariant;
    } else {
      throw DataError("registry: unknown model kind '" + kind + "'");
    }
    if (m.contains("fixed_score") && !m["fixed_score"].is_null()) info.fixed_score = m["fixed_score"].get<double>();
    info.latency_s = m.value("latency_s", 0.0);
    info.memory_gb = m.value("memory_gb", 0.0);
    models.push_back(std::move(info));
  }
  return ModelRegistry(std::move(models));
}

nlohmann::json registry_to_json(const ModelRegistry& registry) {
  auto arr = nlohmann::json::array();
  for (const auto& m : registry.models()) {
    nlohmann::json e;
    e["name"] = m.name;
    e["kind"] = m.kind == ModelKind::Dependent ? "dependent" : "invariant";
    if (m.fixed_score) e["fixed_score"] = *m.fixed_score;
    e["latency_s"] = m.latency_s;
    e["memory_gb"] = m.memory_gb;
    arr.push_back(std::move(e));
  }
  return nlohmann::json{{"models", std::move(arr)}};
}

ModelRegistry load_registry(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open registry file " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("registry " + path.string() + ": " + e.what());
  }
  return registry_from_json(j);
}

void save_registry(const ModelRegistry& registry, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << registry_to_json(registry).dump(2) << '\n';
}

Dataset parse_dataset(std::istream& in, const ModelRegistry& registry) {
  Dataset data;
  std::unordered_set<std::string> ids;
  const auto k1 = static_cast<Eigen::Index>(registry.num_dependent());
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = "line " + std::to_string(line_no) + ": ";
    try {
      const auto j = nlohmann::json::parse(line);
      if (!j.is_object()) throw DataError("expected a JSON object");
      ExampleRecord r;
      r.id = string_field(j, "id");
      r.object_id = string_field(j, "object_id");
      r.view_id = string_field(j, "view_id");
      r.tag = string_field(j, "tag");
      r.features = to_vector(j.at("features"), "features");
      r.scores_dep = to_vector(j.at("scores_dep"), "scores_dep");
      if (r.scores_dep.size() != k1) {
        throw DataError("score length mismatch (got " + std::to_string(r.scores_dep.size()) +
                        ", registry has " + std::to_string(k1) + " dependent models)");
      }
      if (!r.scores_dep.allFinite()) throw DataError("non-finite score");
      if (!r.features.allFinite()) throw DataError("non-finite feature");
      if (!data.records.empty() && r.features.size() != data.records.front().features.size()) {
        throw DataError("inconsistent feature dimension");
      }
      if (!ids.insert(r.id).second) throw DataError("duplicate id '" + r.id + "'");
      data.records.push_back(std::move(r));
    } catch (const nlohmann::json::exception& e) {
      throw DataError(where + "malformed record: " + e.what());
    } catch (const DataError& e) {
      throw DataError(where + e.what());
    }
  }
  return data;
}

Dataset load_dataset(const std::filesystem::path& path, const ModelRegistry& registry) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open dataset file " + path.string());
  return parse_dataset(in, registry);
}

void write_dataset(const Dataset& data, std::ostream& out) {
  for (const auto& r : data.records) {
    nlohmann::json j;
    j["id"] = r.id;
    j["object_id"] = r.object_id;
    j["view_id"] = r.view_id;
    j["tag"] = r.tag;
    j["features"] = to_array(r.features);
    j["scores_dep"] = to_array(r.scores_dep);
    out << j.dump() << '\n';
  }
}

void save_dataset(const Dataset& data, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  write_dataset(data, out);
}

std::vector<FeatureRow> load_feature_rows(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open features file " + path.string());
  std::vector<FeatureRow> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      FeatureRow row;
      row.id = j.contains("id") ? string_field(j, "id") : std::to_string(rows.size());
      row.features = to_vector(j.at("features"), "features");
      if (!rows.empty() && row.features.size() != rows.front().features.size()) {
        throw DataError("inconsistent feature dimension");
      }
      rows.push_back(std::move(row));
    } catch (const std::exception& e) {
      throw DataError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return rows;
}

}  // namespace scout
