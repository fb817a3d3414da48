#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "scout/dataset.hpp"
#include "scout/rng.hpp"

namespace testing_helpers {

inline scout::ModelRegistry make_registry(int k1, std::vector<double> fixed = {}) {
  std::vector<scout::ModelInfo> models;
  for (int j = 0; j < k1; ++j) {
    scout::ModelInfo m;
    m.name = "dep" + std::to_string(j);
    m.latency_s = 1.0 + j;
    m.memory_gb = 2.0 + 3.0 * j;
    models.push_back(m);
  }
  for (std::size_t i = 0; i < fixed.size(); ++i) {
    scout::ModelInfo m;
    m.name = "inv" + std::to_string(i);
    m.kind = scout::ModelKind::Invariant;
    m.fixed_score = fixed[i];
    m.latency_s = 50.0 + static_cast<double>(i);
    m.memory_gb = 1.0;
    models.push_back(m);
  }
  return scout::ModelRegistry(models);
}

inline scout::ExampleRecord make_record(const std::string& object, const std::string& view, const std::string& tag,
                                        Eigen::VectorXd features, Eigen::VectorXd scores) {
  scout::ExampleRecord r;
  r.object_id = object;
  r.view_id = view;
  r.id = object + "_" + view;
  r.tag = tag;
  r.features = std::move(features);
  r.scores_dep = std::move(scores);
  return r;
}

// Random records: n_objects x views, features ~ N(0, 1), scores ~ N(0, 1).
inline scout::Dataset random_dataset(int n_objects, int views, int dim, int k1, std::uint64_t seed, int n_tags = 3) {
  scout::Rng rng(seed);
  scout::Dataset d;
  for (int o = 0; o < n_objects; ++o) {
    const std::string tag = "t" + std::to_string(o % n_tags);
    for (int v = 0; v < views; ++v) {
      Eigen::VectorXd x(dim), s(k1);
      for (auto& e : x) e = rng.normal();
      for (auto& e : s) e = rng.normal();
      d.records.push_back(make_record("o" + std::to_string(o), "v" + std::to_string(v), tag, x, s));
    }
  }
  return d;
}

}  // namespace testing_helpers
