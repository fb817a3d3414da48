#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "scout/dataset.hpp"

namespace scout::synth {

struct SynthConfig {
  int n_objects = 150;
  int views_per_object = 6;
  int dim = 16;
  int k1 = 4;
  int k2 = 2;
  int n_tags = 6;
  double difficulty_amplitude = 1.0;
  double relative_amplitude = 1.0;
  // Spread of the per-tag bias inside the relative term (before relative_amplitude).
  double tag_bias = 0.5;
  // Per-model score noise; a single value is broadcast to all k1 models.
  std::vector<double> noise_sigmas{0.3};
  // Scale of the per-view feature perturbation around the object mean.
  double view_spread = 0.5;
  double score_offset = 3.0;
  // Quantiles of the dependent-score marginal for the invariant fixed
  // scores. Empty means 0.6 for a single model and an even 0.4..0.8 ramp otherwise.
  std::vector<double> inv_quantiles;
  std::uint64_t seed = 0;

  void validate() const;
  Eigen::VectorXd sigmas() const;
  static SynthConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

struct GroundTruth {
  Eigen::VectorXd difficulty_dir;    // a, orthogonal to every centred relative direction
  Eigen::MatrixXd relative_dirs;     // k1 x D, before centring across models
  Eigen::MatrixXd tag_biases;        // n_tags x k1
  Eigen::VectorXd difficulty;        // per record d(x)
  Eigen::MatrixXd relative;          // per record centred r_j(x, tag), N x k1
  Eigen::MatrixXd noise;             // N x k1
};

struct SynthData {
  Dataset data;
  ModelRegistry registry;
  GroundTruth truth;
};

// The dependent part of the output depends only on the seed and the
// dependent-side parameters, never on k2.
SynthData generate(const SynthConfig& cfg);

std::vector<double> default_inv_quantiles(int k2);

// p_hat = p_star + eps with eps_j ~ N(0, sigma_j^2) independent of
// everything else (homoscedastic per model, uncorrelated across models).
Eigen::MatrixXd perturb_probabilities(const Eigen::MatrixXd& p_star, const Eigen::VectorXd& sigmas,
                                      std::uint64_t seed);

void write_synth(const SynthData& s, const std::filesystem::path& dataset_path,
                 const std::filesystem::path& registry_path);

}  // namespace scout::synth
