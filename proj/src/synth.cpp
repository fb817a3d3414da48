#include "scout/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <string>

#include "scout/rng.hpp"
#include "scout/stats.hpp"

namespace scout::synth {

namespace {

const char* const kDefaultDependentNames[] = {"Hunyuan3D", "InstantMesh", "TRELLIS", "TripoSR"};
const double kDefaultLatency[] = {30.0, 10.0, 10.0, 0.5};
const double kDefaultMemory[] = {6.0, 24.0, 16.0, 6.0};

std::string padded(const char* prefix, int value, int width) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s%0*d", prefix, width, value);
  return buf;
}

Eigen::MatrixXd gaussian(Rng& rng, Eigen::Index rows, Eigen::Index cols, double scale) {
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = scale * rng.normal();
  return m;
}

ModelRegistry make_registry(const SynthConfig& cfg, const std::vector<double>& fixed) {
  std::vector<ModelInfo> models;
  for (int j = 0; j < cfg.k1; ++j) {
    ModelInfo m;
    if (cfg.k1 == 4) {
      m.name = kDefaultDependentNames[j];
      m.latency_s = kDefaultLatency[j];
      m.memory_gb = kDefaultMemory[j];
    } else {
      m.name = padded("dep", j, 2);
      m.latency_s = 0.5 + j;
      m.memory_gb = 4.0 + 2.0 * j;
    }
    models.push_back(std::move(m));
  }
  for (int i = 0; i < cfg.k2; ++i) {
    ModelInfo m;
    m.name = padded("scanner", i, 2);
    m.kind = ModelKind::Invariant;
    m.fixed_score = fixed[static_cast<std::size_t>(i)];
    m.latency_s = 120.0 + 30.0 * i;
    m.memory_gb = 2.0 + i;
    models.push_back(std::move(m));
  }
  return ModelRegistry(std::move(models));
}

}  // namespace

void SynthConfig::validate() const {
  if (n_objects < 1 || views_per_object < 1 || dim < 1 || k1 < 1 || n_tags < 1)
    throw std::invalid_argument("synth counts must be >= 1");
  if (k2 < 0) throw std::invalid_argument("synth k2 must be >= 0");
  if (k1 < 2) throw std::invalid_argument("synth needs at least two dependent models");
  if (difficulty_amplitude < 0 || relative_amplitude < 0 || tag_bias < 0 || view_spread < 0)
    throw std::invalid_argument("synth amplitudes must be >= 0");
  if (noise_sigmas.empty() || (noise_sigmas.size() != 1 && noise_sigmas.size() != static_cast<std::size_t>(k1)))
    throw std::invalid_argument("noise_sigmas must have one entry or k1 entries");
  for (double s : noise_sigmas)
    if (!(s >= 0)) throw std::invalid_argument("noise sigmas must be >= 0");
  if (!inv_quantiles.empty() && inv_quantiles.size() != static_cast<std::size_t>(k2))
    throw std::invalid_argument("inv_quantiles must have k2 entries");
  for (double q : inv_quantiles)
    if (!(q >= 0 && q <= 1)) throw std::invalid_argument("inv_quantiles must lie in [0, 1]");
}

Eigen::VectorXd SynthConfig::sigmas() const {
  if (noise_sigmas.size() == 1) return Eigen::VectorXd::Constant(k1, noise_sigmas[0]);
  return Eigen::Map<const Eigen::VectorXd>(noise_sigmas.data(), static_cast<Eigen::Index>(noise_sigmas.size()));
}

SynthConfig SynthConfig::from_json(const nlohmann::json& j) {
  SynthConfig c;
  c.n_objects = j.value("n_objects", c.n_objects);
  c.views_per_object = j.value("views_per_object", c.views_per_object);
  c.dim = j.value("dim", c.dim);
  c.k1 = j.value("k1", c.k1);
  c.k2 = j.value("k2", c.k2);
  c.n_tags = j.value("n_tags", c.n_tags);
  c.difficulty_amplitude = j.value("difficulty_amplitude", c.difficulty_amplitude);
  c.relative_amplitude = j.value("relative_amplitude", c.relative_amplitude);
  c.tag_bias = j.value("tag_bias", c.tag_bias);
  c.noise_sigmas = j.value("noise_sigmas", c.noise_sigmas);
  c.view_spread = j.value("view_spread", c.view_spread);
  c.score_offset = j.value("score_offset", c.score_offset);
  c.inv_quantiles = j.value("inv_quantiles", c.inv_quantiles);
  c.seed = j.value("seed", c.seed);
  c.validate();
  return c;
}

nlohmann::json SynthConfig::to_json() const {
  return {{"n_objects", n_objects},
          {"views_per_object", views_per_object},
          {"dim", dim},
          {"k1", k1},
          {"k2", k2},
          {"n_tags", n_tags},
          {"difficulty_amplitude", difficulty_amplitude},
          {"relative_amplitude", relative_amplitude},
          {"tag_bias", tag_bias},
          {"noise_sigmas", noise_sigmas},
          {"view_spread", view_spread},
          {"score_offset", score_offset},
          {"inv_quantiles", inv_quantiles},
          {"seed", seed}};
}

std::vector<double> default_inv_quantiles(int k2) {
  std::vector<double> q;
  if (k2 == 1) return {0.6};
  for (int i = 0; i < k2; ++i) q.push_back(0.4 + 0.4 * i / (k2 - 1));
  return q;
}

SynthData generate(const SynthConfig& cfg) {
  cfg.validate();
  const Eigen::Index D = cfg.dim;
  const Eigen::Index k1 = cfg.k1;
  const std::size_t n = static_cast<std::size_t>(cfg.n_objects) * static_cast<std::size_t>(cfg.views_per_object);
  const double dir_scale = 1.0 / std::sqrt(static_cast<double>(D));

  Rng param_rng(Rng::derive(cfg.seed, 1));
  Rng object_rng(Rng::derive(cfg.seed, 2));
  Rng view_rng(Rng::derive(cfg.seed, 3));
  Rng noise_rng(Rng::derive(cfg.seed, 4));

  GroundTruth truth;
  truth.relative_dirs = gaussian(param_rng, k1, D, dir_scale);
  truth.tag_biases = gaussian(param_rng, cfg.n_tags, k1, cfg.tag_bias);
  Eigen::VectorXd a = gaussian(param_rng, D, 1, dir_scale);

  // Project a off the span of the centred relative directions so the
  // difficulty signal carries no information about relative performance.
  Eigen::MatrixXd centred = truth.relative_dirs.rowwise() - truth.relative_dirs.colwise().mean();
  if (centred.norm() > 0) {
    Eigen::MatrixXd basis = centred.transpose();  // D x k1
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(basis);
    const Eigen::Index rank = std::min<Eigen::Index>(D - 1, k1 - 1);
    Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(D, std::max<Eigen::Index>(rank, 0));
    if (rank > 0) a -= q * (q.transpose() * a);
  }
  if (a.norm() > 0) a *= 1.0 / a.norm();
  truth.difficulty_dir = a;

  truth.difficulty.resize(static_cast<Eigen::Index>(n));
  truth.relative.resize(static_cast<Eigen::Index>(n), k1);
  truth.noise.resize(static_cast<Eigen::Index>(n), k1);
  const Eigen::VectorXd sig = cfg.sigmas();

  SynthData out;
  out.data.records.reserve(n);
  const int obj_width = cfg.n_objects > 9999 ? 6 : 4;
  for (int o = 0; o < cfg.n_objects; ++o) {
    const Eigen::VectorXd mu = gaussian(object_rng, D, 1, 1.0);
    const int tag = static_cast<int>(object_rng.below(static_cast<std::uint64_t>(cfg.n_tags)));
    for (int v = 0; v < cfg.views_per_object; ++v) {
      const auto i = static_cast<Eigen::Index>(out.data.records.size());
      ExampleRecord r;
      r.object_id = padded("obj", o, obj_width);
      r.view_id = padded("v", v, 2);
      r.id = r.object_id + "_" + r.view_id;
      r.tag = padded("tag", tag, 2);
      r.features = mu + gaussian(view_rng, D, 1, cfg.view_spread);

      const double d = cfg.difficulty_amplitude * a.dot(r.features);
      Eigen::VectorXd rel = truth.relative_dirs * r.features + truth.tag_biases.row(tag).transpose();
      rel = cfg.relative_amplitude * (rel.array() - rel.mean()).matrix();
      Eigen::VectorXd eta(k1);
      for (Eigen::Index j = 0; j < k1; ++j) eta[j] = sig[j] * noise_rng.normal();

      r.scores_dep = (rel + eta).array() + (cfg.score_offset + d);
      truth.difficulty[i] = d;
      truth.relative.row(i) = rel.transpose();
      truth.noise.row(i) = eta.transpose();
      out.data.records.push_back(std::move(r));
    }
  }

  std::vector<double> fixed;
  if (cfg.k2 > 0) {
    std::vector<double> pooled;
    pooled.reserve(n * static_cast<std::size_t>(k1));
    for (const auto& r : out.data.records) pooled.insert(pooled.end(), r.scores_dep.data(), r.scores_dep.data() + k1);
    const auto q = cfg.inv_quantiles.empty() ? default_inv_quantiles(cfg.k2) : cfg.inv_quantiles;
    for (double qi : q) fixed.push_back(stats::quantile(pooled, qi));
  }
  out.registry = make_registry(cfg, fixed);
  out.truth = std::move(truth);
  return out;
}

Eigen::MatrixXd perturb_probabilities(const Eigen::MatrixXd& p_star, const Eigen::VectorXd& sigmas,
                                      std::uint64_t seed) {
  if (sigmas.size() != p_star.cols()) throw std::invalid_argument("one sigma per column required");
  Rng rng(seed);
  Eigen::MatrixXd out = p_star;
  for (Eigen::Index i = 0; i < out.rows(); ++i)
    for (Eigen::Index j = 0; j < out.cols(); ++j) out(i, j) += sigmas[j] * rng.normal();
  return out;
}

void write_synth(const SynthData& s, const std::filesystem::path& dataset_path,
                 const std::filesystem::path& registry_path) {
  save_dataset(s.data, dataset_path);
  save_registry(s.registry, registry_path);
}

}  // namespace scout::synth
