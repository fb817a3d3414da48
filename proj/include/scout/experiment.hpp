#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "scout/costs.hpp"
#include "scout/dataset.hpp"
#include "scout/eval.hpp"
#include "scout/neuralnet.hpp"
#include "scout/router.hpp"
#include "scout/scout_router.hpp"
#include "scout/synth.hpp"

namespace scout {

struct BaselineOptions {
  std::size_t knn_k = 32;
  double lr_alpha = 1.0;
  int mf_rank = 32;
  nn::TrainConfig train;  // MLP and MF; loss is forced to MSE
};

struct ExperimentConfig {
  std::optional<synth::SynthConfig> synth;
  std::filesystem::path dataset_path;
  std::filesystem::path registry_path;
  SplitSpec split;
  ScoutOptions scout;
  int no_dc_epochs = kNoDecouplingEpochs;
  BaselineOptions baselines;
  std::vector<std::string> routers{"mlp", "mf", "knn", "lr", "scout_no_dc", "scout"};
  std::size_t box_samples = 256;
  std::size_t lambda_points = 64;
  bool exclude_zero_iqr = true;
  std::vector<std::uint64_t> seeds{0};
  std::filesystem::path out_dir = "results";
  int jobs = 1;

  void validate() const;
  // Default synthetic benchmark: generated data and a training budget
  // sized for a few hundred records.
  static ExperimentConfig synthetic_benchmark();
  // Relative paths are resolved against base_dir.
  static ExperimentConfig from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
  nlohmann::json to_json() const;
};

nlohmann::json train_config_to_json(const nn::TrainConfig& c);
nn::TrainConfig train_config_from_json(const nlohmann::json& j, nn::TrainConfig base = {});

struct LoadedData {
  Dataset data;
  ModelRegistry registry;
};

LoadedData load_experiment_data(const ExperimentConfig& cfg);

// Names accepted by train_router.
const std::vector<std::string>& trainable_routers();
bool is_trainable_router(const std::string& name);

std::unique_ptr<Router> train_router(const std::string& name, const Dataset& train, const ModelRegistry& registry,
                                     const ExperimentConfig& cfg, std::uint64_t seed);

// Row labels as printed in the report tables.
std::string regret_label(const std::string& router);
std::string aiq_label(const std::string& router);

inline constexpr std::array<const char*, 3> kSubspaces{"C0", "C", "C_inv_inf"};
inline constexpr std::array<CostFamily, 3> kFamilies{CostFamily::LatencyMemory, CostFamily::Latency,
                                                     CostFamily::Memory};

struct RegretRow {
  std::string key;
  std::string label;
  std::array<eval::RegretSummary, 3> cells;
};

struct AiqRow {
  std::string key;
  std::string label;
  std::array<double, 3> mean{};
  std::array<double, 3> se{};
  std::array<std::vector<double>, 3> per_seed;
};

struct CurveRecord {
  std::string label;
  CostFamily family;
  std::uint64_t seed;
  eval::DeferralCurve curve;
};

struct AiqBounds {
  std::uint64_t seed;
  CostFamily family;
  double c_min;
  double c_max;
};

struct ExperimentReport {
  std::vector<std::uint64_t> seeds;
  std::vector<RegretRow> regret;
  std::vector<AiqRow> aiq;
  std::vector<AiqBounds> bounds;
  std::vector<CurveRecord> curves;
  std::size_t test_records = 0;  // summed over seeds
  std::size_t box_samples = 0;

  nlohmann::json to_json() const;
};

ExperimentReport run_experiment(const ExperimentConfig& cfg, const LoadedData& data);

// regret_table.csv, regret_long.csv, aiq_table.csv, curves.csv, report.json
void write_report(const ExperimentReport& report, const std::filesystem::path& dir);

// Lambda values at the midpoints between every score/cost breakpoint of
// the true scores, so an oracle sweep visits every distinct policy.
std::vector<double> oracle_lambdas(const Dataset& test, const ModelRegistry& registry, const Eigen::VectorXd& base);

struct SweepRow {
  double value = 0.0;
  eval::RegretSummary c0;
  eval::RegretSummary box;
};

const std::vector<std::string>& sweep_parameters();
std::string default_sweep_router(const std::string& parameter);

// One-at-a-time sweep. Regrets pooled over records, cost vectors and seeds.
std::vector<SweepRow> run_sweep(const ExperimentConfig& cfg, const LoadedData& data, const std::string& parameter,
                                const std::vector<double>& grid, const std::string& router);
void write_sweep_csv(const std::vector<SweepRow>& rows, const std::string& parameter, const std::string& router,
                     const std::filesystem::path& path);

struct Fig4Row {
  int k2 = 0;
  std::string variant;  // "decoupled" or "no_decoupling"
  double mean = 0.0;
  double se = 0.0;
  std::vector<double> per_seed;  // mean dependent-only regret under C0, seed order
};

// Regenerates the synthetic data for every (k2, seed), trains both
// variants and evaluates under C0.
std::vector<Fig4Row> fig4_experiment(const synth::SynthConfig& base, const std::vector<int>& k2_values,
                                     const std::vector<std::uint64_t>& seeds, const ExperimentConfig& training);
void write_fig4_csv(const std::vector<Fig4Row>& rows, const std::filesystem::path& path);

// Runs fn(i) for i in [0, n) on up to `jobs` threads.
void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn);

}  // namespace scout
