#include "scout/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <stdexcept>
#include <thread>

#include "scout/baselines.hpp"
#include "scout/rng.hpp"
#include "scout/stats.hpp"

namespace scout {

namespace {

constexpr std::uint64_t kSplitStream = 31;
constexpr std::uint64_t kBoxStream = 41;

const char* split_mode_name(SplitMode m) { return m == SplitMode::NovelObject ? "novel_object" : "novel_view"; }

SplitMode split_mode_from(const std::string& s) {
  if (s == "novel_object") return SplitMode::NovelObject;
  if (s == "novel_view") return SplitMode::NovelView;
  throw std::invalid_argument("unknown split mode '" + s + "'");
}

std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

std::string num(double v) { return fmt("%.10g", v); }

nlohmann::json finite_or_null(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

double mean_of(const std::vector<double>& xs) { return xs.empty() ? 0.0 : stats::mean(xs); }

TrainTestSplit split_for_seed(const Dataset& data, const SplitSpec& base, std::uint64_t seed) {
  SplitSpec s = base;
  s.seed = Rng::derive(base.seed ^ seed, kSplitStream);
  return split(data, s);
}

double score_spread(const Dataset& train, const ModelRegistry& registry) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const auto& r : train.records) {
    const Eigen::VectorXd s = full_scores(r, registry);
    lo = std::min(lo, s.minCoeff());
    hi = std::max(hi, s.maxCoeff());
  }
  return hi - lo;
}

struct SubspaceCosts {
  std::array<std::vector<CostVector>, 3> sets;
};

SubspaceCosts build_costs(const Dataset& train, const ModelRegistry& registry, const ExperimentConfig& cfg,
                          std::uint64_t seed) {
  SubspaceCosts c;
  c.sets[0] = {canonical_c0(registry)};
  const CostBox box = build_interesting_box(train, registry, cfg.exclude_zero_iqr);
  c.sets[1] = sample_box(box, cfg.box_samples, Rng::derive(seed, kBoxStream));
  c.sets[2] = with_invariant_infinite(c.sets[1], registry);
  return c;
}

}  // namespace

// ---- configuration ------------------------------------------------------

nlohmann::json train_config_to_json(const nn::TrainConfig& c) {
  return {{"learning_rate", c.learning_rate},
          {"weight_decay", c.weight_decay},
          {"batch_size", c.batch_size},
          {"epochs", c.epochs},
          {"dropout", c.dropout_p},
          {"hidden", c.hidden},
          {"decoupled_weight_decay", c.decoupled_weight_decay}};
}

nn::TrainConfig train_config_from_json(const nlohmann::json& j, nn::TrainConfig c) {
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.weight_decay = j.value("weight_decay", c.weight_decay);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.epochs = j.value("epochs", c.epochs);
  c.dropout_p = j.value("dropout", c.dropout_p);
  c.hidden = j.value("hidden", c.hidden);
  c.decoupled_weight_decay = j.value("decoupled_weight_decay", c.decoupled_weight_decay);
  c.validate();
  return c;
}

void ExperimentConfig::validate() const {
  if (seeds.empty()) throw std::invalid_argument("config needs at least one seed");
  if (!synth && (dataset_path.empty() || registry_path.empty()))
    throw std::invalid_argument("config needs either a synth section or dataset and registry paths");
  if (routers.empty()) throw std::invalid_argument("config needs at least one router");
  for (const auto& r : routers)
    if (!is_trainable_router(r)) throw std::invalid_argument("unknown router '" + r + "'");
  if (box_samples == 0) throw std::invalid_argument("box_samples must be positive");
  if (lambda_points < 2) throw std::invalid_argument("lambda_points must be at least 2");
  if (jobs < 1) throw std::invalid_argument("jobs must be at least 1");
  if (no_dc_epochs < 1) throw std::invalid_argument("no_dc_epochs must be positive");
  if (baselines.knn_k < 1 || baselines.mf_rank < 1 || !(baselines.lr_alpha > 0))
    throw std::invalid_argument("invalid baseline options");
  scout.smoothing.validate();
  scout.train.validate();
  if (!(scout.alpha > 0) || scout.folds < 2) throw std::invalid_argument("invalid scout options");
  if (!(split.test_fraction > 0 && split.test_fraction < 1)) throw std::invalid_argument("test_fraction must lie in (0, 1)");
}

ExperimentConfig ExperimentConfig::synthetic_benchmark() {
  ExperimentConfig c;
  c.synth = synth::SynthConfig{};
  c.scout.train.learning_rate = 1e-3;
  c.scout.train.epochs = 30;
  c.baselines.train = c.scout.train;
  return c;
}

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j, const std::filesystem::path& base_dir) {
  ExperimentConfig c;
  auto resolve = [&](const std::string& p) {
    std::filesystem::path path(p);
    return path.is_relative() && !base_dir.empty() ? base_dir / path : path;
  };
  if (j.contains("synth")) c.synth = synth::SynthConfig::from_json(j.at("synth"));
  if (j.contains("dataset")) c.dataset_path = resolve(j.at("dataset").get<std::string>());
  if (j.contains("registry")) c.registry_path = resolve(j.at("registry").get<std::string>());
  if (j.contains("split")) {
    const auto& s = j.at("split");
    c.split.mode = split_mode_from(s.value("mode", std::string(split_mode_name(c.split.mode))));
    c.split.test_fraction = s.value("test_fraction", c.split.test_fraction);
    c.split.seed = s.value("seed", c.split.seed);
  }
  if (j.contains("smoothing")) {
    c.scout.smoothing.beta = j.at("smoothing").value("beta", c.scout.smoothing.beta);
    c.scout.smoothing.temperature = j.at("smoothing").value("temperature", c.scout.smoothing.temperature);
  }
  if (j.contains("train")) c.scout.train = train_config_from_json(j.at("train"), c.scout.train);
  if (j.contains("scout")) {
    const auto& s = j.at("scout");
    c.scout.alpha = s.value("alpha", c.scout.alpha);
    c.scout.folds = s.value("folds", c.scout.folds);
    c.scout.standardize = s.value("standardize", c.scout.standardize);
    c.scout.out_of_fold_proxies = s.value("out_of_fold_proxies", c.scout.out_of_fold_proxies);
    c.no_dc_epochs = s.value("no_dc_epochs", c.no_dc_epochs);
  }
  c.baselines.train = c.scout.train;
  if (j.contains("baselines")) {
    const auto& b = j.at("baselines");
    c.baselines.knn_k = b.value("knn_k", c.baselines.knn_k);
    c.baselines.lr_alpha = b.value("lr_alpha", c.baselines.lr_alpha);
    c.baselines.mf_rank = b.value("mf_rank", c.baselines.mf_rank);
    if (b.contains("train")) c.baselines.train = train_config_from_json(b.at("train"), c.baselines.train);
  }
  c.routers = j.value("routers", c.routers);
  if (j.contains("costs")) {
    const auto& k = j.at("costs");
    c.box_samples = k.value("box_samples", c.box_samples);
    c.lambda_points = k.value("lambda_points", c.lambda_points);
    c.exclude_zero_iqr = k.value("exclude_zero_iqr", c.exclude_zero_iqr);
  }
  c.seeds = j.value("seeds", c.seeds);
  if (j.contains("out")) c.out_dir = resolve(j.at("out").get<std::string>());
  c.jobs = j.value("jobs", c.jobs);
  c.validate();
  return c;
}

nlohmann::json ExperimentConfig::to_json() const {
  nlohmann::json j;
  if (synth) j["synth"] = synth->to_json();
  if (!dataset_path.empty()) j["dataset"] = dataset_path.string();
  if (!registry_path.empty()) j["registry"] = registry_path.string();
  j["split"] = {{"mode", split_mode_name(split.mode)}, {"test_fraction", split.test_fraction}, {"seed", split.seed}};
  j["smoothing"] = {{"beta", scout.smoothing.beta}, {"temperature", scout.smoothing.temperature}};
  j["train"] = train_config_to_json(scout.train);
  j["scout"] = {{"alpha", scout.alpha},
                {"folds", scout.folds},
                {"standardize", scout.standardize},
                {"out_of_fold_proxies", scout.out_of_fold_proxies},
                {"no_dc_epochs", no_dc_epochs}};
  j["baselines"] = {{"knn_k", baselines.knn_k},
                    {"lr_alpha", baselines.lr_alpha},
                    {"mf_rank", baselines.mf_rank},
                    {"train", train_config_to_json(baselines.train)}};
  j["routers"] = routers;
  j["costs"] = {{"box_samples", box_samples}, {"lambda_points", lambda_points}, {"exclude_zero_iqr", exclude_zero_iqr}};
  j["seeds"] = seeds;
  return j;
}

LoadedData load_experiment_data(const ExperimentConfig& cfg) {
  if (cfg.synth) {
    auto s = synth::generate(*cfg.synth);
    return {std::move(s.data), std::move(s.registry)};
  }
  LoadedData d;
  d.registry = load_registry(cfg.registry_path);
  d.data = load_dataset(cfg.dataset_path, d.registry);
  return d;
}

// ---- routers ------------------------------------------------------------

const std::vector<std::string>& trainable_routers() {
  static const std::vector<std::string> names{"scout", "scout_no_dc", "mlp", "mf", "knn", "lr", "input_agnostic", "oracle"};
  return names;
}

bool is_trainable_router(const std::string& name) {
  const auto& n = trainable_routers();
  return std::find(n.begin(), n.end(), name) != n.end();
}

std::unique_ptr<Router> train_router(const std::string& name, const Dataset& train, const ModelRegistry& registry,
                                     const ExperimentConfig& cfg, std::uint64_t seed) {
  if (name == "scout") {
    ScoutOptions opts = cfg.scout;
    opts.train.seed = seed;
    return train_scout(train, registry, opts);
  }
  if (name == "scout_no_dc") {
    nn::TrainConfig tc = cfg.scout.train;
    tc.epochs = cfg.no_dc_epochs;
    tc.seed = seed;
    return train_no_decoupling(train, registry, cfg.scout.smoothing, tc, cfg.scout.standardize);
  }
  if (name == "mlp" || name == "mf") {
    nn::TrainConfig tc = cfg.baselines.train;
    tc.loss = nn::LossKind::MSE;
    tc.seed = seed;
    if (name == "mlp") return train_mlp_router(train, registry, tc);
    return train_mf_router(train, registry, cfg.baselines.mf_rank, tc);
  }
  if (name == "knn") return train_knn(train, registry, cfg.baselines.knn_k);
  if (name == "lr") return train_ridge_router(train, registry, cfg.baselines.lr_alpha);
  if (name == "input_agnostic") return train_input_agnostic(train, registry);
  if (name == "oracle") return std::make_unique<OracleRouter>(registry);
  throw std::invalid_argument("unknown router '" + name + "'");
}

std::string regret_label(const std::string& router) {
  static const std::map<std::string, std::string> labels{
      {"mlp", "MLP"},   {"mf", "MF"},     {"knn", "kNN"},
      {"lr", "LR"},     {"scout", "Ours"}, {"scout_no_dc", "Ours (no decoupling)"},
      {"input_agnostic", "Input-agnostic"}, {"oracle", "Oracle"}, {"zero", "Zero router"}};
  if (auto it = labels.find(router); it != labels.end()) return it->second;
  if (router.rfind("always:", 0) == 0) return "Always " + router.substr(7);
  return router;
}

std::string aiq_label(const std::string& router) {
  if (router == "scout_no_dc") return "Ours (no dc)";
  return regret_label(router);
}

// ---- main experiment ----------------------------------------------------

std::vector<double> oracle_lambdas(const Dataset& test, const ModelRegistry& registry, const Eigen::VectorXd& base) {
  std::vector<double> breaks{0.0};
  for (const auto& r : test.records) {
    const Eigen::VectorXd s = full_scores(r, registry);
    for (Eigen::Index a = 0; a < s.size(); ++a) {
      for (Eigen::Index b = a + 1; b < s.size(); ++b) {
        const double db = base[a] - base[b];
        if (db == 0.0) continue;
        const double l = (s[a] - s[b]) / db;
        if (l > 0.0 && std::isfinite(l)) breaks.push_back(l);
      }
    }
  }
  std::sort(breaks.begin(), breaks.end());
  breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());
  std::vector<double> out{0.0};
  for (std::size_t i = 1; i < breaks.size(); ++i) {
    const double mid = 0.5 * (breaks[i - 1] + breaks[i]);
    if (mid > out.back()) out.push_back(mid);
  }
  const double last = 2.0 * breaks.back() + 1.0;
  if (last > out.back()) out.push_back(last);
  return out;
}

namespace {

struct SeedOutcome {
  std::vector<std::string> regret_keys;
  std::map<std::string, std::array<std::vector<double>, 3>> regrets;
  std::vector<std::string> aiq_keys;
  std::map<std::string, std::array<double, 3>> aiq;
  std::vector<AiqBounds> bounds;
  std::vector<CurveRecord> curves;
  std::size_t n_test = 0;
};

SeedOutcome run_seed(const ExperimentConfig& cfg, const LoadedData& data, std::uint64_t seed) {
  SeedOutcome out;
  const auto& reg = data.registry;
  const auto parts = split_for_seed(data.data, cfg.split, seed);
  const Dataset& train = parts.train;
  const Dataset& test = parts.test;
  out.n_test = test.size();
  const auto costs = build_costs(train, reg, cfg, seed);

  std::vector<std::pair<std::string, std::unique_ptr<Router>>> routers;
  for (const auto& name : cfg.routers) {
    if (name == "input_agnostic" || name == "oracle") continue;
    routers.emplace_back(name, train_router(name, train, reg, cfg, seed));
  }
  routers.emplace_back("input_agnostic", train_input_agnostic(train, reg));
  for (std::size_t j = 0; j < reg.num_dependent(); ++j)
    routers.emplace_back("always:" + reg[j].name, std::make_unique<AlwaysModelRouter>(reg, j));
  routers.emplace_back("oracle", std::make_unique<OracleRouter>(reg));

  std::map<std::string, Eigen::MatrixXd> predictions;
  for (const auto& [key, router] : routers) {
    const Eigen::MatrixXd pred = router->predict_matrix(test);
    out.regret_keys.push_back(key);
    for (std::size_t s = 0; s < 3; ++s) out.regrets[key][s] = eval::regrets(*router, pred, test, costs.sets[s]);
    predictions.emplace(key, pred);
  }

  const double spread = score_spread(train, reg);
  std::vector<std::pair<std::string, const Router*>> curve_routers;
  for (const auto& [key, router] : routers) {
    if (key == "input_agnostic" || key == "oracle" || key.rfind("always:", 0) == 0) continue;
    curve_routers.emplace_back(key, router.get());
  }
  const Router* oracle = routers.back().second.get();

  for (std::size_t f = 0; f < kFamilies.size(); ++f) {
    const CostFamily fam = kFamilies[f];
    const Eigen::VectorXd base = family_base(reg, fam);
    std::vector<std::pair<std::string, eval::DeferralCurve>> curves;
    CostRay ray{base, default_lambda_grid(base, spread, cfg.lambda_points)};
    for (const auto& [key, router] : curve_routers)
      curves.emplace_back(key, eval::pareto_frontier(eval::deferral_points(*router, predictions.at(key), test, ray)));
    curves.emplace_back("zero", eval::zero_router_curve(eval::always_model_points(test, reg, base)));
    CostRay oracle_ray{base, oracle_lambdas(test, reg, base)};
    curves.emplace_back("oracle",
                        eval::pareto_frontier(eval::deferral_points(*oracle, predictions.at("oracle"), test, oracle_ray)));

    double c_min = -std::numeric_limits<double>::infinity();
    for (const auto& [key, c] : curves) c_min = std::max(c_min, c.points.front().cost);
    const double c_max = base.maxCoeff();
    out.bounds.push_back({seed, fam, c_min, c_max});
    for (auto& [key, c] : curves) {
      const double v = c_max > c_min ? eval::aiq(c, c_min, c_max) : std::numeric_limits<double>::quiet_NaN();
      if (f == 0) out.aiq_keys.push_back(key);
      out.aiq[key][f] = v;
      out.curves.push_back({aiq_label(key), fam, seed, std::move(c)});
    }
  }
  return out;
}

}  // namespace

void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn) {
  const std::size_t workers = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(jobs, 1)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> threads;
  for (std::size_t w = 0; w < workers; ++w) {
    threads.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : threads) t.join();
  if (error) std::rethrow_exception(error);
}

ExperimentReport run_experiment(const ExperimentConfig& cfg, const LoadedData& data) {
  cfg.validate();
  std::vector<SeedOutcome> outcomes(cfg.seeds.size());
  parallel_for(cfg.seeds.size(), cfg.jobs, [&](std::size_t i) { outcomes[i] = run_seed(cfg, data, cfg.seeds[i]); });

  ExperimentReport report;
  report.seeds = cfg.seeds;
  report.box_samples = cfg.box_samples;
  const auto& keys = outcomes.front().regret_keys;
  std::map<std::string, std::array<std::vector<double>, 3>> pooled;
  for (const auto& o : outcomes) {
    report.test_records += o.n_test;
    for (const auto& key : keys)
      for (std::size_t s = 0; s < 3; ++s) {
        const auto& v = o.regrets.at(key)[s];
        pooled[key][s].insert(pooled[key][s].end(), v.begin(), v.end());
      }
    report.bounds.insert(report.bounds.end(), o.bounds.begin(), o.bounds.end());
    report.curves.insert(report.curves.end(), o.curves.begin(), o.curves.end());
  }
  const auto& baseline = pooled.at("input_agnostic");
  for (const auto& key : keys) {
    RegretRow row{key, regret_label(key), {}};
    for (std::size_t s = 0; s < 3; ++s) row.cells[s] = eval::summarize_regret(pooled.at(key)[s], baseline[s]);
    report.regret.push_back(std::move(row));
  }
  for (const auto& key : outcomes.front().aiq_keys) {
    AiqRow row;
    row.key = key;
    row.label = aiq_label(key);
    for (std::size_t f = 0; f < 3; ++f) {
      for (const auto& o : outcomes) row.per_seed[f].push_back(o.aiq.at(key)[f]);
      row.mean[f] = stats::mean(row.per_seed[f]);
      row.se[f] = stats::standard_error(row.per_seed[f]);
    }
    report.aiq.push_back(std::move(row));
  }
  return report;
}

nlohmann::json ExperimentReport::to_json() const {
  nlohmann::json j;
  j["seeds"] = seeds;
  j["test_records"] = test_records;
  j["box_samples"] = box_samples;
  j["subspaces"] = kSubspaces;
  j["se_definition"] = "standard error of the pooled per-sample regrets (records x cost vectors x seeds)";
  auto rows = nlohmann::json::array();
  for (const auto& r : regret) {
    nlohmann::json cells;
    for (std::size_t s = 0; s < 3; ++s) {
      const auto& c = r.cells[s];
      cells[kSubspaces[s]] = {{"mean_regret", c.mean},
                              {"se", c.se},
                              {"ratio", finite_or_null(c.ratio)},
                              {"ratio_se", finite_or_null(c.ratio_se)},
                              {"count", c.count}};
    }
    rows.push_back({{"key", r.key}, {"method", r.label}, {"cells", cells}});
  }
  j["regret"] = rows;
  auto aiq_rows = nlohmann::json::array();
  for (const auto& r : aiq) {
    nlohmann::json cells;
    for (std::size_t f = 0; f < 3; ++f) {
      auto per = nlohmann::json::array();
      for (double v : r.per_seed[f]) per.push_back(finite_or_null(v));
      cells[family_name(kFamilies[f])] = {{"aiq", finite_or_null(r.mean[f])}, {"se", finite_or_null(r.se[f])}, {"per_seed", per}};
    }
    aiq_rows.push_back({{"key", r.key}, {"method", r.label}, {"cells", cells}});
  }
  j["aiq"] = aiq_rows;
  auto b = nlohmann::json::array();
  for (const auto& x : bounds) b.push_back({{"seed", x.seed}, {"family", family_name(x.family)}, {"c_min", x.c_min}, {"c_max", x.c_max}});
  j["aiq_bounds"] = b;
  auto cj = nlohmann::json::array();
  for (const auto& c : curves) {
    auto pts = nlohmann::json::array();
    for (const auto& p : c.curve.points) pts.push_back({p.cost, p.utility});
    cj.push_back({{"method", c.label}, {"family", family_name(c.family)}, {"seed", c.seed}, {"points", pts}});
  }
  j["curves"] = cj;
  return j;
}

void write_report(const ExperimentReport& report, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  {
    auto out = open_out(dir / "regret_table.csv");
    out << "method";
    for (const char* s : kSubspaces) out << ',' << s << ',' << s << "_se";
    out << '\n';
    for (const auto& r : report.regret) {
      out << '"' << r.label << '"';
      for (const auto& c : r.cells) out << ',' << fmt("%.4f", c.ratio) << ',' << fmt("%.4f", c.ratio_se);
      out << '\n';
    }
  }
  {
    auto out = open_out(dir / "regret_long.csv");
    out << "method,subspace,mean_regret,se,ratio,ratio_se,count\n";
    for (const auto& r : report.regret)
      for (std::size_t s = 0; s < 3; ++s) {
        const auto& c = r.cells[s];
        out << '"' << r.label << "\"," << kSubspaces[s] << ',' << num(c.mean) << ',' << num(c.se) << ','
            << num(c.ratio) << ',' << num(c.ratio_se) << ',' << c.count << '\n';
      }
  }
  {
    auto out = open_out(dir / "aiq_table.csv");
    out << "method";
    for (auto f : kFamilies) out << ',' << family_name(f) << ',' << family_name(f) << "_se";
    out << '\n';
    for (const auto& r : report.aiq) {
      out << '"' << r.label << '"';
      for (std::size_t f = 0; f < 3; ++f) out << ',' << fmt("%.4f", r.mean[f]) << ',' << fmt("%.4f", r.se[f]);
      out << '\n';
    }
  }
  {
    auto out = open_out(dir / "curves.csv");
    out << "method,family,seed,cost,utility\n";
    for (const auto& c : report.curves)
      for (const auto& p : c.curve.points)
        out << '"' << c.label << "\"," << family_name(c.family) << ',' << c.seed << ',' << num(p.cost) << ','
            << num(p.utility) << '\n';
  }
  auto out = open_out(dir / "report.json");
  out << report.to_json().dump(2) << '\n';
}

// ---- sweeps -------------------------------------------------------------

const std::vector<std::string>& sweep_parameters() {
  static const std::vector<std::string> p{"beta", "temperature", "lr", "epochs", "alpha", "knn_k"};
  return p;
}

std::string default_sweep_router(const std::string& parameter) {
  if (parameter == "knn_k") return "knn";
  if (parameter == "alpha") return "lr";
  return "scout";
}

namespace {

ExperimentConfig with_parameter(ExperimentConfig cfg, const std::string& parameter, double v,
                                const std::string& router) {
  auto as_count = [&](double x) {
    if (!(x >= 1) || x != std::floor(x)) throw std::invalid_argument(parameter + " values must be positive integers");
    return x;
  };
  if (parameter == "beta") {
    cfg.scout.smoothing.beta = v;
  } else if (parameter == "temperature") {
    cfg.scout.smoothing.temperature = v;
  } else if (parameter == "lr") {
    cfg.scout.train.learning_rate = v;
    cfg.baselines.train.learning_rate = v;
  } else if (parameter == "epochs") {
    cfg.scout.train.epochs = static_cast<int>(as_count(v));
    cfg.baselines.train.epochs = static_cast<int>(as_count(v));
    if (router == "scout_no_dc") cfg.no_dc_epochs = static_cast<int>(as_count(v));
  } else if (parameter == "alpha") {
    if (router == "lr") {
      cfg.baselines.lr_alpha = v;
    } else {
      cfg.scout.alpha = v;
    }
  } else if (parameter == "knn_k") {
    cfg.baselines.knn_k = static_cast<std::size_t>(as_count(v));
  } else {
    throw std::invalid_argument("unknown sweep parameter '" + parameter + "'");
  }
  cfg.validate();
  return cfg;
}

}  // namespace

std::vector<SweepRow> run_sweep(const ExperimentConfig& cfg, const LoadedData& data, const std::string& parameter,
                                const std::vector<double>& grid, const std::string& router) {
  const auto& params = sweep_parameters();
  if (std::find(params.begin(), params.end(), parameter) == params.end())
    throw std::invalid_argument("unknown sweep parameter '" + parameter + "'");
  if (grid.empty()) throw std::invalid_argument("empty sweep grid");
  if (!is_trainable_router(router)) throw std::invalid_argument("unknown router '" + router + "'");

  std::vector<SweepRow> rows;
  for (double v : grid) {
    const ExperimentConfig c = with_parameter(cfg, parameter, v, router);
    struct Part {
      std::array<std::vector<double>, 2> mine, base;
    };
    std::vector<Part> parts(c.seeds.size());
    parallel_for(c.seeds.size(), c.jobs, [&](std::size_t i) {
      const auto seed = c.seeds[i];
      const auto sp = split_for_seed(data.data, c.split, seed);
      const auto costs = build_costs(sp.train, data.registry, c, seed);
      const auto r = train_router(router, sp.train, data.registry, c, seed);
      const auto base = train_input_agnostic(sp.train, data.registry);
      for (std::size_t s = 0; s < 2; ++s) {
        parts[i].mine[s] = eval::regrets(*r, sp.test, costs.sets[s]);
        parts[i].base[s] = eval::regrets(*base, sp.test, costs.sets[s]);
      }
    });
    std::array<std::vector<double>, 2> mine, base;
    for (const auto& p : parts)
      for (std::size_t s = 0; s < 2; ++s) {
        mine[s].insert(mine[s].end(), p.mine[s].begin(), p.mine[s].end());
        base[s].insert(base[s].end(), p.base[s].begin(), p.base[s].end());
      }
    rows.push_back({v, eval::summarize_regret(mine[0], base[0]), eval::summarize_regret(mine[1], base[1])});
  }
  return rows;
}

void write_sweep_csv(const std::vector<SweepRow>& rows, const std::string& parameter, const std::string& router,
                     const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "parameter,value,router,C0_mean_regret,C0_se,C0_ratio,C_mean_regret,C_se,C_ratio\n";
  for (const auto& r : rows) {
    out << parameter << ',' << num(r.value) << ',' << router << ',' << num(r.c0.mean) << ',' << num(r.c0.se) << ','
        << num(r.c0.ratio) << ',' << num(r.box.mean) << ',' << num(r.box.se) << ',' << num(r.box.ratio) << '\n';
  }
}

// ---- decoupling experiment ----------------------------------------------

std::vector<Fig4Row> fig4_experiment(const synth::SynthConfig& base, const std::vector<int>& k2_values,
                                     const std::vector<std::uint64_t>& seeds, const ExperimentConfig& training) {
  if (k2_values.empty()) throw std::invalid_argument("k2_values must be non-empty");
  if (seeds.empty()) throw std::invalid_argument("seeds must be non-empty");
  // [seed][k2][variant]
  std::vector<std::vector<std::array<double, 2>>> result(seeds.size(),
                                                         std::vector<std::array<double, 2>>(k2_values.size()));
  parallel_for(seeds.size(), training.jobs, [&](std::size_t si) {
    for (std::size_t ki = 0; ki < k2_values.size(); ++ki) {
      synth::SynthConfig sc = base;
      sc.k2 = k2_values[ki];
      sc.seed = seeds[si];
      sc.inv_quantiles.clear();
      const auto s = synth::generate(sc);
      const auto sp = split_for_seed(s.data, training.split, seeds[si]);
      const std::vector<CostVector> c0{canonical_c0(s.registry)};
      const auto dc = train_router("scout", sp.train, s.registry, training, seeds[si]);
      const auto nodc = train_router("scout_no_dc", sp.train, s.registry, training, seeds[si]);
      result[si][ki][0] = mean_of(eval::regrets(*dc, sp.test, c0));
      result[si][ki][1] = mean_of(eval::regrets(*nodc, sp.test, c0));
    }
  });
  std::vector<Fig4Row> rows;
  for (std::size_t ki = 0; ki < k2_values.size(); ++ki) {
    for (std::size_t v = 0; v < 2; ++v) {
      Fig4Row row;
      row.k2 = k2_values[ki];
      row.variant = v == 0 ? "decoupled" : "no_decoupling";
      for (std::size_t si = 0; si < seeds.size(); ++si) row.per_seed.push_back(result[si][ki][v]);
      row.mean = stats::mean(row.per_seed);
      row.se = stats::standard_error(row.per_seed);
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

void write_fig4_csv(const std::vector<Fig4Row>& rows, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "k2,variant,mean_regret,se,seeds\n";
  for (const auto& r : rows) out << r.k2 << ',' << r.variant << ',' << num(r.mean) << ',' << num(r.se) << ',' << r.per_seed.size() << '\n';
}

}  // namespace scout
