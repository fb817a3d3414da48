// Benchmark front end: synth, train, route, eval, sweep.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "scout/checkpoint.hpp"
#include "scout/costs.hpp"
#include "scout/experiment.hpp"
#include "scout/rng.hpp"
#include "scout/scout_router.hpp"
#include "scout/synth.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Globals {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  int jobs = 1;
};

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw UsageError(path.string() + ": " + e.what());
  }
}

scout::ExperimentConfig load_config(const Globals& g) {
  scout::ExperimentConfig cfg;
  try {
    if (!g.config.empty()) {
      const fs::path p(g.config);
      cfg = scout::ExperimentConfig::from_json(read_json(p), p.parent_path());
    } else {
      cfg = scout::ExperimentConfig::synthetic_benchmark();
    }
    if (g.seed) cfg.seeds = {*g.seed};
    if (!g.out.empty()) cfg.out_dir = g.out;
    cfg.jobs = g.jobs;
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(std::string("invalid config: ") + e.what());
  }
  return cfg;
}

void print_regret(const scout::ExperimentReport& r) {
  std::printf("%-24s %18s %18s %18s\n", "method", "C0", "C", "C_inv_inf");
  for (const auto& row : r.regret) {
    std::printf("%-24s", row.label.c_str());
    for (const auto& c : row.cells) std::printf("   %.4f +- %.4f", c.ratio, c.ratio_se);
    std::printf("\n");
  }
}

void print_aiq(const scout::ExperimentReport& r) {
  std::printf("%-24s %18s %18s %18s\n", "method", "LatencyMemory", "Latency", "Memory");
  for (const auto& row : r.aiq) {
    std::printf("%-24s", row.label.c_str());
    for (std::size_t f = 0; f < 3; ++f) std::printf("   %.4f +- %.4f", row.mean[f], row.se[f]);
    std::printf("\n");
  }
}

std::vector<double> parse_grid(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw UsageError("bad grid value '" + item + "'");
    }
  }
  if (out.empty()) throw UsageError("empty grid");
  return out;
}

// ---- synth ---------------------------------------------------------------

struct SynthArgs {
  std::optional<int> k2, k1, n_objects, views, dim;
};

int cmd_synth(const Globals& g, const SynthArgs& a) {
  scout::synth::SynthConfig sc;
  if (!g.config.empty()) {
    const json j = read_json(g.config);
    try {
      sc = scout::synth::SynthConfig::from_json(j.contains("synth") ? j.at("synth") : j);
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
  }
  if (g.seed) sc.seed = *g.seed;
  if (a.k2) {
    sc.k2 = *a.k2;
    sc.inv_quantiles.clear();
  }
  if (a.k1) sc.k1 = *a.k1;
  if (a.n_objects) sc.n_objects = *a.n_objects;
  if (a.views) sc.views_per_object = *a.views;
  if (a.dim) sc.dim = *a.dim;
  try {
    sc.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  const fs::path out = g.out.empty() ? fs::path("synth") : fs::path(g.out);
  fs::create_directories(out);
  const auto s = scout::synth::generate(sc);
  scout::synth::write_synth(s, out / "dataset.jsonl", out / "registry.json");
  std::ofstream(out / "synth_config.json") << sc.to_json().dump(2) << '\n';
  std::printf("records %zu  objects %d  dim %d  dependent %zu  invariant %zu\n", s.data.size(), sc.n_objects, sc.dim,
              s.registry.num_dependent(), s.registry.num_invariant());
  std::printf("wrote %s and %s\n", (out / "dataset.jsonl").c_str(), (out / "registry.json").c_str());
  return 0;
}

// ---- train ---------------------------------------------------------------

struct TrainArgs {
  std::string router;
  std::optional<std::size_t> k;
  bool full = false;
};

int cmd_train(const Globals& g, const TrainArgs& a) {
  if (!scout::is_trainable_router(a.router)) throw UsageError("unknown router '" + a.router + "'");
  auto cfg = load_config(g);
  if (a.k) cfg.baselines.knn_k = *a.k;
  const auto data = scout::load_experiment_data(cfg);
  const std::uint64_t seed = cfg.seeds.front();

  scout::Dataset train = data.data;
  std::vector<std::string> test_ids;
  if (!a.full) {
    scout::SplitSpec spec = cfg.split;
    spec.seed = scout::Rng::derive(cfg.split.seed ^ seed, 31);
    auto parts = scout::split(data.data, spec);
    train = std::move(parts.train);
    for (const auto& r : parts.test.records) test_ids.push_back(r.id);
  }
  const auto router = scout::train_router(a.router, train, data.registry, cfg, seed);

  json log = {{"router", a.router}, {"seed", seed}, {"train_records", train.size()}, {"test_ids", test_ids}};
  if (const auto* s = dynamic_cast<const scout::ScoutRouter*>(router.get())) {
    log["epoch_loss"] = s->log.epoch_loss;
    log["proxy_clip_count"] = s->log.proxy_clip_count;
    log["unseen_tags"] = s->log.unseen_tags;
    const auto& w = s->weights();
    log["proxy_weights"] = {{"w", scout::vector_to_json(w.w)},
                            {"s_sq", scout::vector_to_json(w.s_sq)},
                            {"r_sq", scout::vector_to_json(w.r_sq)},
                            {"sigma_sq", scout::vector_to_json(w.sigma_sq)},
                            {"expectation_term", scout::vector_to_json(w.expectation_term)},
                            {"tau_bar_sq", scout::vector_to_json(w.tau_bar_sq)}};
  }
  const auto box = scout::build_interesting_box(train, data.registry, cfg.exclude_zero_iqr);
  json extra = {{"cost_box", {{"lo", scout::cost_to_json(box.lo)}, {"hi", scout::cost_to_json(box.hi)}}},
                {"training", log}};

  const fs::path out = g.out.empty() ? fs::path("checkpoints") : fs::path(g.out);
  fs::create_directories(out);
  scout::save_checkpoint(*router, out / (a.router + ".ckpt.json"), extra);
  std::ofstream(out / (a.router + ".log.json")) << log.dump(2) << '\n';
  std::printf("trained %s on %zu records -> %s\n", a.router.c_str(), train.size(),
              (out / (a.router + ".ckpt.json")).c_str());
  return 0;
}

// ---- route ---------------------------------------------------------------

struct RouteArgs {
  std::string checkpoint;
  std::string features;
  std::string costs;
};

int cmd_route(const Globals& g, const RouteArgs& a) {
  const auto ckpt = scout::load_checkpoint(a.checkpoint);
  const auto& router = *ckpt.router;
  const auto& reg = router.registry();

  scout::CostConfig cc;
  if (!a.costs.empty()) {
    try {
      cc = scout::CostConfig::from_json(read_json(a.costs));
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
  }
  std::optional<scout::CostBox> box;
  if (ckpt.extra.contains("cost_box")) {
    scout::CostBox b;
    b.lo = scout::cost_from_json(ckpt.extra["cost_box"]["lo"]);
    b.hi = scout::cost_from_json(ckpt.extra["cost_box"]["hi"]);
    box = b;
  }
  if (cc.mode == scout::CostConfig::Mode::Box && !box) throw std::runtime_error("checkpoint carries no cost box");
  const auto costs = cc.expand(reg, box ? &*box : nullptr);
  for (const auto& c : costs)
    if (!c.any_feasible()) throw std::runtime_error("cost vector makes every model infeasible");

  const auto rows = scout::load_feature_rows(a.features);
  std::ofstream file;
  if (!g.out.empty()) {
    file.open(g.out);
    if (!file) throw std::runtime_error("cannot write " + g.out);
  }
  std::ostream& out = g.out.empty() ? std::cout : file;
  for (const auto& row : rows) {
    if (router.standardizer() && row.features.size() != router.standardizer()->dim())
      throw std::runtime_error("record '" + row.id + "' has feature dimension " + std::to_string(row.features.size()) +
                               ", checkpoint expects " + std::to_string(router.standardizer()->dim()));
    const Eigen::VectorXd scores = router.predict_scores(row.features);
    for (std::size_t ci = 0; ci < costs.size(); ++ci) {
      const auto d = router.decide(scores, costs[ci]);
      json u = json::array();
      for (Eigen::Index j = 0; j < d.utilities.size(); ++j)
        u.push_back(std::isfinite(d.utilities[j]) ? json(d.utilities[j]) : json(nullptr));
      json line = {{"id", row.id}, {"model", reg[d.choice].name}, {"utilities", u}};
      if (costs.size() > 1) line["cost_index"] = ci;
      out << line.dump() << '\n';
    }
  }
  return 0;
}

// ---- eval / sweep ----------------------------------------------------------

int cmd_eval(const Globals& g) {
  const auto cfg = load_config(g);
  const auto data = scout::load_experiment_data(cfg);
  const auto report = scout::run_experiment(cfg, data);
  scout::write_report(report, cfg.out_dir);
  print_regret(report);
  std::printf("\n");
  print_aiq(report);
  std::printf("\nreports written to %s\n", cfg.out_dir.c_str());
  return 0;
}

struct SweepArgs {
  std::string parameter;
  std::string grid;
  std::string router;
};

int cmd_sweep(const Globals& g, const SweepArgs& a) {
  const auto cfg = load_config(g);
  const auto grid = parse_grid(a.grid);
  fs::create_directories(cfg.out_dir);
  if (a.parameter == "k2") {
    if (!cfg.synth) throw UsageError("the k2 sweep needs a synth section in the config");
    std::vector<int> k2;
    for (double v : grid) {
      if (v < 0 || v != static_cast<int>(v)) throw UsageError("k2 values must be non-negative integers");
      k2.push_back(static_cast<int>(v));
    }
    const auto rows = scout::fig4_experiment(*cfg.synth, k2, cfg.seeds, cfg);
    scout::write_fig4_csv(rows, cfg.out_dir / "sweep_k2.csv");
    for (const auto& r : rows) std::printf("k2=%d %-14s %.6f +- %.6f\n", r.k2, r.variant.c_str(), r.mean, r.se);
    return 0;
  }
  const auto& params = scout::sweep_parameters();
  if (std::find(params.begin(), params.end(), a.parameter) == params.end())
    throw UsageError("unknown sweep parameter '" + a.parameter + "'");
  const std::string router = a.router.empty() ? scout::default_sweep_router(a.parameter) : a.router;
  if (!scout::is_trainable_router(router)) throw UsageError("unknown router '" + router + "'");
  std::vector<scout::SweepRow> rows;
  try {
    rows = scout::run_sweep(cfg, scout::load_experiment_data(cfg), a.parameter, grid, router);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  scout::write_sweep_csv(rows, a.parameter, router, cfg.out_dir / ("sweep_" + a.parameter + ".csv"));
  for (const auto& r : rows)
    std::printf("%s=%g  C0 %.4f +- %.4f  C %.4f +- %.4f\n", a.parameter.c_str(), r.value, r.c0.ratio, r.c0.ratio_se,
                r.box.ratio, r.box.ratio_se);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cost-aware model routing benchmark"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  std::uint64_t seed_value = 0;
  app.add_option("--config", g.config, "Experiment config (JSON)");
  auto* seed_opt = app.add_option("--seed", seed_value, "Override the seed list with a single seed");
  app.add_option("--out", g.out, "Output directory (file for route)");
  app.add_option("--jobs", g.jobs, "Worker threads")->check(CLI::PositiveNumber);

  SynthArgs sa;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic dataset and registry");
  synth->add_option("--k2", sa.k2, "Number of view-invariant models");
  synth->add_option("--k1", sa.k1, "Number of viewpoint-dependent models");
  synth->add_option("--objects", sa.n_objects, "Number of objects");
  synth->add_option("--views", sa.views, "Views per object");
  synth->add_option("--dim", sa.dim, "Feature dimension");

  TrainArgs ta;
  auto* train = app.add_subcommand("train", "Train one router and write a checkpoint");
  train->add_option("--router", ta.router, "scout, scout_no_dc, mlp, mf, knn, lr, input_agnostic, oracle")->required();
  train->add_option("--k", ta.k, "Neighbours for knn");
  train->add_flag("--full", ta.full, "Train on every record instead of the train split");

  RouteArgs ra;
  auto* route = app.add_subcommand("route", "Route feature records with a checkpoint");
  route->add_option("--checkpoint", ra.checkpoint, "Checkpoint file")->required();
  route->add_option("--features", ra.features, "Feature records (JSONL)")->required();
  route->add_option("--costs", ra.costs, "Cost config (JSON); default c0");

  auto* evalc = app.add_subcommand("eval", "Train every router and write regret and AIQ reports");

  SweepArgs wa;
  auto* sweep = app.add_subcommand("sweep", "One-at-a-time hyperparameter sweep");
  sweep->add_option("--parameter", wa.parameter, "beta, temperature, lr, epochs, alpha, knn_k or k2")->required();
  sweep->add_option("--grid", wa.grid, "Comma-separated values")->required();
  sweep->add_option("--router", wa.router, "Router to sweep (default depends on the parameter)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }
  if (seed_opt->count() > 0) g.seed = seed_value;

  try {
    if (*synth) return cmd_synth(g, sa);
    if (*train) return cmd_train(g, ta);
    if (*route) return cmd_route(g, ra);
    if (*evalc) return cmd_eval(g);
    if (*sweep) return cmd_sweep(g, wa);
  } catch (const UsageError& e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 2;
}
