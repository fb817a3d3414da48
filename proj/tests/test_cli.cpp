#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include <gtest/gtest.h>
#include <json.hpp>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::string kCli = SCOUT_CLI_PATH;

int run(const std::string& args) {
  const std::string cmd = kCli + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("scout_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  // Small synthetic dataset plus a config with a short training budget.
  fs::path prepare() {
    EXPECT_EQ(run("synth --objects 20 --views 3 --dim 5 --k2 2 --seed 4 --out " + (dir_ / "data").string()), 0);
    const json cfg = {{"dataset", (dir_ / "data" / "dataset.jsonl").string()},
                      {"registry", (dir_ / "data" / "registry.json").string()},
                      {"train", {{"learning_rate", 1e-3}, {"epochs", 2}, {"hidden", 8}, {"batch_size", 16}}},
                      {"baselines", {{"knn_k", 4}, {"mf_rank", 2}}},
                      {"costs", {{"box_samples", 4}, {"lambda_points", 4}}},
                      {"seeds", {0}}};
    const auto path = dir_ / "config.json";
    std::ofstream(path) << cfg.dump(2);
    return path;
  }

  fs::path dir_;
};

}  // namespace

TEST_F(CliTest, UsageErrorsExitWithTwo) {
  EXPECT_EQ(run("--help"), 0);
  EXPECT_EQ(run(""), 2);
  EXPECT_EQ(run("frobnicate"), 2);
  EXPECT_EQ(run("train --router telepathy --out " + dir_.string()), 2);
  EXPECT_EQ(run("sweep --parameter colour --grid 1,2 --out " + dir_.string()), 2);
  EXPECT_EQ(run("--config " + (dir_ / "missing.json").string() + " eval"), 1);
}

TEST_F(CliTest, SynthWritesReadableFiles) {
  ASSERT_EQ(run("synth --objects 5 --views 2 --k2 3 --seed 1 --out " + dir_.string()), 0);
  const auto reg = json::parse(slurp(dir_ / "registry.json"));
  ASSERT_TRUE(reg.is_object() || reg.is_array());
  std::ifstream in(dir_ / "dataset.jsonl");
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    const auto j = json::parse(line);
    EXPECT_TRUE(j.contains("features"));
    ++n;
  }
  EXPECT_EQ(n, 10);
  const auto sc = json::parse(slurp(dir_ / "synth_config.json"));
  EXPECT_EQ(sc.at("k2"), 3);
}

TEST_F(CliTest, TrainAndRouteUnderC0NeverPicksInvariantModels) {
  const auto cfg = prepare();
  ASSERT_EQ(run("--config " + cfg.string() + " --out " + (dir_ / "ckpt").string() + " train --router scout"), 0);
  const auto ckpt = dir_ / "ckpt" / "scout.ckpt.json";
  ASSERT_TRUE(fs::exists(ckpt));
  ASSERT_TRUE(fs::exists(dir_ / "ckpt" / "scout.log.json"));

  const auto routed = dir_ / "routed.jsonl";
  ASSERT_EQ(run("--out " + routed.string() + " route --checkpoint " + ckpt.string() + " --features " +
                (dir_ / "data" / "dataset.jsonl").string()),
            0);
  std::ifstream in(routed);
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    const auto j = json::parse(line);
    const auto model = j.at("model").get<std::string>();
    EXPECT_EQ(model.rfind("scanner", 0), std::string::npos) << model;
    EXPECT_TRUE(j.at("utilities").back().is_null());
    ++n;
  }
  EXPECT_EQ(n, 60);

  // Same invocation, same bytes.
  const auto again = dir_ / "routed2.jsonl";
  ASSERT_EQ(run("--out " + again.string() + " route --checkpoint " + ckpt.string() + " --features " +
                (dir_ / "data" / "dataset.jsonl").string()),
            0);
  EXPECT_EQ(slurp(routed), slurp(again));

  // A ray over latency emits one line per (record, lambda).
  const auto costs = dir_ / "ray.json";
  std::ofstream(costs) << R"({"mode": "ray", "family": "latency", "lambda": {"min": 0, "max": 1, "points": 3}})";
  const auto ray_out = dir_ / "ray_out.jsonl";
  ASSERT_EQ(run("--out " + ray_out.string() + " route --checkpoint " + ckpt.string() + " --features " +
                (dir_ / "data" / "dataset.jsonl").string() + " --costs " + costs.string()),
            0);
  std::ifstream rin(ray_out);
  n = 0;
  while (std::getline(rin, line)) {
    EXPECT_TRUE(json::parse(line).contains("cost_index"));
    ++n;
  }
  EXPECT_EQ(n, 180);

  // All-infinite cost vector.
  std::ofstream(costs) << R"({"mode": "vector", "base": ["inf", "inf", "inf", "inf", "inf", "inf"]})";
  EXPECT_EQ(run("route --checkpoint " + ckpt.string() + " --features " + (dir_ / "data" / "dataset.jsonl").string() +
                " --costs " + costs.string()),
            1);

  // Wrong feature dimension.
  const auto bad = dir_ / "bad.jsonl";
  std::ofstream(bad) << R"({"id": "x", "features": [1, 2]})" << '\n';
  EXPECT_EQ(run("route --checkpoint " + ckpt.string() + " --features " + bad.string()), 1);
}

TEST_F(CliTest, EmptyFeaturesGiveEmptyOutput) {
  const auto cfg = prepare();
  ASSERT_EQ(run("--config " + cfg.string() + " --out " + (dir_ / "ckpt").string() + " train --router lr"), 0);
  const auto empty = dir_ / "empty.jsonl";
  std::ofstream(empty).close();
  const auto out = dir_ / "out.jsonl";
  ASSERT_EQ(run("--out " + out.string() + " route --checkpoint " + (dir_ / "ckpt" / "lr.ckpt.json").string() +
                " --features " + empty.string()),
            0);
  EXPECT_TRUE(slurp(out).empty());
}

TEST_F(CliTest, EvalWritesTables) {
  const auto cfg = prepare();
  ASSERT_EQ(run("--config " + cfg.string() + " --out " + (dir_ / "report").string() + " eval"), 0);
  for (const char* f : {"regret_table.csv", "regret_long.csv", "aiq_table.csv", "curves.csv", "report.json"})
    EXPECT_TRUE(fs::exists(dir_ / "report" / f)) << f;
  ASSERT_EQ(run("--config " + cfg.string() + " --out " + (dir_ / "sweep").string() +
                " sweep --parameter alpha --grid 1,10"),
            0);
  EXPECT_FALSE(fs::is_empty(dir_ / "sweep"));
}
