#include <cmath>
#include <set>

#include <gtest/gtest.h>

#include "helpers.hpp"
#include "scout/rng.hpp"
#include "scout/scout_router.hpp"
#include "scout/synth.hpp"

using namespace scout;

namespace {

Eigen::MatrixXd random_scores(Eigen::Index n, Eigen::Index k, std::uint64_t seed, double scale = 2.0) {
  Rng rng(seed);
  Eigen::MatrixXd s(n, k);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < k; ++j) s(i, j) = scale * rng.normal();
  return s;
}

nn::TrainConfig quick_train(int epochs = 8) {
  nn::TrainConfig cfg;
  cfg.learning_rate = 1e-3;
  cfg.epochs = epochs;
  cfg.batch_size = 32;
  cfg.hidden = 16;
  cfg.seed = 5;
  return cfg;
}

}  // namespace

TEST(Scout, ExactProbabilitiesGiveExactProxies) {
  for (double t : {0.5, 1.0, 3.0}) {
    const auto s = random_scores(200, 4, 3);
    const auto p = softmax_rows(s, t);
    const auto proxies = per_model_proxies(p, s, t);
    const auto z = true_partitions(s, t);
    for (Eigen::Index i = 0; i < s.rows(); ++i) {
      double direct = 0.0;
      for (Eigen::Index j = 0; j < 4; ++j) direct += std::exp(s(i, j) / t);
      EXPECT_NEAR(z[i], direct, 1e-12 * direct);
      for (Eigen::Index j = 0; j < 4; ++j) EXPECT_NEAR(proxies(i, j), direct, 1e-9 * direct);
    }
    for (const auto& w : {ProxyWeights::equal(4), ProxyWeights::one_hot(4, 2)}) {
      const auto combined = build_proxy_targets(p, s, t, w);
      for (Eigen::Index i = 0; i < s.rows(); ++i) EXPECT_NEAR(combined[i], z[i], 1e-9 * z[i]);
    }
  }
}

TEST(Scout, RecoveredScoresInvertProbabilityAndPartition) {
  const auto s = random_scores(50, 3, 9);
  const double t = 1.7;
  const auto p = softmax_rows(s, t);
  const auto z = true_partitions(s, t);
  for (Eigen::Index i = 0; i < s.rows(); ++i) {
    const auto rec = recover_dependent_scores(p.row(i).transpose(), z[i], t);
    for (Eigen::Index j = 0; j < 3; ++j) EXPECT_NEAR(rec[j], s(i, j), 1e-9);
  }
}

TEST(Scout, ProxyClipsTinyProbabilities) {
  Eigen::MatrixXd p(1, 2), s(1, 2);
  p << 0.0, 1.0;
  s << 0.0, 0.0;
  std::size_t clips = 0;
  const auto proxies = per_model_proxies(p, s, 1.0, &clips);
  EXPECT_EQ(clips, 1u);
  EXPECT_NEAR(proxies(0, 0), 1.0 / kClipFloor, 1.0);
}

TEST(Scout, SigmaRecoveredFromPerturbedProbabilities) {
  synth::SynthConfig cfg;
  cfg.n_objects = 2000;
  cfg.views_per_object = 5;
  cfg.seed = 21;
  const auto sd = synth::generate(cfg);
  const auto s = sd.data.score_matrix();
  const auto p_star = softmax_rows(s, 1.0);
  const Eigen::Vector4d sigma(0.01, 0.03, 0.05, 0.02);
  const auto p_hat = synth::perturb_probabilities(p_star, sigma, 99);
  const auto w = estimate_weights(p_hat, p_star, s, 1.0);
  for (int j = 0; j < 4; ++j) {
    EXPECT_NEAR(w.sigma_sq[j], sigma[j] * sigma[j], 0.2 * sigma[j] * sigma[j]) << "model " << j;
    EXPECT_NEAR(w.sigma_sq[j], w.s_sq[j] * (1.0 - w.r_sq[j]), 1e-15);
  }
}

TEST(Scout, WeightsMatchDirectComputation) {
  const auto s = random_scores(300, 3, 17, 1.0);
  const double t = 0.8;
  const auto p = softmax_rows(s, t);
  const auto p_hat = synth::perturb_probabilities(p, Eigen::Vector3d(0.02, 0.05, 0.01), 4);
  const auto w = estimate_weights(p_hat, p, s, t);
  const auto n = s.rows();
  Eigen::Vector3d inv;
  for (int j = 0; j < 3; ++j) {
    double mh = 0, mt = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
      mh += p_hat(i, j);
      mt += p(i, j);
    }
    mh /= n;
    mt /= n;
    double shh = 0, stt = 0, sht = 0, e = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
      shh += (p_hat(i, j) - mh) * (p_hat(i, j) - mh);
      stt += (p(i, j) - mt) * (p(i, j) - mt);
      sht += (p_hat(i, j) - mh) * (p(i, j) - mt);
      double z = 0;
      for (int m = 0; m < 3; ++m) z += std::exp(s(i, m) / t);
      e += std::pow(z, 4) / std::exp(2 * s(i, j) / t);
    }
    const double var = shh / n;
    const double r2 = sht * sht / (shh * stt);
    const double tau = var * (1 - r2) * e / n;
    EXPECT_NEAR(w.tau_bar_sq[j], tau, 1e-9 * tau);
    inv[j] = 1.0 / tau;
  }
  inv /= inv.sum();
  EXPECT_NEAR(w.w.sum(), 1.0, 1e-12);
  for (int j = 0; j < 3; ++j) EXPECT_NEAR(w.w[j], inv[j], 1e-9);
}

TEST(Scout, NoiseFreeModelTakesAllWeight) {
  const auto s = random_scores(100, 3, 2, 1.0);
  const auto p = softmax_rows(s, 1.0);
  Eigen::MatrixXd p_hat = synth::perturb_probabilities(p, Eigen::Vector3d(0.02, 0.0, 0.03), 8);
  const auto w = estimate_weights(p_hat, p, s, 1.0);
  EXPECT_NEAR(w.w[1], 1.0, 1e-9);
  EXPECT_THROW(estimate_weights(p_hat.topRows(2), p.topRows(2), s.topRows(2), 1.0), std::invalid_argument);
}

TEST(Scout, FoldAssignmentBalancedAndDeterministic) {
  const auto a = fold_assignment(103, 5, 12);
  EXPECT_EQ(a, fold_assignment(103, 5, 12));
  EXPECT_NE(a, fold_assignment(103, 5, 13));
  std::vector<int> counts(5, 0);
  for (int f : a) {
    ASSERT_GE(f, 0);
    ASSERT_LT(f, 5);
    ++counts[static_cast<std::size_t>(f)];
  }
  for (int c : counts) EXPECT_TRUE(c == 20 || c == 21);
  EXPECT_THROW(fold_assignment(3, 5, 0), std::invalid_argument);
  EXPECT_THROW(fold_assignment(10, 1, 0), std::invalid_argument);
}

TEST(Scout, TrainedRouterIsConsistentAndSerialises) {
  synth::SynthConfig cfg;
  cfg.n_objects = 40;
  cfg.views_per_object = 4;
  cfg.dim = 6;
  cfg.seed = 3;
  const auto sd = synth::generate(cfg);
  ScoutOptions opt;
  opt.train = quick_train();
  const auto router = train_scout(sd.data, sd.registry, opt);
  EXPECT_EQ(router->type(), "scout");
  EXPECT_EQ(router->log.epoch_loss.size(), 8u);
  EXPECT_NEAR(router->weights().w.sum(), 1.0, 1e-12);

  const auto& rec = sd.data.records.front();
  const auto scores = router->predict_scores(rec.features);
  ASSERT_EQ(scores.size(), static_cast<Eigen::Index>(sd.registry.size()));
  const auto p = router->predict_probabilities(rec.features);
  EXPECT_NEAR(p.sum(), 1.0, 1e-12);
  const double z = router->predict_partition(rec.features);
  for (Eigen::Index j = 0; j < p.size(); ++j) {
    EXPECT_NEAR(scores[j], std::log(std::max(p[j], kClipFloor) * std::max(z, kClipFloor)), 1e-9);
  }
  const auto fixed = sd.registry.invariant_scores();
  for (Eigen::Index i = 0; i < fixed.size(); ++i) EXPECT_EQ(scores[p.size() + i], fixed[i]);

  const auto m = router->predict_matrix(sd.data);
  for (std::size_t i = 0; i < sd.data.size(); i += 17) {
    const auto row = router->predict_scores(sd.data.records[i].features);
    for (Eigen::Index j = 0; j < row.size(); ++j) EXPECT_NEAR(m(static_cast<Eigen::Index>(i), j), row[j], 1e-9);
  }

  const auto copy = ScoutRouter::from_json(nlohmann::json::parse(router->to_json().dump()));
  for (std::size_t i = 0; i < sd.data.size(); i += 11) {
    const auto& x = sd.data.records[i].features;
    EXPECT_EQ(copy->predict_scores(x), router->predict_scores(x));
  }
}

TEST(Scout, TrainingIsDeterministic) {
  const auto reg = testing_helpers::make_registry(3, {0.0});
  const auto data = testing_helpers::random_dataset(25, 3, 4, 3, 8);
  ScoutOptions opt;
  opt.train = quick_train(3);
  const auto a = train_scout(data, reg, opt);
  const auto b = train_scout(data, reg, opt);
  EXPECT_EQ(a->to_json().dump(), b->to_json().dump());
}

TEST(Scout, NoDecouplingRouter) {
  const auto reg = testing_helpers::make_registry(3, {0.2, -0.4});
  const auto data = testing_helpers::random_dataset(25, 3, 4, 3, 8);
  SmoothingConfig sm;
  sm.temperature = 2.0;
  const auto r = train_no_decoupling(data, reg, sm, quick_train(3));
  EXPECT_EQ(r->type(), "scout_no_dc");
  EXPECT_EQ(r->prob_model().output_dim(), 5);
  const auto s = r->predict_scores(data.records[0].features);
  ASSERT_EQ(s.size(), 5);
  double total = 0.0;
  for (Eigen::Index j = 0; j < 5; ++j) total += std::exp(s[j] / 2.0);
  EXPECT_NEAR(total, 1.0, 1e-9);
  const auto copy = NoDecouplingRouter::from_json(nlohmann::json::parse(r->to_json().dump()));
  EXPECT_EQ(copy->predict_scores(data.records[3].features), r->predict_scores(data.records[3].features));
}
