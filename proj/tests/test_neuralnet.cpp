#include <gtest/gtest.h>

#include <cmath>

#include "gradcheck.hpp"
#include "scout/neuralnet.hpp"
#include "scout/rng.hpp"

using namespace scout;
using namespace scout::nn;

TEST(Forward, ZeroNetworkIsUniform) {
  const MlpParams p(3, 8, 4, OutputHead::Softmax);
  const auto y = forward(p, Eigen::Vector3d(1, -2, 0.5));
  for (Eigen::Index j = 0; j < 4; ++j) EXPECT_DOUBLE_EQ(y[j], 0.25);
}

TEST(Forward, EvalIsDeterministicAndMatchesTrainWithoutDropout) {
  Rng rng(1);
  const auto p = MlpParams::initialize(4, 16, 3, OutputHead::Softmax, rng);
  Eigen::MatrixXd x(4, 5);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
  const auto a = forward(p, x.col(0));
  const auto b = forward(p, x.col(0));
  EXPECT_EQ(a, b);
  const auto cache = forward_train(p, x, DropoutMasks::ones(16, 5));
  const Eigen::MatrixXd batch = predict(p, x.transpose());
  for (Eigen::Index c = 0; c < 5; ++c) {
    EXPECT_LT((cache.output.col(c) - forward(p, x.col(c))).cwiseAbs().maxCoeff(), 1e-15);
    EXPECT_LT((batch.row(c).transpose() - forward(p, x.col(c))).cwiseAbs().maxCoeff(), 1e-15);
  }
}

TEST(Dropout, MasksAreInvertedAndSeeded) {
  Rng a(3), b(3);
  const auto m1 = DropoutMasks::sample(50, 40, 0.2, a);
  const auto m2 = DropoutMasks::sample(50, 40, 0.2, b);
  EXPECT_EQ(m1.hidden1, m2.hidden1);
  for (Eigen::Index i = 0; i < m1.hidden1.size(); ++i) {
    const double v = m1.hidden1.data()[i];
    EXPECT_TRUE(v == 0.0 || std::abs(v - 1.25) < 1e-15);
  }
  EXPECT_NEAR(m1.hidden1.mean(), 1.0, 0.05);
}

TEST(Loss, KlClosedForms) {
  const Eigen::Vector2d t(1.0, 0.0), p(0.5, 0.5);
  EXPECT_NEAR(kl_loss(t, p), std::log(2.0), 1e-15);
  EXPECT_NEAR(kl_loss(p, p), 0.0, 1e-15);
  Rng rng(2);
  for (int i = 0; i < 1000; ++i) {
    Eigen::Vector3d a, b;
    for (auto& e : a) e = rng.uniform(0.01, 1.0);
    for (auto& e : b) e = rng.uniform(0.01, 1.0);
    EXPECT_GE(kl_loss(a / a.sum(), b / b.sum()), -1e-15);
  }
}

struct GradCase {
  LossKind loss;
  bool dropout;
  double wd;
};

class GradientCheck : public ::testing::TestWithParam<GradCase> {};

TEST_P(GradientCheck, MatchesCentralDifferences) {
  const auto c = GetParam();
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    gradcheck::Case gc;
    gc.loss = c.loss;
    gc.dropout = c.dropout;
    gc.weight_decay = c.wd;
    gc.seed = 100 + seed;
    EXPECT_LT(gradcheck::max_relative_error(gc), 1e-4) << "seed " << seed;
  }
}

INSTANTIATE_TEST_SUITE_P(AllHeads, GradientCheck,
                         ::testing::Values(GradCase{LossKind::KL, false, 0.0}, GradCase{LossKind::KL, true, 0.0},
                                           GradCase{LossKind::KL, true, 1e-2}, GradCase{LossKind::MSE, false, 0.0},
                                           GradCase{LossKind::MSE, true, 1e-2}));

TEST(Backward, ZeroResidualGivesZeroOutputGradient) {
  Rng rng(4);
  const auto p = MlpParams::initialize(3, 8, 4, OutputHead::Softmax, rng);
  Eigen::MatrixXd x(3, 2);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
  const auto cache = forward_train(p, x, DropoutMasks::ones(8, 2));
  const auto g = backward(p, cache, cache.output, LossKind::KL, 0.0);
  EXPECT_LT(g.w3().cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_LT(g.b3().cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Backward, BatchGradientIsMeanOfPerExampleGradients) {
  Rng rng(5);
  const auto p = MlpParams::initialize(3, 8, 2, OutputHead::Identity, rng);
  Eigen::MatrixXd x(3, 2), t(2, 2);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
  for (Eigen::Index i = 0; i < t.size(); ++i) t.data()[i] = rng.normal();
  const auto both = backward(p, forward_train(p, x, DropoutMasks::ones(8, 2)), t, LossKind::MSE, 0.0);
  const auto g0 = backward(p, forward_train(p, x.col(0), DropoutMasks::ones(8, 1)), t.col(0), LossKind::MSE, 0.0);
  const auto g1 = backward(p, forward_train(p, x.col(1), DropoutMasks::ones(8, 1)), t.col(1), LossKind::MSE, 0.0);
  EXPECT_LT((both.flat() - 0.5 * (g0.flat() + g1.flat())).cwiseAbs().maxCoeff(), 1e-12);

  // Two copies of one example give the same mean gradient as the example alone.
  Eigen::MatrixXd xx(3, 2), tt(2, 2);
  xx << x.col(0), x.col(0);
  tt << t.col(0), t.col(0);
  const auto dup = backward(p, forward_train(p, xx, DropoutMasks::ones(8, 2)), tt, LossKind::MSE, 0.0);
  EXPECT_LT((dup.flat() - g0.flat()).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Adam, ZeroGradientLeavesParameters) {
  Eigen::VectorXd theta = Eigen::Vector3d(1, 2, 3);
  const Eigen::VectorXd before = theta;
  AdamState s(3);
  adam_update(theta, Eigen::Vector3d::Zero(), s, 1e-3);
  EXPECT_EQ(theta, before);
}

TEST(Adam, FirstStepMovesByLearningRate) {
  Eigen::VectorXd theta = Eigen::Vector4d(0.5, -0.5, 1.0, 0.0);
  const Eigen::VectorXd before = theta;
  const Eigen::Vector4d g(0.3, -2.0, 1e-3, -7.0);
  AdamState s(4);
  const double lr = 1e-2;
  adam_update(theta, g, s, lr);
  for (Eigen::Index i = 0; i < 4; ++i) {
    const double delta = theta[i] - before[i];
    // m_hat = g, v_hat = g^2 -> delta = -lr g / (|g| + eps)
    const double expected = -lr * g[i] / (std::abs(g[i]) + AdamState::epsilon);
    EXPECT_NEAR(delta, expected, 1e-15);
    EXPECT_LE(std::abs(delta), lr * (1 + 1e-12));
  }
}

TEST(Adam, RejectsNonFiniteGradient) {
  Eigen::VectorXd theta = Eigen::Vector2d(0, 0);
  AdamState s(2);
  EXPECT_THROW(adam_update(theta, Eigen::Vector2d(std::nan(""), 0.0), s, 1e-3), std::runtime_error);
}

namespace {
void separable(Eigen::MatrixXd& x, Eigen::MatrixXd& t) {
  Rng rng(9);
  x.resize(200, 4);
  t.resize(200, 2);
  for (Eigen::Index i = 0; i < 200; ++i) {
    for (Eigen::Index d = 0; d < 4; ++d) x(i, d) = rng.normal();
    const bool pos = x(i, 0) + 0.5 * x(i, 1) > 0;
    t(i, 0) = pos ? 0.9 : 0.1;
    t(i, 1) = 1.0 - t(i, 0);
  }
}

double mean_kl(const MlpParams& p, const Eigen::MatrixXd& x, const Eigen::MatrixXd& t) {
  const Eigen::MatrixXd y = predict(p, x);
  double s = 0;
  for (Eigen::Index i = 0; i < x.rows(); ++i) s += kl_loss(t.row(i).transpose(), y.row(i).transpose());
  return s / static_cast<double>(x.rows());
}
}  // namespace

TEST(Train, ReducesKlOnSeparableData) {
  Eigen::MatrixXd x, t;
  separable(x, t);
  TrainConfig cfg;
  cfg.learning_rate = 1e-3;
  cfg.epochs = 30;
  cfg.hidden = 32;
  cfg.seed = 4;
  TrainConfig none = cfg;
  none.epochs = 0;
  const auto initial = train(x, t, none);
  const auto trained = train(x, t, cfg);
  EXPECT_TRUE(initial.epoch_loss.empty());
  EXPECT_LT(mean_kl(trained.params, x, t), 0.5 * mean_kl(initial.params, x, t));
  EXPECT_EQ(trained.epoch_loss.size(), 30u);
}

TEST(Train, ZeroEpochsReturnsInitialisation) {
  Eigen::MatrixXd x, t;
  separable(x, t);
  TrainConfig cfg;
  cfg.epochs = 0;
  cfg.hidden = 8;
  cfg.seed = 11;
  const auto r = train(x, t, cfg);
  Rng init(Rng::derive(11, 1));
  const auto expected = MlpParams::initialize(4, 8, 2, OutputHead::Softmax, init);
  EXPECT_EQ(r.params.flat(), expected.flat());
}

TEST(Train, SameSeedSameParameters) {
  Eigen::MatrixXd x, t;
  separable(x, t);
  TrainConfig cfg;
  cfg.epochs = 3;
  cfg.hidden = 16;
  cfg.seed = 2;
  const auto a = train(x, t, cfg);
  const auto b = train(x, t, cfg);
  EXPECT_EQ(a.params.flat(), b.params.flat());
  cfg.seed = 3;
  const auto c = train(x, t, cfg);
  EXPECT_NE(a.params.flat(), c.params.flat());
}

TEST(Train, ConfigValidation) {
  TrainConfig cfg;
  cfg.learning_rate = 0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = TrainConfig{};
  cfg.dropout_p = 1.0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
}
