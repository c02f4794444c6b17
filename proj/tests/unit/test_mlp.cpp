#include "cfcal/errors.hpp"
#include "cfcal/regress/mlp.hpp"
#include "cfcal/rng.hpp"

#include "synthetic.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

using namespace cfcal;
using namespace cfcal::regress;
using Eigen::MatrixXd;

namespace {

struct Problem {
  MatrixXd X, Y;
};

Problem random_problem(int n, std::uint64_t seed) {
  Rng rng = make_rng(seed);
  Problem p{MatrixXd(6, n), MatrixXd(3, n)};
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < 6; ++i) p.X(i, j) = uniform(rng, -50, 50);
    for (int i = 0; i < 3; ++i) p.Y(i, j) = uniform(rng, -20, 20);
  }
  return p;
}

MlpModel random_model(const MlpArch& arch, const Problem& p, std::uint64_t seed) {
  MlpModel m = init_mlp(arch, 6, 3, seed);
  set_standardization(m, p.X, p.Y);
  Rng rng = make_rng(seed + 1);
  for (auto& l : m.layers)
    for (Eigen::Index i = 0; i < l.bias.size(); ++i) l.bias[i] = uniform(rng, -0.5, 0.5);
  return m;
}

// Largest relative disagreement between analytic and central-difference
// gradients over every parameter.
double gradient_check(MlpModel m, const Problem& p, double h = 1e-5) {
  const MlpGradient g = mlp_gradient(m, p.X, p.Y);
  double worst = 0.0;
  auto check = [&](double& param, double analytic) {
    const double keep = param;
    param = keep + h;
    const double up = mlp_loss(m, p.X, p.Y);
    param = keep - h;
    const double down = mlp_loss(m, p.X, p.Y);
    param = keep;
    const double numeric = (up - down) / (2.0 * h);
    const double scale = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
    worst = std::max(worst, std::abs(analytic - numeric) / scale);
  };
  for (std::size_t l = 0; l < m.layers.size(); ++l) {
    auto& W = m.layers[l].weight;
    for (Eigen::Index i = 0; i < W.rows(); ++i)
      for (Eigen::Index j = 0; j < W.cols(); ++j) check(W(i, j), g[l].weight(i, j));
    auto& b = m.layers[l].bias;
    for (Eigen::Index i = 0; i < b.size(); ++i) check(b[i], g[l].bias[i]);
  }
  return worst;
}

}  // namespace

TEST(MlpArch, TagAndSweepNaming) {
  EXPECT_EQ((MlpArch{3, 300, Activation::Relu}).tag(), "u300_h3_relu");
  EXPECT_EQ(parse_activation("tanh"), Activation::Tanh);
  EXPECT_THROW(parse_activation("gelu"), InvalidArgument);
}

TEST(MlpModel, ShapesChain) {
  const MlpModel m = init_mlp({2, 30, Activation::Tanh}, 6, 3, 1);
  EXPECT_EQ(m.sizes(), (std::vector<int>{6, 30, 30, 3}));
  EXPECT_EQ(m.parameter_count(), 6u * 30 + 30 + 30 * 30 + 30 + 30 * 3 + 3);
  EXPECT_NO_THROW(m.validate());
}

TEST(MlpModel, GlorotUniformBounds) {
  const MlpModel m = init_mlp({1, 300, Activation::Relu}, 6, 3, 2);
  const double lim0 = std::sqrt(6.0 / (6 + 300));
  EXPECT_LE(m.layers[0].weight.cwiseAbs().maxCoeff(), lim0);
  EXPECT_GT(m.layers[0].weight.cwiseAbs().maxCoeff(), 0.9 * lim0);
  EXPECT_EQ(m.layers[0].bias.norm(), 0.0);
}

TEST(MlpModel, StandardizationReplacesZeroSpread) {
  MlpModel m = init_mlp({1, 30, Activation::Relu}, 6, 3, 2);
  MatrixXd X = MatrixXd::Ones(6, 10);
  X.row(0).setLinSpaced(10, 0.0, 9.0);
  set_standardization(m, X, MatrixXd::Zero(3, 10));
  EXPECT_EQ(m.input_std[1], 1.0);
  EXPECT_GT(m.input_std[0], 0.0);
  EXPECT_EQ(m.output_std[0], 1.0);
}

TEST(MlpGradient, ZeroNetworkOnlyMovesOutputBias) {
  for (Activation a : {Activation::Relu, Activation::Tanh}) {
    MlpModel m = init_mlp({2, 5, a}, 6, 3, 3);
    for (auto& l : m.layers) {
      l.weight.setZero();
      l.bias.setZero();
    }
    set_standardization(m, MatrixXd::Zero(6, 4), MatrixXd::Zero(3, 4));
    m.layers.back().bias << 1.0, -2.0, 0.5;
    const MlpGradient g = mlp_gradient(m, MatrixXd::Zero(6, 4), MatrixXd::Zero(3, 4));
    for (std::size_t l = 0; l < g.size(); ++l) {
      EXPECT_EQ(g[l].weight.cwiseAbs().maxCoeff(), 0.0);
      if (l + 1 < g.size()) EXPECT_EQ(g[l].bias.cwiseAbs().maxCoeff(), 0.0);
    }
    // d/db mean |b|^2 = 2b.
    EXPECT_NEAR(g.back().bias[0], 2.0, 1e-12);
    EXPECT_NEAR(g.back().bias[1], -4.0, 1e-12);
  }
  MlpModel m = init_mlp({1, 5, Activation::Relu}, 6, 3, 3);
  for (auto& l : m.layers) {
    l.weight.setZero();
    l.bias.setZero();
  }
  set_standardization(m, MatrixXd::Zero(6, 4), MatrixXd::Zero(3, 4));
  for (const auto& l : mlp_gradient(m, MatrixXd::Zero(6, 4), MatrixXd::Zero(3, 4))) {
    EXPECT_EQ(l.weight.cwiseAbs().maxCoeff(), 0.0);
    EXPECT_EQ(l.bias.cwiseAbs().maxCoeff(), 0.0);
  }
}

TEST(MlpGradient, MatchesFiniteDifferencesTanh) {
  const Problem p = random_problem(16, 4);
  EXPECT_LT(gradient_check(random_model({2, 30, Activation::Tanh}, p, 5), p), 1e-4);
}

TEST(MlpGradient, MatchesFiniteDifferencesSigmoid) {
  const Problem p = random_problem(16, 6);
  EXPECT_LT(gradient_check(random_model({2, 30, Activation::Sigmoid}, p, 7), p), 1e-4);
}

TEST(MlpGradient, MatchesFiniteDifferencesRelu) {
  const Problem p = random_problem(16, 8);
  EXPECT_LT(gradient_check(random_model({3, 8, Activation::Relu}, p, 9), p), 1e-4);
}

TEST(MlpGradient, LossIsMeanSquaredNorm) {
  const Problem p = random_problem(10, 10);
  const MlpModel m = random_model({1, 4, Activation::Tanh}, p, 11);
  const MatrixXd out = m.forward(p.X);
  EXPECT_NEAR(mlp_loss(m, p.X, p.Y), (out - p.Y).colwise().squaredNorm().mean(), 1e-9);
  double loss = 0.0;
  mlp_gradient(m, p.X, p.Y, &loss);
  EXPECT_NEAR(loss, mlp_loss(m, p.X, p.Y), 1e-12);
}

TEST(TrainMlp, FitsAffineData) {
  const auto ds = cfcal::testing::synthetic_dataset(500, 12, cfcal::testing::affine_target);
  TrainOptions o;
  o.epochs = 300;
  o.learning_rate = 1e-2;
  o.seed = 1;
  const MlpModel m = train_mlp(ds, {1, 30, Activation::Tanh}, o);
  const MatrixXd Y = dataset_targets(ds);
  const double variance = (Y.colwise() - Y.rowwise().mean()).squaredNorm() / static_cast<double>(Y.cols());
  // Explains more than 99.9% of the target variance.
  EXPECT_LT(m.epoch_loss.back(), 1e-3 * variance);
  EXPECT_LT(m.epoch_loss.back(), m.epoch_loss.front());
  EXPECT_EQ(m.epoch_loss.size(), 300u);
}

TEST(TrainMlp, SameSeedSameWeights) {
  const auto ds = cfcal::testing::synthetic_dataset(200, 13, cfcal::testing::affine_target);
  TrainOptions o;
  o.epochs = 20;
  o.seed = 77;
  const MlpModel a = train_mlp(ds, {2, 30, Activation::Tanh}, o);
  const MlpModel b = train_mlp(ds, {2, 30, Activation::Tanh}, o);
  for (std::size_t l = 0; l < a.layers.size(); ++l) {
    ASSERT_EQ(a.layers[l].weight, b.layers[l].weight);
    ASSERT_EQ(a.layers[l].bias, b.layers[l].bias);
  }
  o.seed = 78;
  const MlpModel c = train_mlp(ds, {2, 30, Activation::Tanh}, o);
  EXPECT_NE(a.layers[0].weight, c.layers[0].weight);
}

TEST(TrainMlp, FullBatchIgnoresRowOrder) {
  auto ds = cfcal::testing::synthetic_dataset(120, 14, cfcal::testing::affine_target);
  TrainOptions o;
  o.epochs = 50;
  o.batch_size = 0;
  const MlpModel a = train_mlp(ds, {2, 30, Activation::Sigmoid}, o);
  std::reverse(ds.samples.begin(), ds.samples.end());
  const MlpModel b = train_mlp(ds, {2, 30, Activation::Sigmoid}, o);
  const auto probe = cfcal::testing::synthetic_dataset(20, 15, cfcal::testing::affine_target);
  for (const auto& s : probe.samples)
    EXPECT_NEAR((a.predict(s.camera, s.orientation).v - b.predict(s.camera, s.orientation).v).norm(), 0.0, 1e-8);
}

TEST(TrainMlp, NonFiniteLossAborts) {
  auto ds = cfcal::testing::synthetic_dataset(50, 16, cfcal::testing::affine_target);
  ds.samples[7].target = BasePosition(std::nan(""), 0, 0);
  TrainOptions o;
  o.epochs = 3;
  try {
    train_mlp(ds, {1, 30, Activation::Relu}, o);
    FAIL() << "expected NumericFailure";
  } catch (const NumericFailure& e) {
    EXPECT_NE(std::string(e.what()).find("epoch 0"), std::string::npos);
  }
}

TEST(TrainMlp, RejectsBadArguments) {
  const auto ds = cfcal::testing::synthetic_dataset(10, 17, cfcal::testing::affine_target);
  TrainOptions o;
  o.epochs = 0;
  EXPECT_THROW(train_mlp(ds, {}, o), InvalidArgument);
  EXPECT_THROW(train_mlp(phase1::CoarseDataset{}, {}, TrainOptions{}), EmptyDataset);
}
