#include "cfcal/errors.hpp"
#include "cfcal/phase2.hpp"
#include "cfcal/rng.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

using namespace cfcal;
using namespace cfcal::phase2;

namespace {

FineSetup quiet_setup(const worldsim::BiasField& f) {
  FineSetup s;
  s.arm.field = f;
  s.arm.measurement_noise = 0.0;
  s.rig = stereocam::StereoRig::for_workspace(s.arm.workspace);
  s.hand = {0.0, 0.0};
  s.target_pixel_sigma = 0.0;
  return s;
}

Predictor oracle(const FineSetup& s) {
  return [s](const CameraPosition& c, const Orientation& phi) {
    return worldsim::true_inverse(s.rig.to_world(c), phi, s.arm);
  };
}

regress::MlpModel small_mlp() {
  regress::MlpModel m = regress::init_mlp({1, 8, regress::Activation::Tanh}, 6, 3, 5);
  Eigen::MatrixXd X = Eigen::MatrixXd::Random(6, 20) * 40.0;
  Eigen::MatrixXd Y = Eigen::MatrixXd::Random(3, 20) * 40.0;
  regress::set_standardization(m, X, Y);
  return m;
}

FineDataset constant_dataset(int yaw, const Vec3& eps, std::uint64_t seed) {
  FineDataset ds;
  ds.yaw = yaw;
  Rng rng = make_rng(seed);
  for (int i = 0; i < 35; ++i)
    ds.samples.push_back({BasePosition(uniform(rng, 0, 75), uniform(rng, 0, 75), uniform(rng, -2, 2)), eps, i});
  return ds;
}

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("cfcal_test_" + name)).string();
}

}  // namespace

TEST(Grid, DefaultLayout) {
  const worldsim::Workspace ws;
  const CalibrationGrid g = make_grid(ws);
  ASSERT_EQ(g.size(), 35u);
  EXPECT_EQ(g.centers[0].v, Vec3(7.5, 7.5, 0.0));
  for (const auto& c : g.centers) EXPECT_TRUE(ws.contains(BasePosition(c.v)));
  double closest = 1e9;
  for (std::size_t i = 0; i < g.size(); ++i)
    for (std::size_t j = 0; j < i; ++j) closest = std::min(closest, (g.centers[i].v - g.centers[j].v).norm());
  EXPECT_GE(closest, 8.0);
  EXPECT_NO_THROW(validate_grid(g, ws));
}

TEST(Grid, RejectsCrowdedLayout) {
  GridOptions o;
  o.rows = 12;
  o.cols = 12;
  EXPECT_THROW(validate_grid(make_grid({}, o), {}), InvalidArgument);
}

TEST(CorrectionOracle, ExactWithoutNoise) {
  const worldsim::FrameOffset id;
  EXPECT_EQ(correction_oracle(WorldPoint(3, 4, 0), WorldPoint(3, 4, 0), {0, 0}, id, 1), Vec3::Zero());
  EXPECT_EQ(correction_oracle(WorldPoint(1, 4, 0), WorldPoint(3, 4, 0), {0, 0}, id, 1), Vec3(2, 0, 0));
}

TEST(CorrectionOracle, ExpressedInBaseFrame) {
  worldsim::FrameOffset off;
  off.rotation = Eigen::AngleAxisd(M_PI / 2, Vec3::UnitZ()).toRotationMatrix();
  const Vec3 e = correction_oracle(WorldPoint(0, 0, 0), WorldPoint(0, 2, 0), {0, 0}, off, 1);
  EXPECT_NEAR(e.x(), 2.0, 1e-12);
  EXPECT_NEAR(e.y(), 0.0, 1e-12);
}

TEST(CorrectionOracle, HandNoiseSpread) {
  const int n = 10000;
  Eigen::Vector3d sum = Vec3::Zero(), sum2 = Vec3::Zero();
  for (int i = 0; i < n; ++i) {
    const Vec3 e = correction_oracle(WorldPoint(0, 0, 0), WorldPoint(0, 0, 0), {}, {}, derive_seed(1, Stream::Hand, i));
    sum += e;
    sum2 += e.cwiseProduct(e);
  }
  for (int k = 0; k < 3; ++k) {
    const double sd = std::sqrt(sum2[k] / n - (sum[k] / n) * (sum[k] / n));
    EXPECT_GE(sd, 0.19);
    EXPECT_LE(sd, 0.21);
  }
}

TEST(CollectFine, PerfectModelGivesZeroResiduals) {
  const FineSetup s = quiet_setup(worldsim::make_bias_field(1, 4.55));
  const auto sets = collect_fine(oracle(s), make_grid({}), s, 3);
  std::size_t total = 0;
  for (std::size_t g = 0; g < 5; ++g) {
    EXPECT_EQ(sets[g].yaw, kYawTags[g]);
    EXPECT_EQ(sets[g].failed, 0u);
    total += sets[g].size();
    for (const auto& r : sets[g].samples) EXPECT_LT(r.epsilon.norm(), 1e-9);
  }
  EXPECT_EQ(total, 175u);
}

TEST(CollectFine, DeterministicAndThreadIndependent) {
  FineSetup s = quiet_setup(worldsim::make_bias_field(2, 4.55));
  s.hand = {};
  s.arm.measurement_noise = 0.1;
  s.target_pixel_sigma = 0.5;
  const Predictor p = [](const CameraPosition& c, const Orientation&) {
    return BasePosition(c.x() + 37.5, 37.5 - c.y(), 190.5 - c.z());
  };
  const auto a = collect_fine(p, make_grid({}), s, 4, 1);
  const auto b = collect_fine(p, make_grid({}), s, 4, 3);
  for (std::size_t g = 0; g < 5; ++g) {
    ASSERT_EQ(a[g].size(), b[g].size());
    for (std::size_t i = 0; i < a[g].size(); ++i) {
      ASSERT_EQ(a[g].samples[i].epsilon, b[g].samples[i].epsilon);
      ASSERT_EQ(a[g].samples[i].circle, b[g].samples[i].circle);
    }
  }
}

TEST(CollectFine, CommandsOutsideTheEnvelopeAreCounted) {
  const FineSetup s = quiet_setup(worldsim::BiasField::zero());
  const Predictor far = [](const CameraPosition& c, const Orientation&) {
    return BasePosition(c.x() + 37.5 + (c.x() > 0 ? 100.0 : 0.0), 37.5 - c.y(), 190.5 - c.z());
  };
  const auto sets = collect_fine(far, make_grid({}), s, 5);
  for (const auto& ds : sets) {
    EXPECT_GT(ds.failed, 0u);
    EXPECT_EQ(ds.failed + ds.size(), 35u);
  }
}

TEST(ResidualForests, ConstantResidualEverywhere) {
  std::vector<FineDataset> sets;
  for (int tag : kYawTags) sets.push_back(constant_dataset(tag, Vec3(1.0, -0.5, 0.25), 10 + tag));
  const auto forests = train_residual_forests(sets, {});
  ASSERT_EQ(forests.size(), 5u);
  for (const auto& [tag, f] : forests) {
    const Eigen::VectorXd p = f.predict(Eigen::Vector3d(20, 60, 0));
    EXPECT_NEAR(p[0], 1.0, 1e-12);
    EXPECT_NEAR(p[1], -0.5, 1e-12);
    EXPECT_NEAR(p[2], 0.25, 1e-12);
  }
}

TEST(ResidualForests, MissingOrEmptyYawRejected) {
  std::vector<FineDataset> sets;
  for (int tag : {-90, -45, 0, 45}) sets.push_back(constant_dataset(tag, Vec3::Zero(), 1));
  EXPECT_THROW(train_residual_forests(sets, {}), InvalidArgument);
  sets.push_back(FineDataset{90, {}, 35});
  EXPECT_THROW(train_residual_forests(sets, {}), EmptyDataset);
}

TEST(ResidualForests, SmoothFieldLeaveOneCircleOut) {
  const CalibrationGrid grid = make_grid({});
  auto field = [](const Vec3& p) {
    return Vec3(std::sin(p.x() / 20.0) + 0.02 * p.y(), std::cos(p.y() / 25.0), 0.01 * p.x());
  };
  double err2 = 0.0, rms2 = 0.0;
  for (std::size_t held = 0; held < grid.size(); ++held) {
    FineDataset ds;
    ds.yaw = 0;
    for (std::size_t i = 0; i < grid.size(); ++i)
      if (i != held)
        ds.samples.push_back({BasePosition(grid.centers[i].v), field(grid.centers[i].v), static_cast<int>(i)});
    std::vector<FineDataset> sets;
    for (int tag : kYawTags) {
      FineDataset copy = ds;
      copy.yaw = tag;
      sets.push_back(copy);
    }
    regress::ForestOptions o;
    o.seed = held;
    const auto forests = train_residual_forests(sets, o);
    const Vec3 truth = field(grid.centers[held].v);
    const Vec3 p = forests.at(0).predict(grid.centers[held].v);
    err2 += (p - truth).squaredNorm();
    rms2 += truth.squaredNorm();
  }
  EXPECT_LT(std::sqrt(err2 / grid.size()), 0.3 * std::sqrt(rms2 / grid.size()));
}

TEST(CombinedPredictor, ZeroResidualDataEqualsMlp) {
  CombinedPredictor cp;
  cp.mlp = small_mlp();
  std::vector<FineDataset> sets;
  for (int tag : kYawTags) sets.push_back(constant_dataset(tag, Vec3::Zero(), 3));
  cp.forests = train_residual_forests(sets, {});
  EXPECT_NO_THROW(cp.validate());
  Rng rng = make_rng(2);
  for (int i = 0; i < 100; ++i) {
    const CameraPosition c(uniform(rng, -30, 30), uniform(rng, -30, 30), uniform(rng, 180, 190));
    const Orientation phi{uniform(rng, -90, 90), 5, -165};
    ASSERT_EQ(cp.predict(c, phi), cp.mlp.predict(c, phi));
  }
  CombinedPredictor bare;
  bare.mlp = cp.mlp;
  const CameraPosition c(1, 2, 185);
  EXPECT_EQ(bare.predict(c, {10, 5, -160}), bare.mlp.predict(c, {10, 5, -160}));
  EXPECT_THROW(bare.validate(), InvalidArgument);
}

TEST(CombinedPredictor, RoutesToNearestYawOnly) {
  CombinedPredictor cp;
  cp.mlp = small_mlp();
  std::vector<FineDataset> sets;
  for (int tag : kYawTags) sets.push_back(constant_dataset(tag, Vec3(tag, 0, 0), 4));
  cp.forests = train_residual_forests(sets, {});
  const CameraPosition c(5, 5, 185);
  const Vec3 base = cp.mlp.predict(c, {50, 5, -165}).v;
  EXPECT_NEAR(cp.predict(c, {50, 5, -165}).x() - base.x(), 45.0, 1e-9);
  EXPECT_NEAR(cp.predict(c, {-70, 5, -165}).x() - cp.mlp.predict(c, {-70, 5, -165}).x(), -90.0, 1e-9);
  // Changing the 90 degree data leaves the 45 degree route untouched.
  sets[4] = constant_dataset(90, Vec3(-7, 0, 0), 9);
  CombinedPredictor other = cp;
  other.forests = train_residual_forests(sets, {});
  EXPECT_EQ(other.predict(c, {50, 5, -165}), cp.predict(c, {50, 5, -165}));
  EXPECT_NE(other.predict(c, {80, 5, -165}), cp.predict(c, {80, 5, -165}));
}

TEST(FineDataset, SaveLoadRoundTrip) {
  FineDataset ds = constant_dataset(-45, Vec3(0.1, 0.2, 1.0 / 3.0), 5);
  ds.failed = 2;
  const std::string path = temp_path("fine.csv");
  save_fine_dataset(ds, path);
  const FineDataset back = load_fine_dataset(path);
  EXPECT_EQ(back.yaw, -45);
  EXPECT_EQ(back.failed, 2u);
  ASSERT_EQ(back.size(), ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    EXPECT_EQ(back.samples[i].predicted, ds.samples[i].predicted);
    EXPECT_EQ(back.samples[i].epsilon, ds.samples[i].epsilon);
    EXPECT_EQ(back.samples[i].circle, ds.samples[i].circle);
  }
}

TEST(FineDataset, TruncationDetected) {
  const FineDataset ds = constant_dataset(0, Vec3(1, 1, 1), 6);
  const std::string path = temp_path("fine_trunc.csv");
  save_fine_dataset(ds, path);
  std::string text;
  {
    std::ifstream in(path);
    text.assign(std::istreambuf_iterator<char>(in), {});
  }
  {
    std::ofstream out(path, std::ios::trunc);
    out << text.substr(0, text.size() * 2 / 3);
  }
  try {
    load_fine_dataset(path);
    FAIL() << "truncated dataset loaded";
  } catch (const FormatError& e) {
    EXPECT_EQ(e.kind, FormatError::Kind::Truncated);
  }
}

TEST(MeanCorrection, AveragesNorms) {
  std::vector<FineDataset> sets{constant_dataset(0, Vec3(3, 4, 0), 1), constant_dataset(45, Vec3(0, 0, 1), 2)};
  EXPECT_NEAR(mean_correction(sets), 3.0, 1e-12);
  EXPECT_THROW(mean_correction(std::vector<FineDataset>{}), EmptyDataset);
}
