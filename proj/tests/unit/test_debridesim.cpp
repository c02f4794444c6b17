#include "cfcal/debridesim.hpp"
#include "cfcal/errors.hpp"
#include "cfcal/rng.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace cfcal;
using namespace cfcal::debridesim;

namespace {

TrialSetup quiet_setup(const worldsim::BiasField& f) {
  TrialSetup s;
  s.arm.field = f;
  s.arm.measurement_noise = 0.0;
  s.rig = stereocam::StereoRig::for_workspace(s.arm.workspace);
  s.target_pixel_sigma = 0.0;
  return s;
}

Predictor offset_oracle(const TrialSetup& s, double dx) {
  return [s, dx](const CameraPosition& c, const Orientation& phi) {
    BasePosition b = worldsim::true_inverse(s.rig.to_world(c), phi, s.arm);
    b.v.x() += dx;
    return b;
  };
}

Fragment pumpkin() {
  Fragment f;
  f.kind = Kind::Pumpkin;
  f.center = WorldPoint(30, 30, 1.2);
  f.length = 12.4;
  f.width = 6.8;
  f.thickness = 2.4;
  return f;
}

}  // namespace

TEST(GenScene, EightFragmentsWithClearance) {
  const worldsim::Workspace ws;
  for (Kind k : {Kind::Pumpkin, Kind::Raisin}) {
    for (std::uint64_t s = 0; s < 30; ++s) {
      const Scene scene = gen_scene(k, s, ws);
      ASSERT_EQ(scene.fragments.size(), 8u);
      EXPECT_GE(min_clearance(scene), 3.0);
      const FragmentShape shape = fragment_shape(k);
      for (const auto& f : scene.fragments) {
        EXPECT_TRUE(ws.contains(BasePosition(f.center.x(), f.center.y(), 0.0)));
        EXPECT_GE(f.center.x() - f.radius(), ws.x.lo);
        EXPECT_LE(f.center.y() + f.radius(), ws.y.hi);
        EXPECT_LE(f.width, 10.0);
        EXPECT_GE(f.angle, -90.0);
        EXPECT_LT(f.angle, 90.0);
        EXPECT_LE(std::abs(f.length - shape.length.mean), 3.0 * shape.length.sigma + 1e-12);
        EXPECT_LE(std::abs(f.width - shape.width.mean), 3.0 * shape.width.sigma + 1e-12);
        EXPECT_LE(std::abs(f.thickness - shape.thickness.mean), 3.0 * shape.thickness.sigma + 1e-12);
      }
    }
  }
}

TEST(GenScene, SameSeedSameScene) {
  const Scene a = gen_scene(Kind::Raisin, 9, {});
  const Scene b = gen_scene(Kind::Raisin, 9, {});
  for (std::size_t i = 0; i < 8; ++i) {
    EXPECT_EQ(a.fragments[i].center, b.fragments[i].center);
    EXPECT_EQ(a.fragments[i].angle, b.fragments[i].angle);
  }
}

TEST(GenScene, CrowdedWorkspaceFails) {
  worldsim::Workspace ws;
  ws.x = {0, 20};
  ws.y = {0, 20};
  EXPECT_THROW(gen_scene(Kind::Pumpkin, 1, ws), DegenerateInput);
}

TEST(SnapYaw, NearestWithMidpointsTowardZero) {
  EXPECT_EQ(snap_yaw(50.0), 45);
  EXPECT_EQ(snap_yaw(-70.0), -90);
  EXPECT_EQ(snap_yaw(-22.5), 0);
  EXPECT_EQ(snap_yaw(22.5), 0);
  EXPECT_EQ(snap_yaw(67.5), 45);
  EXPECT_EQ(snap_yaw(-67.5), -45);
  EXPECT_EQ(snap_yaw(-90.0), -90);
  EXPECT_THROW(snap_yaw(90.0), InvalidArgument);
}

TEST(PitchRoll, TableLookups) {
  const PitchRollTable t;
  for (int tag : kYawTags) {
    const auto [p, r] = lookup_pitch_roll(tag, t);
    EXPECT_TRUE(kPitchRange.contains(p));
    EXPECT_TRUE(kRollRange.contains(r));
  }
  EXPECT_NE(lookup_pitch_roll(-90, t), lookup_pitch_roll(90, t));
  EXPECT_THROW(lookup_pitch_roll(30, t), InvalidArgument);
}

TEST(ClassifyGrasp, Taxonomy) {
  GraspModel no_slip;
  no_slip.pumpkin_slip = 0.0;
  EXPECT_EQ(classify_grasp(0.0, pumpkin(), no_slip, 1), OutcomeTag::Success);
  EXPECT_EQ(classify_grasp(10.0, pumpkin(), no_slip, 1), OutcomeTag::TypeA);
  EXPECT_DOUBLE_EQ(grasp_tol(pumpkin(), no_slip), 4.4);
  Fragment raisin = pumpkin();
  raisin.kind = Kind::Raisin;
  raisin.width = 5.9;
  EXPECT_EQ(classify_grasp(grasp_tol(raisin, no_slip) + 0.5, raisin, no_slip, 1), OutcomeTag::TypeC);
  EXPECT_EQ(classify_grasp(grasp_tol(raisin, no_slip) + 1.5, raisin, no_slip, 1), OutcomeTag::TypeA);
  EXPECT_EQ(classify_grasp(grasp_tol(pumpkin(), no_slip) + 0.5, pumpkin(), no_slip, 1), OutcomeTag::TypeA);
  GraspModel always;
  always.pumpkin_slip = 1.0;
  EXPECT_EQ(classify_grasp(0.0, pumpkin(), always, 1), OutcomeTag::TypeB);
}

TEST(ClassifyGrasp, SlipRate) {
  const GraspModel m;
  int slips = 0;
  const int n = 20000;
  for (int i = 0; i < n; ++i)
    if (classify_grasp(1.0, pumpkin(), m, derive_seed(3, Stream::Grasp, i)) == OutcomeTag::TypeB) ++slips;
  EXPECT_NEAR(static_cast<double>(slips) / n, 0.08, 0.006);
}

TEST(AttemptGrasp, BlindToPredictorIdentity) {
  // Two different predictors issuing the same command get the same outcome.
  const TrialSetup s = quiet_setup(worldsim::make_bias_field(1, 4.55));
  const Predictor a = offset_oracle(s, 1.0);
  const Predictor b = [inner = offset_oracle(s, 0.5)](const CameraPosition& c, const Orientation& phi) {
    BasePosition p = inner(c, phi);
    p.v.x() += 0.5;
    return p;
  };
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const Fragment f = gen_scene(Kind::Pumpkin, seed, {}).fragments[0];
    const Outcome x = attempt_grasp(f, a, s, seed);
    const Outcome y = attempt_grasp(f, b, s, seed);
    ASSERT_EQ(x.tag, y.tag);
    ASSERT_NEAR(x.lateral_error, y.lateral_error, 1e-9);
    ASSERT_EQ(x.tag, classify_grasp(x.lateral_error, f, s.grasp, derive_seed(seed, Stream::Grasp)));
  }
}

TEST(AttemptGrasp, MissRateGrowsWithOffset) {
  const TrialSetup s = quiet_setup(worldsim::make_bias_field(2, 4.55));
  double last = -1.0;
  for (double dx : {0.0, 1.0, 2.0, 4.0}) {
    int misses = 0, n = 0;
    for (std::uint64_t t = 0; t < 125; ++t)
      for (const auto& f : gen_scene(Kind::Pumpkin, 1000 + t, {}).fragments) {
        if (attempt_grasp(f, offset_oracle(s, dx), s, t * 8 + n % 8).tag == OutcomeTag::TypeA) ++misses;
        ++n;
      }
    const double rate = static_cast<double>(misses) / n;
    EXPECT_GE(rate, last);
    last = rate;
  }
  EXPECT_GT(last, 0.0);
}

TEST(RunTrials, OracleWithoutSlipSucceedsEverywhere) {
  TrialSetup s = quiet_setup(worldsim::make_bias_field(3, 4.55));
  s.grasp.pumpkin_slip = 0.0;
  const Tally t = run_trials(Kind::Pumpkin, "oracle", offset_oracle(s, 0.0), 15, s, 7);
  EXPECT_EQ(t.attempts(), 120);
  EXPECT_EQ(t.count(OutcomeTag::Success), 120);
  EXPECT_DOUBLE_EQ(t.success_fraction(), 1.0);
  const std::string grid = t.grid();
  EXPECT_NE(grid.find("Success: 120/120"), std::string::npos);
  EXPECT_NE(grid.find("15,-,-,-,-,-,-,-,-\n"), std::string::npos);
  EXPECT_THROW(run_trials(Kind::Pumpkin, "x", offset_oracle(s, 0.0), 0, s, 7), InvalidArgument);
}

TEST(RunTrials, EveryAttemptHasOneTag) {
  TrialSetup s = quiet_setup(worldsim::make_bias_field(3, 4.55));
  s.arm.measurement_noise = 0.1;
  s.target_pixel_sigma = 0.5;
  const Tally t = run_trials(Kind::Raisin, "shift", offset_oracle(s, 3.5), 15, s, 8);
  int total = 0;
  for (const auto& row : t.trials) {
    EXPECT_EQ(row.size(), 8u);
    total += static_cast<int>(row.size());
  }
  EXPECT_EQ(t.count(OutcomeTag::Success) + t.count(OutcomeTag::TypeA) + t.count(OutcomeTag::TypeB) +
                t.count(OutcomeTag::TypeC),
            total);
  EXPECT_EQ(t.count(OutcomeTag::TypeB), 0);
}
