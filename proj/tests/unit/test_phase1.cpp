#include "cfcal/errors.hpp"
#include "cfcal/phase1.hpp"
#include "cfcal/rng.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>

using namespace cfcal;
using namespace cfcal::phase1;

namespace {

worldsim::Arm arm_with(const worldsim::BiasField& f, double noise) {
  worldsim::Arm arm;
  arm.field = f;
  arm.measurement_noise = noise;
  return arm;
}

Sensors clear_sensors() {
  Sensors s;
  s.rig = stereocam::StereoRig::for_workspace({});
  s.occlusion = stereocam::OcclusionModel::none();
  return s;
}

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("cfcal_test_" + name)).string();
}

}  // namespace

TEST(GenSegment, TenPausesGiveFortyWaypoints) {
  TrajectoryOptions opts;
  opts.step_mm = 1.0;
  const auto wps = gen_segment(BasePosition(0, 0, 0), BasePosition(10, 0, 0), {0, 5, -165}, 0, 1, opts);
  ASSERT_EQ(wps.size(), 40u);
  int translations = 0;
  for (std::size_t i = 0; i < wps.size(); ++i) {
    if (i % 4 == 0) {
      EXPECT_FALSE(wps[i].rotation);
      ++translations;
      EXPECT_NEAR(wps[i].position.x(), static_cast<double>(i / 4 + 1), 1e-12);
    } else {
      EXPECT_TRUE(wps[i].rotation);
      EXPECT_EQ(wps[i].position, wps[i - i % 4].position);
      EXPECT_TRUE(in_collection_ranges(wps[i].orientation));
    }
  }
  EXPECT_EQ(translations, 10);
}

TEST(GenSegment, DegenerateSegmentIsEmpty) {
  EXPECT_TRUE(gen_segment(BasePosition(5, 5, 5), BasePosition(5, 5, 5), {}, 0, 1).empty());
}

TEST(GenSegment, RejectsNonPositiveStep) {
  TrajectoryOptions opts;
  opts.step_mm = 0.0;
  EXPECT_THROW(gen_segment(BasePosition(0, 0, 0), BasePosition(1, 0, 0), {}, 0, 1, opts), InvalidArgument);
}

TEST(GenTrajectory, StartsNextToACornerAndStaysInside) {
  const worldsim::Workspace ws;
  for (std::uint64_t s = 0; s < 200; ++s) {
    const auto wps = gen_trajectory(s, ws);
    for (const auto& w : wps) ASSERT_TRUE(ws.contains(w.position));
    if (wps.empty()) continue;
    TrajectoryOptions opts;
    const BasePosition& first = wps.front().position;
    const double cx = first.x() < 37.5 ? ws.x.lo : ws.x.hi;
    const double cy = first.y() < 37.5 ? ws.y.lo : ws.y.hi;
    EXPECT_LE(std::hypot(first.x() - cx, first.y() - cy), opts.step_mm + 1e-9);
  }
}

TEST(Collect, RawCountInBand) {
  const auto raw = collect(57, arm_with(worldsim::make_bias_field(0, 4.55), 0.1), Sensors{}, 42);
  EXPECT_GE(raw.size(), 4500u);
  EXPECT_LE(raw.size(), 6000u);
}

TEST(Collect, FiveStepTrajectoryGivesTwentyRecords) {
  TrajectoryOptions opts;
  opts.step_mm = 1.0;
  const auto wps = gen_segment(BasePosition(0, 0, 0), BasePosition(0, 5, 0), {0, 5, -165}, 0, 3, opts);
  const auto raw = collect_waypoints(wps, arm_with(worldsim::BiasField::zero(), 0.1), Sensors{}, 9);
  EXPECT_EQ(raw.size(), 20u);
}

TEST(Collect, DeterministicAndThreadIndependent) {
  const auto arm = arm_with(worldsim::make_bias_field(1, 4.55), 0.1);
  const auto a = collect(6, arm, Sensors{}, 5, {}, 1);
  const auto b = collect(6, arm, Sensors{}, 5, {}, 4);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    ASSERT_EQ(a[i].waypoint.position, b[i].waypoint.position);
    ASSERT_EQ(a[i].detection.left.has_value(), b[i].detection.left.has_value());
    if (a[i].detection.left) ASSERT_EQ(a[i].detection.left->u, b[i].detection.left->u);
  }
}

TEST(Clean, NoOcclusionNoNoiseKeepsEverything) {
  const auto arm = arm_with(worldsim::make_bias_field(2, 4.55), 0.0);
  Sensors sensors = clear_sensors();
  const auto raw = collect(3, arm, sensors, 1);
  const auto ds = clean(raw, sensors.rig, arm.workspace);
  EXPECT_EQ(ds.size(), raw.size());
  EXPECT_EQ(ds.provenance.raw_count, raw.size());
}

TEST(Clean, DefaultRetentionInBand) {
  const auto arm = arm_with(worldsim::make_bias_field(0, 4.55), 0.1);
  const Sensors sensors;
  const auto raw = collect(57, arm, sensors, 11);
  const auto ds = clean(raw, sensors.rig, arm.workspace);
  const double r = static_cast<double>(ds.size()) / raw.size();
  EXPECT_GE(r, 0.32);
  EXPECT_LE(r, 0.42);
  EXPECT_LE(ds.provenance.cleaned_count, ds.provenance.raw_count);
}

TEST(Clean, AllOccludedIsAnError) {
  const auto arm = arm_with(worldsim::BiasField::zero(), 0.1);
  Sensors sensors;
  sensors.occlusion.p_max = 0.0;
  const auto raw = collect(2, arm, sensors, 1);
  EXPECT_THROW(clean(raw, sensors.rig, arm.workspace), EmptyDataset);
}

TEST(Clean, RetentionFallsWithOcclusionStrength) {
  const auto arm = arm_with(worldsim::make_bias_field(0, 4.55), 0.1);
  std::size_t last = std::numeric_limits<std::size_t>::max();
  for (double midpoint : {30.0, 16.0, 10.6, 6.0, 2.0}) {
    Sensors sensors;
    sensors.occlusion.midpoint = midpoint;
    const auto ds = clean(collect(10, arm, sensors, 3), sensors.rig, arm.workspace);
    EXPECT_LE(ds.size(), last) << "midpoint " << midpoint;
    last = ds.size();
  }
}

TEST(Clean, TargetsAreCommandsAndInvertThroughTheBias) {
  const auto arm = arm_with(worldsim::make_bias_field(3, 4.55), 0.1);
  Sensors sensors;
  const auto raw = collect(8, arm, sensors, 2);
  const auto ds = clean(raw, sensors.rig, arm.workspace);
  // Depth dominates the camera noise: sigma_z = z^2 / (f b) * sqrt(2) * sigma_px.
  const double sz = 190.5 * 190.5 / (2152.65 * 5.0) * std::sqrt(2.0) * 0.5;
  for (const auto& s : ds.samples) {
    const WorldPoint w = sensors.rig.to_world(s.camera);
    const BasePosition back = worldsim::true_inverse(w, s.orientation, arm);
    EXPECT_LT(std::abs(back.x() - s.target.x()), 3.0 * (0.1 + 0.1 + 0.2 * sz));
    EXPECT_LT(std::abs(back.z() - s.target.z()), 3.0 * std::hypot(0.1, sz) + 1.0);
  }
  std::size_t matched = 0;
  for (const auto& s : ds.samples)
    for (const auto& r : raw)
      if (r.waypoint.position == s.target && r.waypoint.orientation == s.orientation) {
        ++matched;
        break;
      }
  EXPECT_EQ(matched, ds.size());
}

TEST(Clean, MarkerOffsetShiftsObservations) {
  const auto arm = arm_with(worldsim::BiasField::zero(), 0.0);
  Sensors sensors = clear_sensors();
  sensors.marker_offset = Vec3(1.5, 0.0, -2.0);
  const std::vector<Waypoint> wps{{BasePosition(30, 30, 0), {0, 0, -180}, 0, false}};
  const auto ds = clean(collect_waypoints(wps, arm, sensors, 1), sensors.rig, arm.workspace);
  ASSERT_EQ(ds.size(), 1u);
  const WorldPoint w = sensors.rig.to_world(ds.samples[0].camera);
  // Roll -180 flips tool y and z: the marker sits 1.5 mm along +x and 2 mm up.
  EXPECT_NEAR(w.x(), 31.5, 1e-9);
  EXPECT_NEAR(w.y(), 30.0, 1e-9);
  EXPECT_NEAR(w.z(), 2.0, 1e-9);
}

TEST(CoarseDataset, SaveLoadRoundTrip) {
  const auto arm = arm_with(worldsim::make_bias_field(4, 4.55), 0.1);
  Sensors sensors;
  const auto ds = clean(collect(5, arm, sensors, 8), sensors.rig, arm.workspace, {}, 8);
  const std::string csv = temp_path("coarse.csv"), meta = temp_path("coarse.meta");
  save_dataset(ds, csv, meta);
  const auto back = load_dataset(csv, meta);
  ASSERT_EQ(back.size(), ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    ASSERT_EQ(back.samples[i].camera, ds.samples[i].camera);
    ASSERT_EQ(back.samples[i].orientation, ds.samples[i].orientation);
    ASSERT_EQ(back.samples[i].target, ds.samples[i].target);
  }
  EXPECT_EQ(back.provenance.raw_count, ds.provenance.raw_count);
  EXPECT_EQ(back.provenance.trajectories, ds.provenance.trajectories);
  EXPECT_EQ(back.provenance.seed, 8u);
}

TEST(CoarseDataset, TruncatedAndNonNumericFilesAreDistinguished) {
  const auto arm = arm_with(worldsim::make_bias_field(4, 4.55), 0.1);
  Sensors sensors;
  const auto ds = clean(collect(3, arm, sensors, 8), sensors.rig, arm.workspace);
  const std::string csv = temp_path("coarse2.csv"), meta = temp_path("coarse2.meta");
  save_dataset(ds, csv, meta);
  std::string text;
  {
    std::ifstream in(csv);
    text.assign(std::istreambuf_iterator<char>(in), {});
  }
  {
    std::ofstream out(csv, std::ios::trunc);
    out << text.substr(0, text.size() / 2);
  }
  try {
    load_dataset(csv, meta);
    FAIL() << "truncated file loaded";
  } catch (const FormatError& e) {
    EXPECT_EQ(e.kind, FormatError::Kind::Truncated);
  }
  {
    std::ofstream out(csv, std::ios::trunc);
    const auto nl = text.find('\n');
    out << text.substr(0, nl + 1) << "1,2,x,4,5,6,7,8,9\n";
  }
  try {
    load_dataset(csv, meta);
    FAIL() << "non-numeric file loaded";
  } catch (const FormatError& e) {
    EXPECT_EQ(e.kind, FormatError::Kind::NonNumeric);
  }
}
