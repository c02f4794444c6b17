#pragma once

#include "cfcal/stereocam.hpp"
#include "cfcal/types.hpp"
#include "cfcal/worldsim.hpp"

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace cfcal::phase1 {

struct Waypoint {
  BasePosition position;
  Orientation orientation;
  int trajectory{0};
  bool rotation{false};  // one of the extra orientations at a pause
};

struct TrajectoryOptions {
  double step_mm{2.5};
  int rotations_per_pause{3};
};

// Straight segment from `start` to `target` split into ceil(distance / step)
// moves. Each pause emits the translation waypoint followed by the extra
// random orientations at the same position.
std::vector<Waypoint> gen_segment(const BasePosition& start, const BasePosition& target,
                                  const Orientation& hold, int trajectory, std::uint64_t seed,
                                  const TrajectoryOptions& opts = {});

// Random trajectory: start at a workspace corner chosen by the seed, target
// uniform in the workspace.
std::vector<Waypoint> gen_trajectory(std::uint64_t seed, const worldsim::Workspace& ws,
                                     int trajectory = 0, const TrajectoryOptions& opts = {});

struct RawRecord {
  Waypoint waypoint;
  stereocam::Detection detection;
};

struct Sensors {
  stereocam::StereoRig rig{};
  stereocam::OcclusionModel occlusion{};
  // Position of the tracked marker relative to the tool tip, in the tool frame.
  // The marker rides on the wrist, so what the cameras see is offset from the
  // point that is commanded and later placed on targets.
  Vec3 marker_offset{Vec3::Zero()};
};

// Executes every waypoint and records what the cameras saw.
std::vector<RawRecord> collect_waypoints(std::span<const Waypoint> waypoints, const worldsim::Arm& arm,
                                         const Sensors& sensors, std::uint64_t seed);

std::vector<RawRecord> collect(int n_traj, const worldsim::Arm& arm, const Sensors& sensors,
                               std::uint64_t seed, const TrajectoryOptions& opts = {},
                               std::size_t threads = 1);

struct Sample {
  CameraPosition camera;
  Orientation orientation;
  BasePosition target;

  std::array<double, 6> input() const {
    return {camera.x(), camera.y(), camera.z(), orientation.yaw, orientation.pitch, orientation.roll};
  }
};

struct Provenance {
  std::vector<int> trajectories;
  std::size_t raw_count{0};
  std::size_t cleaned_count{0};
  std::uint64_t seed{0};
};

struct CoarseDataset {
  std::vector<Sample> samples;
  Provenance provenance;

  std::size_t size() const { return samples.size(); }
  bool empty() const { return samples.empty(); }
  CoarseDataset subset(std::span<const std::size_t> rows) const;
};

struct CleanOptions {
  double consistency_tol{2.0};  // mm
};

// Keeps records seen by both cameras whose per-camera back-projections agree
// with the stereo triangulation to within consistency_tol and whose position
// is plausible for the rig. Throws EmptyDataset when nothing survives.
CoarseDataset clean(std::span<const RawRecord> raw, const stereocam::StereoRig& rig,
                    const worldsim::Workspace& ws, const CleanOptions& opts = {},
                    std::uint64_t seed = 0);

void save_dataset(const CoarseDataset& ds, const std::string& csv_path,
                  const std::string& provenance_path);
CoarseDataset load_dataset(const std::string& csv_path, const std::string& provenance_path);

}  // namespace cfcal::phase1
