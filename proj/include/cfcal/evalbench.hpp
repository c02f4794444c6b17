#pragma once

#include "cfcal/phase2.hpp"
#include "cfcal/predictor.hpp"
#include "cfcal/stereocam.hpp"
#include "cfcal/worldsim.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace cfcal::evalbench {

// Distance between the left-camera projections of two points.
double pixel_error(const WorldPoint& reached, const WorldPoint& target, const stereocam::StereoRig& rig);
double mm_from_px(double e, const stereocam::StereoRig& rig);

// A fixed discretized yaw, or a fresh uniform yaw in [-90, 90] per circle.
struct YawSetting {
  std::optional<int> tag;

  static YawSetting fixed(int tag);
  static YawSetting random() { return {}; }
  std::string label() const;
};

// The six columns of the benchmark: the five tags then the random setting.
std::vector<YawSetting> all_yaw_settings();

struct BenchStats {
  double mean{0.0};
  double se{0.0};  // sample standard deviation / sqrt(n)
  double median{0.0};
  double min{0.0};
  double max{0.0};
  std::size_t n{0};
};

BenchStats summarize(std::vector<double> errors);

struct BenchRow {
  std::string mapping;
  std::string yaw;
  BenchStats stats;
  std::vector<double> errors;  // px, one per reached circle in grid order
  std::size_t refused{0};      // circles whose command left the safety envelope
};

struct BenchSetup {
  worldsim::Arm arm;
  stereocam::StereoRig rig;
  PitchRollTable pitch_roll;
  double target_pixel_sigma{0.5};
};

// Commands the predictor to every circle centre under one yaw setting and
// measures where the tool actually went, in pixels. Commands the arm refuses
// are counted and left out of the statistics.
BenchRow benchmark(const std::string& mapping, const Predictor& predictor, const phase2::CalibrationGrid& grid,
                   const YawSetting& setting, const BenchSetup& setup, std::uint64_t seed);

struct MappingSummary {
  std::string mapping;
  double mean_px{0.0};  // average of the per-setting means
  double mean_mm{0.0};
};

struct BenchTable {
  std::vector<BenchRow> rows;  // mapping-major, settings in all_yaw_settings order
  std::vector<MappingSummary> summary;

  const MappingSummary& mapping(const std::string& name) const;
  std::string csv(const stereocam::StereoRig& rig) const;
  std::string text(const stereocam::StereoRig& rig) const;
};

// Every mapping under every yaw setting. Each setting uses the same noise
// stream for every mapping, so the comparison between mappings is paired.
BenchTable full_table(const std::vector<std::pair<std::string, Predictor>>& predictors,
                      const phase2::CalibrationGrid& grid, const BenchSetup& setup, std::uint64_t seed,
                      std::size_t threads = 1);

}  // namespace cfcal::evalbench
