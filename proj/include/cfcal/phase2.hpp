#pragma once

#include "cfcal/predictor.hpp"
#include "cfcal/regress/forest.hpp"
#include "cfcal/regress/mlp.hpp"
#include "cfcal/stereocam.hpp"
#include "cfcal/types.hpp"
#include "cfcal/worldsim.hpp"

#include <array>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace cfcal::phase2 {

struct GridOptions {
  int rows{5};  // along y
  int cols{7};  // along x
  double margin{7.5};
  double radius{2.0};
};

struct CalibrationGrid {
  std::vector<WorldPoint> centers;  // row-major, rows along y
  double radius{2.0};

  std::size_t size() const { return centers.size(); }
};

// Evenly spaced lattice of circle centres on the phantom plane, inset by the
// margin on every side.
CalibrationGrid make_grid(const worldsim::Workspace& ws, const GridOptions& opts = {});
void validate_grid(const CalibrationGrid& grid, const worldsim::Workspace& ws);

struct HandModel {
  double sigma{0.2};    // mm, lateral axes
  double sigma_z{0.2};  // mm, vertical axis
};

// Correction a person applies to move the tool from where it went to the
// circle centre, in base-frame coordinates.
Vec3 correction_oracle(const WorldPoint& reached, const WorldPoint& target, const HandModel& hand,
                       const worldsim::FrameOffset& offset, std::uint64_t seed);

struct ResidualSample {
  BasePosition predicted;
  Vec3 epsilon{Vec3::Zero()};
  int circle{0};
};

inline constexpr double kMaxCorrection = 20.0;  // mm

struct FineDataset {
  int yaw{0};
  std::vector<ResidualSample> samples;
  std::size_t failed{0};  // circles skipped: command outside the envelope or implausible correction

  std::size_t size() const { return samples.size(); }
};

struct FineSetup {
  worldsim::Arm arm;
  stereocam::StereoRig rig;
  PitchRollTable pitch_roll;
  HandModel hand;
  double target_pixel_sigma{0.5};  // circle-centre localisation noise
};

// Visits every circle at every discretized yaw with the coarse predictor and
// records the correction. Rows are ordered by (yaw, circle).
std::array<FineDataset, 5> collect_fine(const Predictor& coarse, const CalibrationGrid& grid,
                                        const FineSetup& setup, std::uint64_t seed, std::size_t threads = 1);

double mean_correction(std::span<const FineDataset> datasets);

std::map<int, regress::ForestModel> train_residual_forests(std::span<const FineDataset> datasets,
                                                           const regress::ForestOptions& opts);

// f_DNN(x_c, phi) + f_RF[yaw tag](f_DNN(x_c, phi)).
struct CombinedPredictor {
  regress::MlpModel mlp;
  std::map<int, regress::ForestModel> forests;

  void validate() const;
  BasePosition predict(const CameraPosition& c, const Orientation& phi) const;
  Vec3 residual(const BasePosition& coarse, int yaw_tag) const;
};

void save_fine_dataset(const FineDataset& ds, const std::string& path);
FineDataset load_fine_dataset(const std::string& path);

}  // namespace cfcal::phase2
