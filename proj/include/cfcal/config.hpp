#pragma once

#include "cfcal/debridesim.hpp"
#include "cfcal/kvfile.hpp"
#include "cfcal/phase1.hpp"
#include "cfcal/phase2.hpp"
#include "cfcal/regress/forest.hpp"
#include "cfcal/regress/mlp.hpp"
#include "cfcal/stereocam.hpp"
#include "cfcal/worldsim.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace cfcal {

struct ScenarioConfig {
  // [scenario]
  std::uint64_t seed{0};
  std::size_t threads{1};

  // [workspace]
  worldsim::Workspace workspace{};
  Vec3 offset_translation{Vec3::Zero()};
  double offset_yaw_deg{0.0};  // rotation of the base frame about world z

  // [bias]
  std::optional<std::uint64_t> bias_seed;  // derived from `seed` when unset
  double bias_rms{4.55};
  worldsim::BiasShape bias_shape{};

  // [rig]
  stereocam::StereoRig rig{};  // placed over the workspace centre when built

  // [noise]
  double measurement_noise{0.1};
  double target_pixel_sigma{0.5};
  phase2::HandModel hand{};

  // [occlusion]
  stereocam::OcclusionModel occlusion{};

  // [phase1]
  int n_traj{57};
  phase1::TrajectoryOptions trajectory{};
  phase1::CleanOptions clean{};
  Vec3 marker_offset{1.5, 0.0, -2.0};  // tool frame, mm

  // [mlp]
  regress::MlpArch arch{};
  regress::TrainOptions train{};
  int cv_folds{10};
  bool sweep{false};
  int sweep_epochs{100};

  // [forest]
  regress::ForestOptions forest{};

  // [grid]
  phase2::GridOptions grid{};

  // [debride]
  std::vector<debridesim::Kind> kinds{debridesim::Kind::Pumpkin, debridesim::Kind::Raisin};
  int n_trials{15};
  debridesim::SceneOptions scene{};
  debridesim::GraspModel grasp{};

  // [pitch_roll]
  PitchRollTable pitch_roll{};
};

// Unknown sections or keys, malformed values and out-of-range values raise
// ConfigError carrying the offending line.
ScenarioConfig parse_config(const KvDocument& doc);
ScenarioConfig load_config(const std::string& path);
KvDocument to_kv(const ScenarioConfig& c);
std::string config_text(const ScenarioConfig& c);
// FNV-1a of the canonical text form.
std::uint64_t config_hash(const ScenarioConfig& c);
void validate(const ScenarioConfig& c);

std::uint64_t effective_bias_seed(const ScenarioConfig& c);
worldsim::FrameOffset make_offset(const ScenarioConfig& c);
stereocam::StereoRig make_rig(const ScenarioConfig& c);
worldsim::Arm make_arm(const ScenarioConfig& c);

}  // namespace cfcal
