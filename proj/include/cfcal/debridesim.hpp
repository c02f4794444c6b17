#pragma once

#include "cfcal/predictor.hpp"
#include "cfcal/stereocam.hpp"
#include "cfcal/types.hpp"
#include "cfcal/worldsim.hpp"

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace cfcal::debridesim {

enum class Kind { Pumpkin, Raisin };

std::string to_string(Kind k);
Kind parse_kind(const std::string& s);

struct Dimension {
  double mean{0.0};
  double sigma{0.0};
};

// Length, width and thickness distributions of a fragment kind, in mm.
struct FragmentShape {
  Dimension length, width, thickness;
};

FragmentShape fragment_shape(Kind k);

struct Fragment {
  Kind kind{Kind::Pumpkin};
  WorldPoint center;  // on the phantom plane, z = thickness / 2
  double length{0.0};
  double width{0.0};
  double thickness{0.0};
  double angle{0.0};  // major axis heading, degrees in [-90, 90)

  double radius() const { return 0.5 * length; }
};

struct Scene {
  std::vector<Fragment> fragments;
};

struct SceneOptions {
  int fragments{8};
  double clearance{3.0};  // mm between bounding circles
  int max_attempts{10000};
};

// Rejection-samples fragments one at a time until the scene is full. Throws
// DegenerateInput once max_attempts candidates have been drawn.
Scene gen_scene(Kind kind, std::uint64_t seed, const worldsim::Workspace& ws, const SceneOptions& opts = {});

double min_clearance(const Scene& scene);

// Ellipse heading to the yaw the gripper uses. Requires angle in [-90, 90).
int snap_yaw(double angle_deg);
std::pair<double, double> lookup_pitch_roll(int yaw_tag, const PitchRollTable& table);

enum class OutcomeTag { Success, TypeA, TypeB, TypeC };

char symbol(OutcomeTag t);  // '-', 'A', 'B', 'C'

struct GraspModel {
  double tip_slack{1.0};     // mm added to half the minor width
  double pumpkin_slip{0.08};
  double raisin_slip{0.0};
  double raisin_band{1.0};   // mm beyond tolerance where a raisin snags on one tip
};

double grasp_tol(const Fragment& f, const GraspModel& model);

// Outcome from the lateral error alone. Depends only on its arguments.
OutcomeTag classify_grasp(double lateral_error, const Fragment& f, const GraspModel& model, std::uint64_t seed);

struct Outcome {
  OutcomeTag tag{OutcomeTag::Success};
  double lateral_error{0.0};
  int yaw{0};
};

struct TrialSetup {
  worldsim::Arm arm;
  stereocam::StereoRig rig;
  PitchRollTable pitch_roll;
  GraspModel grasp;
  SceneOptions scene;
  double target_pixel_sigma{0.5};
};

Outcome attempt_grasp(const Fragment& frag, const Predictor& predictor, const TrialSetup& setup,
                      std::uint64_t seed);

struct Tally {
  Kind kind{Kind::Pumpkin};
  std::string mapping;
  std::vector<std::vector<Outcome>> trials;
  std::array<int, 4> counts{};  // indexed by OutcomeTag

  int attempts() const;
  int count(OutcomeTag t) const { return counts[static_cast<std::size_t>(t)]; }
  double success_fraction() const;
  // One row of outcome symbols per trial, then a counts footer.
  std::string grid() const;
};

// n_trials scenes with their fragments attempted in order. Scenes and grasp
// draws depend only on the seed, so two predictors run with one seed face the
// same fragments.
Tally run_trials(Kind kind, const std::string& mapping, const Predictor& predictor, int n_trials,
                 const TrialSetup& setup, std::uint64_t seed);

}  // namespace cfcal::debridesim
