#pragma once

#include "cfcal/kvfile.hpp"
#include "cfcal/types.hpp"
#include "cfcal/worldsim.hpp"

#include <cstdint>
#include <optional>

namespace cfcal::stereocam {

struct Pixel {
  double u{0.0};
  double v{0.0};
};

struct PixelPair {
  Pixel left;
  Pixel right;
};

// Rectified pinhole pair looking straight down at the workspace. The camera
// frame is the left camera's: x along world +x, y along world -y, z toward the
// phantom. The right camera sits `baseline` mm along camera +x.
struct StereoRig {
  double focal_px{2152.65};
  double baseline{5.0};
  double cx_left{960.0};
  double cy_left{540.0};
  double cx_right{960.0};
  double cy_right{540.0};
  int image_width{1920};
  int image_height{1080};
  Vec3 left_center_world{37.5, 37.5, 190.5};

  // Rig centred over the workspace at its camera height.
  static StereoRig for_workspace(const worldsim::Workspace& ws);

  double rig_height() const { return left_center_world.z(); }
  // Lateral image scale at the phantom plane (z = 0).
  double px_per_mm() const { return focal_px / rig_height(); }

  CameraPosition to_camera(const WorldPoint& w) const;
  WorldPoint to_world(const CameraPosition& c) const;
  bool in_image(const Pixel& p) const;
  void validate(const worldsim::Workspace& ws) const;

  void write(KvDocument& doc) const;
  static StereoRig read(const KvDocument& doc);
};

PixelPair project(const CameraPosition& c, const StereoRig& rig);
PixelPair project(const WorldPoint& w, const StereoRig& rig);
double disparity(const PixelPair& p, const StereoRig& rig);
CameraPosition triangulate(const PixelPair& p, const StereoRig& rig);

// Wrist occlusion of the red marker. Each camera independently sees it with
//   p_vis = p_max / (1 + exp((|pitch - nominal_pitch| - midpoint) / slope)).
// A visible camera occasionally locks onto a spurious red blob instead.
struct OcclusionModel {
  bool enabled{true};
  double nominal_pitch{5.0};
  double p_max{0.95};
  double midpoint{10.6};
  double slope{2.5};
  double spurious_rate{0.01};
  double pixel_sigma{0.5};

  double visibility(const Orientation& phi) const;
  static OcclusionModel none(double pixel_sigma = 0.0);
};

struct Detection {
  std::optional<Pixel> left;
  std::optional<Pixel> right;

  bool both() const { return left.has_value() && right.has_value(); }
  PixelPair pair() const { return {*left, *right}; }
};

Detection detect_marker(const WorldPoint& w, const Orientation& phi, const StereoRig& rig,
                        const OcclusionModel& occlusion, std::uint64_t seed);

// Projects a known target with Gaussian pixel noise and triangulates it, the
// way a contour-detected circle or fragment centre is located.
CameraPosition locate_target(const WorldPoint& w, const StereoRig& rig, double pixel_sigma,
                             std::uint64_t seed);

}  // namespace cfcal::stereocam
