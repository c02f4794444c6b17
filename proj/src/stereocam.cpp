#include "cfcal/stereocam.hpp"

#include "cfcal/errors.hpp"
#include "cfcal/rng.hpp"

#include <cmath>

namespace cfcal::stereocam {

StereoRig StereoRig::for_workspace(const worldsim::Workspace& ws) {
  StereoRig rig;
  rig.left_center_world = Vec3(ws.x.mid(), ws.y.mid(), ws.camera_height);
  return rig;
}

CameraPosition StereoRig::to_camera(const WorldPoint& w) const {
  const Vec3 d = w.v - left_center_world;
  return CameraPosition(d.x(), -d.y(), -d.z());
}

WorldPoint StereoRig::to_world(const CameraPosition& c) const {
  return WorldPoint(left_center_world + Vec3(c.x(), -c.y(), -c.z()));
}

bool StereoRig::in_image(const Pixel& p) const {
  return p.u >= 0.0 && p.u <= image_width && p.v >= 0.0 && p.v <= image_height;
}

void StereoRig::validate(const worldsim::Workspace& ws) const {
  if (!(focal_px > 0.0) || !(baseline > 0.0)) throw InvalidArgument("focal length and baseline must be positive");
  if (cy_left != cy_right) throw InvalidArgument("rectified rig requires equal principal rows");
  if (!(rig_height() > ws.z.hi)) throw InvalidArgument("rig must sit above the workspace");
  for (double x : {ws.x.lo, ws.x.hi})
    for (double y : {ws.y.lo, ws.y.hi})
      for (double z : {ws.z.lo, ws.z.hi}) {
        const PixelPair p = project(WorldPoint(x, y, z), *this);
        if (!in_image(p.left) || !in_image(p.right))
          throw InvalidArgument("workspace corner projects outside the image");
      }
}

void StereoRig::write(KvDocument& doc) const {
  doc.set("rig", "focal_px", focal_px);
  doc.set("rig", "baseline", baseline);
  doc.set("rig", "cx_left", cx_left);
  doc.set("rig", "cy_left", cy_left);
  doc.set("rig", "cx_right", cx_right);
  doc.set("rig", "cy_right", cy_right);
  doc.set("rig", "image_width", std::to_string(image_width));
  doc.set("rig", "image_height", std::to_string(image_height));
  doc.set("rig", "center_x", left_center_world.x());
  doc.set("rig", "center_y", left_center_world.y());
  doc.set("rig", "height", left_center_world.z());
}

StereoRig StereoRig::read(const KvDocument& doc) {
  auto num = [&](const char* key) {
    const auto& e = doc.require("rig", key);
    return parse_double(e.value, e.line);
  };
  auto integer = [&](const char* key) {
    const auto& e = doc.require("rig", key);
    return static_cast<int>(parse_int(e.value, e.line));
  };
  StereoRig rig;
  rig.focal_px = num("focal_px");
  rig.baseline = num("baseline");
  rig.cx_left = num("cx_left");
  rig.cy_left = num("cy_left");
  rig.cx_right = num("cx_right");
  rig.cy_right = num("cy_right");
  rig.image_width = integer("image_width");
  rig.image_height = integer("image_height");
  rig.left_center_world = Vec3(num("center_x"), num("center_y"), num("height"));
  return rig;
}

PixelPair project(const CameraPosition& c, const StereoRig& rig) {
  if (!(c.z() > 0.0)) throw InvalidArgument("point is not in front of the cameras");
  const double inv = rig.focal_px / c.z();
  const double v = rig.cy_left + c.y() * inv;
  return {{rig.cx_left + c.x() * inv, v}, {rig.cx_right + (c.x() - rig.baseline) * inv, v}};
}

PixelPair project(const WorldPoint& w, const StereoRig& rig) { return project(rig.to_camera(w), rig); }

double disparity(const PixelPair& p, const StereoRig& rig) {
  return (p.left.u - rig.cx_left) - (p.right.u - rig.cx_right);
}

CameraPosition triangulate(const PixelPair& p, const StereoRig& rig) {
  const double d = disparity(p, rig);
  if (!(d > 0.0)) throw InvalidArgument("non-positive disparity: point at or beyond infinity");
  const double z = rig.focal_px * rig.baseline / d;
  const double scale = z / rig.focal_px;
  const double v = 0.5 * (p.left.v + p.right.v);
  return CameraPosition((p.left.u - rig.cx_left) * scale, (v - rig.cy_left) * scale, z);
}

double OcclusionModel::visibility(const Orientation& phi) const {
  if (!enabled) return 1.0;
  const double d = std::abs(phi.pitch - nominal_pitch);
  return p_max / (1.0 + std::exp((d - midpoint) / slope));
}

OcclusionModel OcclusionModel::none(double pixel_sigma) {
  OcclusionModel m;
  m.enabled = false;
  m.spurious_rate = 0.0;
  m.pixel_sigma = pixel_sigma;
  return m;
}

Detection detect_marker(const WorldPoint& w, const Orientation& phi, const StereoRig& rig,
                        const OcclusionModel& occlusion, std::uint64_t seed) {
  Rng rng = make_rng(seed);
  const PixelPair truth = project(w, rig);
  const double p_vis = occlusion.visibility(phi);
  auto observe = [&](const Pixel& px) -> std::optional<Pixel> {
    // Fixed draw count per camera keeps the stream aligned across outcomes.
    const double seen = uniform(rng, 0.0, 1.0);
    const double spurious = uniform(rng, 0.0, 1.0);
    const double su = uniform(rng, 0.0, rig.image_width);
    const double sv = uniform(rng, 0.0, rig.image_height);
    const double nu = gaussian(rng, occlusion.pixel_sigma);
    const double nv = gaussian(rng, occlusion.pixel_sigma);
    if (seen >= p_vis) return std::nullopt;
    if (spurious < occlusion.spurious_rate) return Pixel{su, sv};
    return Pixel{px.u + nu, px.v + nv};
  };
  Detection det;
  det.left = observe(truth.left);
  det.right = observe(truth.right);
  return det;
}

CameraPosition locate_target(const WorldPoint& w, const StereoRig& rig, double pixel_sigma,
                             std::uint64_t seed) {
  PixelPair p = project(w, rig);
  if (pixel_sigma > 0.0) {
    Rng rng = make_rng(seed);
    p.left.u += gaussian(rng, pixel_sigma);
    p.left.v += gaussian(rng, pixel_sigma);
    p.right.u += gaussian(rng, pixel_sigma);
    p.right.v += gaussian(rng, pixel_sigma);
  }
  return triangulate(p, rig);
}

}  // namespace cfcal::stereocam
