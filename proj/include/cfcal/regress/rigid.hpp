#pragma once

#include "cfcal/phase1.hpp"
#include "cfcal/types.hpp"

#include <array>
#include <span>

namespace cfcal::regress {

struct RigidTransform {
  Mat3 R{Mat3::Identity()};
  Vec3 t{Vec3::Zero()};

  Vec3 apply(const Vec3& x) const { return R * x + t; }
  BasePosition operator()(const CameraPosition& c) const { return BasePosition(apply(c.v)); }
};

// Least-squares rotation and translation taking src onto dst (Kabsch/Umeyama
// without scale). A reflection in the SVD solution is corrected by flipping the
// singular vector of the smallest singular value. Throws DegenerateInput for
// fewer than three points or collinear/coincident source points.
RigidTransform fit_rbt(std::span<const Vec3> src, std::span<const Vec3> dst);

double rbt_loss(const RigidTransform& T, std::span<const Vec3> src, std::span<const Vec3> dst);

// One rigid fit per discretized yaw; each sample joins the group of its
// nearest yaw tag and orientation is otherwise ignored.
struct PerYawRigid {
  std::array<RigidTransform, 5> transforms{};

  BasePosition predict(const CameraPosition& c, const Orientation& phi) const;
};

PerYawRigid fit_rbt_per_yaw(const phase1::CoarseDataset& ds);

}  // namespace cfcal::regress
