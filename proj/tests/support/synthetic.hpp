#pragma once

#include "cfcal/phase1.hpp"
#include "cfcal/rng.hpp"

#include <Eigen/Dense>

#include <functional>

namespace cfcal::testing {

// Dataset with uniform camera positions over a 75 mm box at 190 mm depth,
// collection-range orientations and targets from `f`.
inline phase1::CoarseDataset synthetic_dataset(
    std::size_t n, std::uint64_t seed,
    const std::function<Vec3(const CameraPosition&, const Orientation&)>& f, double noise = 0.0) {
  Rng rng = make_rng(seed);
  phase1::CoarseDataset ds;
  for (std::size_t i = 0; i < n; ++i) {
    const CameraPosition c(uniform(rng, -37.5, 37.5), uniform(rng, -37.5, 37.5), uniform(rng, 180.0, 190.0));
    const Orientation phi{uniform(rng, kYawRange.lo, kYawRange.hi), uniform(rng, kPitchRange.lo, kPitchRange.hi),
                          uniform(rng, kRollRange.lo, kRollRange.hi)};
    Vec3 t = f(c, phi);
    for (int k = 0; k < 3; ++k) t[k] += gaussian(rng, noise);
    ds.samples.push_back({c, phi, BasePosition(t)});
  }
  ds.provenance.raw_count = ds.provenance.cleaned_count = n;
  ds.provenance.seed = seed;
  return ds;
}

// Affine in the six inputs.
inline Vec3 affine_target(const CameraPosition& c, const Orientation& phi) {
  return Vec3(0.9 * c.x() + 0.1 * c.y() + 0.02 * phi.yaw + 30.0, -1.0 * c.y() + 0.03 * phi.pitch + 40.0,
              -c.z() + 0.01 * phi.roll + 192.0);
}

}  // namespace cfcal::testing
