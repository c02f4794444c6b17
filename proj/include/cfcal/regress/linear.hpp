#pragma once

#include "cfcal/phase1.hpp"
#include "cfcal/types.hpp"

#include <Eigen/Dense>

namespace cfcal::regress {

enum class AngleRepr { Euler, Quaternion };

// Unit quaternion (w, x, y, z) of the intrinsic yaw(z) -> pitch(y) -> roll(x)
// rotation, angles in degrees.
Eigen::Vector4d euler_to_quaternion(const Orientation& phi);

// Position followed by the angle features: 6 for Euler, 7 for quaternion.
Eigen::VectorXd linear_features(const CameraPosition& c, const Orientation& phi, AngleRepr repr);

struct LinearModel {
  AngleRepr repr{AngleRepr::Euler};
  Eigen::MatrixXd coef;  // (features + 1) x 3, last row is the intercept

  BasePosition predict(const CameraPosition& c, const Orientation& phi) const;
};

// Ordinary least squares. Throws DegenerateInput on a rank-deficient design.
LinearModel fit_linear(const phase1::CoarseDataset& ds, AngleRepr repr);

}  // namespace cfcal::regress
