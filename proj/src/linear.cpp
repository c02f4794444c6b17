#include "cfcal/regress/linear.hpp"

#include "cfcal/errors.hpp"

#include <Eigen/Geometry>
#include <Eigen/QR>

#include <numbers>

namespace cfcal::regress {

Eigen::Vector4d euler_to_quaternion(const Orientation& phi) {
  constexpr double deg = std::numbers::pi / 180.0;
  const Eigen::Quaterniond q = Eigen::AngleAxisd(phi.yaw * deg, Eigen::Vector3d::UnitZ()) *
                               Eigen::AngleAxisd(phi.pitch * deg, Eigen::Vector3d::UnitY()) *
                               Eigen::AngleAxisd(phi.roll * deg, Eigen::Vector3d::UnitX());
  return {q.w(), q.x(), q.y(), q.z()};
}

Eigen::VectorXd linear_features(const CameraPosition& c, const Orientation& phi, AngleRepr repr) {
  if (repr == AngleRepr::Euler) {
    Eigen::VectorXd f(6);
    f << c.x(), c.y(), c.z(), phi.yaw, phi.pitch, phi.roll;
    return f;
  }
  const Eigen::Vector4d q = euler_to_quaternion(phi);
  Eigen::VectorXd f(7);
  f << c.x(), c.y(), c.z(), q[0], q[1], q[2], q[3];
  return f;
}

BasePosition LinearModel::predict(const CameraPosition& c, const Orientation& phi) const {
  const Eigen::VectorXd f = linear_features(c, phi, repr);
  const Eigen::Index p = f.size();
  return BasePosition(coef.topRows(p).transpose() * f + coef.row(p).transpose());
}

LinearModel fit_linear(const phase1::CoarseDataset& ds, AngleRepr repr) {
  const Eigen::Index p = repr == AngleRepr::Euler ? 6 : 7;
  const auto n = static_cast<Eigen::Index>(ds.size());
  if (n < p + 1) throw DegenerateInput("fit_linear: need at least features + 1 rows");
  Eigen::MatrixXd X(n, p + 1);
  Eigen::MatrixXd Y(n, 3);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& s = ds.samples[static_cast<std::size_t>(i)];
    X.row(i).head(p) = linear_features(s.camera, s.orientation, repr).transpose();
    X(i, p) = 1.0;
    Y.row(i) = s.target.v.transpose();
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
  qr.setThreshold(1e-10);
  if (qr.rank() < p + 1) throw DegenerateInput("fit_linear: rank-deficient design matrix");
  LinearModel m;
  m.repr = repr;
  m.coef = qr.solve(Y);
  return m;
}

}  // namespace cfcal::regress
