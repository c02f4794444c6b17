#include "cfcal/regress/rigid.hpp"

#include "cfcal/errors.hpp"

#include <Eigen/SVD>

#include <string>
#include <vector>

namespace cfcal::regress {

RigidTransform fit_rbt(std::span<const Vec3> src, std::span<const Vec3> dst) {
  if (src.size() != dst.size()) throw InvalidArgument("fit_rbt: point sets differ in size");
  if (src.size() < 3) throw DegenerateInput("fit_rbt: need at least three point pairs");
  const double n = static_cast<double>(src.size());
  Vec3 mu_src = Vec3::Zero(), mu_dst = Vec3::Zero();
  for (std::size_t i = 0; i < src.size(); ++i) {
    mu_src += src[i];
    mu_dst += dst[i];
  }
  mu_src /= n;
  mu_dst /= n;

  Mat3 H = Mat3::Zero();  // sum of (dst_i - mu_dst)(src_i - mu_src)^T
  Mat3 S = Mat3::Zero();
  for (std::size_t i = 0; i < src.size(); ++i) {
    const Vec3 a = src[i] - mu_src;
    H += (dst[i] - mu_dst) * a.transpose();
    S += a * a.transpose();
  }
  // Source spread must span at least a plane.
  Eigen::SelfAdjointEigenSolver<Mat3> spread(S);
  const auto ev = spread.eigenvalues();  // ascending
  if (!(ev[2] > 0.0) || ev[1] <= 1e-12 * ev[2])
    throw DegenerateInput("fit_rbt: source points are collinear or coincident");

  Eigen::JacobiSVD<Mat3> svd(H, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Mat3& U = svd.matrixU();
  const Mat3& V = svd.matrixV();
  Mat3 D = Mat3::Identity();
  if ((U * V.transpose()).determinant() < 0.0) D(2, 2) = -1.0;

  RigidTransform T;
  T.R = U * D * V.transpose();
  T.t = mu_dst - T.R * mu_src;
  return T;
}

double rbt_loss(const RigidTransform& T, std::span<const Vec3> src, std::span<const Vec3> dst) {
  double loss = 0.0;
  for (std::size_t i = 0; i < src.size(); ++i) loss += (T.apply(src[i]) - dst[i]).squaredNorm();
  return loss;
}

BasePosition PerYawRigid::predict(const CameraPosition& c, const Orientation& phi) const {
  return transforms[yaw_index(nearest_yaw_tag(phi.yaw))](c);
}

PerYawRigid fit_rbt_per_yaw(const phase1::CoarseDataset& ds) {
  std::array<std::vector<Vec3>, 5> src, dst;
  for (const auto& s : ds.samples) {
    const auto g = yaw_index(nearest_yaw_tag(s.orientation.yaw));
    src[g].push_back(s.camera.v);
    dst[g].push_back(s.target.v);
  }
  PerYawRigid out;
  for (std::size_t g = 0; g < 5; ++g) {
    try {
      out.transforms[g] = fit_rbt(src[g], dst[g]);
    } catch (const DegenerateInput& e) {
      throw DegenerateInput("yaw group " + std::to_string(kYawTags[g]) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace cfcal::regress
