#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstddef>
#include <utility>

namespace cfcal {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

// Positions carry their frame in the type so a camera-frame point can never be
// commanded as a base-frame one by accident. All coordinates are millimetres.
template <class Frame>
struct Point3 {
  Vec3 v{Vec3::Zero()};

  Point3() = default;
  explicit Point3(const Vec3& x) : v(x) {}
  Point3(double a, double b, double c) : v(a, b, c) {}

  double x() const { return v.x(); }
  double y() const { return v.y(); }
  double z() const { return v.z(); }
  bool finite() const { return v.allFinite(); }

  friend bool operator==(const Point3& a, const Point3& b) { return a.v == b.v; }
};

struct BaseFrame {};
struct WorldFrame {};
struct CameraFrame {};

using BasePosition = Point3<BaseFrame>;
using WorldPoint = Point3<WorldFrame>;
using CameraPosition = Point3<CameraFrame>;

struct Interval {
  double lo{0.0};
  double hi{0.0};

  bool contains(double x) const { return x >= lo && x <= hi; }
  double width() const { return hi - lo; }
  double mid() const { return 0.5 * (lo + hi); }
  bool valid() const;
};

// End-effector orientation in degrees.
struct Orientation {
  double yaw{0.0};
  double pitch{0.0};
  double roll{0.0};

  friend bool operator==(const Orientation&, const Orientation&) = default;
};

// Ranges the collection routine samples orientations from.
inline constexpr Interval kYawRange{-90.0, 90.0};
inline constexpr Interval kPitchRange{-15.0, 25.0};
inline constexpr Interval kRollRange{-180.0, -150.0};

bool in_collection_ranges(const Orientation& phi);

// Tool-to-base rotation: intrinsic yaw (z), then pitch (y), then roll (x).
Mat3 rotation_matrix(const Orientation& phi);

inline constexpr std::array<int, 5> kYawTags{-90, -45, 0, 45, 90};

// Nearest discretized yaw. Exact midpoints (±22.5, ±67.5) go toward zero.
int nearest_yaw_tag(double yaw_deg);
bool is_yaw_tag(int tag);
std::size_t yaw_index(int tag);

// Hand-tuned (pitch, roll) used at each discretized yaw.
struct PitchRollTable {
  std::array<std::pair<double, double>, 5> entries{{
      {8.0, -168.0},   // -90
      {6.0, -160.0},   // -45
      {5.0, -165.0},   // 0
      {4.0, -158.0},   // 45
      {10.0, -162.0},  // 90
  }};

  std::pair<double, double> lookup(int tag) const;
  Orientation orientation(int tag) const;
  void validate() const;
};

}  // namespace cfcal
