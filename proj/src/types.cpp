#include "cfcal/types.hpp"

#include "cfcal/errors.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace cfcal {

bool Interval::valid() const { return std::isfinite(lo) && std::isfinite(hi) && lo < hi; }

bool in_collection_ranges(const Orientation& phi) {
  return kYawRange.contains(phi.yaw) && kPitchRange.contains(phi.pitch) &&
         kRollRange.contains(phi.roll);
}

Mat3 rotation_matrix(const Orientation& phi) {
  constexpr double deg = std::numbers::pi / 180.0;
  return (Eigen::AngleAxisd(phi.yaw * deg, Vec3::UnitZ()) * Eigen::AngleAxisd(phi.pitch * deg, Vec3::UnitY()) *
          Eigen::AngleAxisd(phi.roll * deg, Vec3::UnitX()))
      .toRotationMatrix();
}

int nearest_yaw_tag(double yaw_deg) {
  int best = 0;
  double best_dist = std::abs(yaw_deg);
  for (int tag : kYawTags) {
    const double d = std::abs(yaw_deg - tag);
    // Strictly closer wins; on a tie keep the tag of smaller magnitude.
    if (d < best_dist || (d == best_dist && std::abs(tag) < std::abs(best))) {
      best = tag;
      best_dist = d;
    }
  }
  return best;
}

bool is_yaw_tag(int tag) {
  for (int t : kYawTags)
    if (t == tag) return true;
  return false;
}

std::size_t yaw_index(int tag) {
  for (std::size_t i = 0; i < kYawTags.size(); ++i)
    if (kYawTags[i] == tag) return i;
  throw InvalidArgument("unknown yaw tag " + std::to_string(tag));
}

std::pair<double, double> PitchRollTable::lookup(int tag) const { return entries[yaw_index(tag)]; }

Orientation PitchRollTable::orientation(int tag) const {
  const auto [pitch, roll] = lookup(tag);
  return {static_cast<double>(tag), pitch, roll};
}

void PitchRollTable::validate() const {
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto [pitch, roll] = entries[i];
    if (!kPitchRange.contains(pitch) || !kRollRange.contains(roll))
      throw InvalidArgument("pitch/roll for yaw " + std::to_string(kYawTags[i]) +
                            " outside collection ranges");
  }
}

}  // namespace cfcal
