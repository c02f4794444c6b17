#include "cfcal/evalbench.hpp"

#include "cfcal/errors.hpp"
#include "cfcal/kvfile.hpp"
#include "cfcal/parallel.hpp"
#include "cfcal/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

namespace cfcal::evalbench {

double pixel_error(const WorldPoint& reached, const WorldPoint& target, const stereocam::StereoRig& rig) {
  const auto a = stereocam::project(reached, rig).left;
  const auto b = stereocam::project(target, rig).left;
  return std::hypot(a.u - b.u, a.v - b.v);
}

double mm_from_px(double e, const stereocam::StereoRig& rig) {
  if (e < 0.0) throw InvalidArgument("mm_from_px: negative pixel error");
  return e / rig.px_per_mm();
}

YawSetting YawSetting::fixed(int tag) {
  if (!is_yaw_tag(tag)) throw InvalidArgument("yaw setting " + std::to_string(tag) + " is not a discretized yaw");
  return {tag};
}

std::string YawSetting::label() const { return tag ? std::to_string(*tag) : "random"; }

std::vector<YawSetting> all_yaw_settings() {
  std::vector<YawSetting> out;
  for (int t : kYawTags) out.push_back(YawSetting::fixed(t));
  out.push_back(YawSetting::random());
  return out;
}

BenchStats summarize(std::vector<double> errors) {
  BenchStats s;
  s.n = errors.size();
  if (errors.empty()) return s;
  const double n = static_cast<double>(s.n);
  s.mean = std::accumulate(errors.begin(), errors.end(), 0.0) / n;
  if (s.n > 1) {
    double ss = 0.0;
    for (double e : errors) ss += (e - s.mean) * (e - s.mean);
    s.se = std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
  }
  std::sort(errors.begin(), errors.end());
  const std::size_t mid = s.n / 2;
  s.median = s.n % 2 ? errors[mid] : 0.5 * (errors[mid - 1] + errors[mid]);
  s.min = errors.front();
  s.max = errors.back();
  return s;
}

BenchRow benchmark(const std::string& mapping, const Predictor& predictor, const phase2::CalibrationGrid& grid,
                   const YawSetting& setting, const BenchSetup& setup, std::uint64_t seed) {
  BenchRow row;
  row.mapping = mapping;
  row.yaw = setting.label();
  row.errors.reserve(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const std::uint64_t s = derive_seed(seed, Stream::Bench, i);
    Orientation phi;
    if (setting.tag) {
      phi = setup.pitch_roll.orientation(*setting.tag);
    } else {
      Rng rng = make_rng(derive_seed(s, Stream::Trajectory));
      const double yaw = uniform(rng, kYawRange.lo, kYawRange.hi);
      phi = setup.pitch_roll.orientation(nearest_yaw_tag(yaw));
      phi.yaw = yaw;
    }
    const WorldPoint& target = grid.centers[i];
    const CameraPosition x_c =
        stereocam::locate_target(target, setup.rig, setup.target_pixel_sigma, derive_seed(s, Stream::Detect));
    const BasePosition x_b = predictor(x_c, phi);
    if (!x_b.finite()) throw NumericFailure(mapping + ": non-finite command for circle " + std::to_string(i));
    if (!setup.arm.workspace.in_envelope(x_b)) {
      ++row.refused;
      continue;
    }
    const WorldPoint reached = worldsim::execute_command(x_b, phi, setup.arm, derive_seed(s, Stream::Execute));
    row.errors.push_back(pixel_error(reached, target, setup.rig));
  }
  row.stats = summarize(row.errors);
  return row;
}

BenchTable full_table(const std::vector<std::pair<std::string, Predictor>>& predictors,
                      const phase2::CalibrationGrid& grid, const BenchSetup& setup, std::uint64_t seed,
                      std::size_t threads) {
  const auto settings = all_yaw_settings();
  BenchTable t;
  t.rows.resize(predictors.size() * settings.size());
  parallel_for(t.rows.size(), threads, [&](std::size_t job) {
    const auto& [name, p] = predictors[job / settings.size()];
    const std::size_t k = job % settings.size();
    t.rows[job] = benchmark(name, p, grid, settings[k], setup, derive_seed(seed, Stream::Bench, k));
  });
  for (std::size_t m = 0; m < predictors.size(); ++m) {
    double sum = 0.0;
    for (std::size_t k = 0; k < settings.size(); ++k) sum += t.rows[m * settings.size() + k].stats.mean;
    const double px = sum / static_cast<double>(settings.size());
    t.summary.push_back({predictors[m].first, px, mm_from_px(px, setup.rig)});
  }
  return t;
}

const MappingSummary& BenchTable::mapping(const std::string& name) const {
  for (const auto& s : summary)
    if (s.mapping == name) return s;
  throw InvalidArgument("benchmark has no mapping '" + name + "'");
}

std::string BenchTable::csv(const stereocam::StereoRig& rig) const {
  std::ostringstream os;
  os << "mapping,yaw,mean_px,se_px,median_px,min_px,max_px,n,refused,mean_mm\n";
  for (const auto& r : rows) {
    const auto& s = r.stats;
    os << r.mapping << ',' << r.yaw << ',' << format_double(s.mean) << ',' << format_double(s.se) << ','
       << format_double(s.median) << ',' << format_double(s.min) << ',' << format_double(s.max) << ','
       << s.n << ',' << r.refused << ',' << format_double(mm_from_px(s.mean, rig)) << '\n';
  }
  return os.str();
}

std::string BenchTable::text(const stereocam::StereoRig& rig) const {
  std::ostringstream os;
  char buf[160];
  std::snprintf(buf, sizeof buf, "%-8s %-7s %16s %7s %18s %8s\n", "Mapping", "Yaw", "Mean +/- SE", "Med.",
                "(Min, Max)", "mm");
  os << buf;
  for (const auto& r : rows) {
    const auto& s = r.stats;
    char mse[32], mm[40];
    std::snprintf(mse, sizeof mse, "%.1f +/- %.1f", s.mean, s.se);
    std::snprintf(mm, sizeof mm, "(%.1f, %.1f)", s.min, s.max);
    std::snprintf(buf, sizeof buf, "%-8s %-7s %16s %7.1f %18s %8.2f\n", r.mapping.c_str(), r.yaw.c_str(), mse,
                  s.median, mm, mm_from_px(s.mean, rig));
    os << buf;
  }
  std::size_t refused = 0;
  for (const auto& r : rows) refused += r.refused;
  if (refused) os << refused << " commands refused by the safety envelope\n";
  os << '\n';
  std::snprintf(buf, sizeof buf, "%-8s %10s %8s\n", "Mapping", "avg px", "avg mm");
  os << buf;
  for (const auto& m : summary) {
    std::snprintf(buf, sizeof buf, "%-8s %10.2f %8.2f\n", m.mapping.c_str(), m.mean_px, m.mean_mm);
    os << buf;
  }
  return os.str();
}

}  // namespace cfcal::evalbench
