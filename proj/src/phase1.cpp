#include "cfcal/phase1.hpp"

#include "cfcal/errors.hpp"
#include "cfcal/kvfile.hpp"
#include "cfcal/parallel.hpp"
#include "cfcal/rng.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace cfcal::phase1 {

using stereocam::PixelPair;
using worldsim::Workspace;

namespace {

Orientation random_orientation(Rng& rng) {
  const double yaw = uniform(rng, kYawRange.lo, kYawRange.hi);
  const double pitch = uniform(rng, kPitchRange.lo, kPitchRange.hi);
  const double roll = uniform(rng, kRollRange.lo, kRollRange.hi);
  return {yaw, pitch, roll};
}

}  // namespace

std::vector<Waypoint> gen_segment(const BasePosition& start, const BasePosition& target,
                                  const Orientation& hold, int trajectory, std::uint64_t seed,
                                  const TrajectoryOptions& opts) {
  if (!(opts.step_mm > 0.0)) throw InvalidArgument("trajectory step must be positive");
  const Vec3 delta = target.v - start.v;
  const double dist = delta.norm();
  // Guard against ceil(10.000000000000002) = 11 from rounding in the distance.
  const int pauses = dist <= 0.0 ? 0 : static_cast<int>(std::ceil(dist / opts.step_mm - 1e-9));
  Rng rng = make_rng(seed);
  std::vector<Waypoint> out;
  out.reserve(static_cast<std::size_t>(pauses) * (1 + opts.rotations_per_pause));
  for (int k = 1; k <= pauses; ++k) {
    const BasePosition p(start.v + delta * (static_cast<double>(k) / pauses));
    out.push_back({p, hold, trajectory, false});
    for (int r = 0; r < opts.rotations_per_pause; ++r)
      out.push_back({p, random_orientation(rng), trajectory, true});
  }
  return out;
}

std::vector<Waypoint> gen_trajectory(std::uint64_t seed, const Workspace& ws, int trajectory,
                                     const TrajectoryOptions& opts) {
  ws.validate();
  Rng rng = make_rng(derive_seed(seed, Stream::Trajectory));
  const int corner = static_cast<int>(std::uniform_int_distribution<int>(0, 3)(rng));
  const BasePosition start((corner & 1) ? ws.x.hi : ws.x.lo, (corner & 2) ? ws.y.hi : ws.y.lo, ws.z.lo);
  const BasePosition target(uniform(rng, ws.x.lo, ws.x.hi), uniform(rng, ws.y.lo, ws.y.hi),
                            uniform(rng, ws.z.lo, ws.z.hi));
  const Orientation hold = random_orientation(rng);
  return gen_segment(start, target, hold, trajectory, rng(), opts);
}

std::vector<RawRecord> collect_waypoints(std::span<const Waypoint> waypoints, const worldsim::Arm& arm,
                                         const Sensors& sensors, std::uint64_t seed) {
  std::vector<RawRecord> out;
  out.reserve(waypoints.size());
  for (std::size_t i = 0; i < waypoints.size(); ++i) {
    const auto& wp = waypoints[i];
    const WorldPoint w =
        worldsim::execute_command(wp.position, wp.orientation, arm, derive_seed(seed, Stream::Execute, i));
    const WorldPoint marker(w.v + arm.offset.rotation * rotation_matrix(wp.orientation) * sensors.marker_offset);
    out.push_back({wp, stereocam::detect_marker(marker, wp.orientation, sensors.rig, sensors.occlusion,
                                                derive_seed(seed, Stream::Detect, i))});
  }
  return out;
}

std::vector<RawRecord> collect(int n_traj, const worldsim::Arm& arm, const Sensors& sensors,
                               std::uint64_t seed, const TrajectoryOptions& opts, std::size_t threads) {
  if (n_traj < 1) throw InvalidArgument("need at least one trajectory");
  std::vector<std::vector<RawRecord>> per_traj(static_cast<std::size_t>(n_traj));
  parallel_for(per_traj.size(), threads, [&](std::size_t t) {
    const std::uint64_t traj_seed = derive_seed(seed, Stream::Phase1, t);
    const auto wps = gen_trajectory(traj_seed, arm.workspace, static_cast<int>(t), opts);
    per_traj[t] = collect_waypoints(wps, arm, sensors, traj_seed);
  });
  std::vector<RawRecord> out;
  for (auto& recs : per_traj) out.insert(out.end(), recs.begin(), recs.end());
  return out;
}

CoarseDataset CoarseDataset::subset(std::span<const std::size_t> rows) const {
  CoarseDataset out;
  out.provenance = provenance;
  out.samples.reserve(rows.size());
  for (auto r : rows) out.samples.push_back(samples.at(r));
  out.provenance.cleaned_count = out.samples.size();
  return out;
}

CoarseDataset clean(std::span<const RawRecord> raw, const stereocam::StereoRig& rig, const Workspace& ws,
                    const CleanOptions& opts, std::uint64_t seed) {
  CoarseDataset ds;
  ds.provenance.raw_count = raw.size();
  ds.provenance.seed = seed;
  std::set<int> trajectories;
  std::set<std::array<double, 9>> seen;
  for (const auto& rec : raw) {
    trajectories.insert(rec.waypoint.trajectory);
    if (!rec.detection.both()) continue;
    const PixelPair pair = rec.detection.pair();
    if (!(stereocam::disparity(pair, rig) > 0.0)) continue;
    const CameraPosition c = stereocam::triangulate(pair, rig);
    // Each camera back-projected at the stereo depth; the rays agree in x by
    // construction, so their disagreement is the row mismatch.
    const double scale = c.z() / rig.focal_px;
    const double y_left = (pair.left.v - rig.cy_left) * scale;
    const double y_right = (pair.right.v - rig.cy_right) * scale;
    const double mismatch = 0.5 * std::abs(y_left - y_right);
    if (mismatch > opts.consistency_tol) continue;
    const WorldPoint w = rig.to_world(c);
    if (!ws.in_envelope(BasePosition(w.v))) continue;

    Sample s{c, rec.waypoint.orientation, rec.waypoint.position};
    std::array<double, 9> key{};
    const auto in = s.input();
    std::copy(in.begin(), in.end(), key.begin());
    key[6] = s.target.x();
    key[7] = s.target.y();
    key[8] = s.target.z();
    if (!seen.insert(key).second) continue;
    ds.samples.push_back(s);
  }
  ds.provenance.trajectories.assign(trajectories.begin(), trajectories.end());
  ds.provenance.cleaned_count = ds.samples.size();
  if (ds.samples.empty()) throw EmptyDataset("no record survived cleaning; Phase I cannot proceed");
  return ds;
}

void save_dataset(const CoarseDataset& ds, const std::string& csv_path, const std::string& provenance_path) {
  std::ofstream out(csv_path);
  if (!out) throw Error("cannot write " + csv_path);
  out << "c_x,c_y,c_z,phi_y,phi_p,phi_r,b_x,b_y,b_z\n";
  for (const auto& s : ds.samples) {
    const auto in = s.input();
    for (double v : in) out << format_double(v) << ',';
    out << format_double(s.target.x()) << ',' << format_double(s.target.y()) << ','
        << format_double(s.target.z()) << '\n';
  }
  KvDocument prov;
  prov.set("", "format", "cfcal-coarse-dataset 1");
  prov.set("", "rows", std::to_string(ds.samples.size()));
  prov.set("", "raw_count", std::to_string(ds.provenance.raw_count));
  prov.set("", "cleaned_count", std::to_string(ds.provenance.cleaned_count));
  prov.set("", "seed", std::to_string(ds.provenance.seed));
  std::string ids;
  for (int t : ds.provenance.trajectories) ids += (ids.empty() ? "" : " ") + std::to_string(t);
  prov.set("", "trajectories", ids);
  prov.save(provenance_path);
}

CoarseDataset load_dataset(const std::string& csv_path, const std::string& provenance_path) {
  using Kind = FormatError::Kind;
  KvDocument prov;
  try {
    prov = KvDocument::load(provenance_path);
  } catch (const ConfigError& e) {
    throw FormatError(Kind::Malformed, provenance_path + ": " + e.what());
  }
  const auto* format = prov.find("", "format");
  if (!format) throw FormatError(Kind::Malformed, provenance_path + ": missing format line");
  if (format->value != "cfcal-coarse-dataset 1")
    throw FormatError(Kind::Version, provenance_path + ": unsupported format '" + format->value + "'");
  auto field = [&](const char* key) -> std::uint64_t {
    const auto* e = prov.find("", key);
    if (!e) throw FormatError(Kind::Malformed, provenance_path + ": missing " + std::string(key));
    try {
      return parse_u64(e->value, e->line);
    } catch (const ConfigError&) {
      throw FormatError(Kind::NonNumeric, provenance_path + ": non-numeric " + std::string(key));
    }
  };
  CoarseDataset ds;
  const std::size_t rows = field("rows");
  ds.provenance.raw_count = field("raw_count");
  ds.provenance.cleaned_count = field("cleaned_count");
  ds.provenance.seed = field("seed");
  if (const auto* e = prov.find("", "trajectories")) {
    std::istringstream ss(e->value);
    int t;
    while (ss >> t) ds.provenance.trajectories.push_back(t);
  }

  std::ifstream in(csv_path);
  if (!in) throw FormatError(Kind::Truncated, csv_path + ": cannot open");
  std::string line;
  if (!std::getline(in, line)) throw FormatError(Kind::Truncated, csv_path + ": empty file");
  if (trim(line) != "c_x,c_y,c_z,phi_y,phi_p,phi_r,b_x,b_y,b_z")
    throw FormatError(Kind::Malformed, csv_path + ": unexpected header");
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    std::vector<double> vals;
    std::stringstream ss(line);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      try {
        vals.push_back(parse_double(tok, lineno));
      } catch (const ConfigError&) {
        throw FormatError(Kind::NonNumeric,
                          csv_path + ": line " + std::to_string(lineno) + ": non-numeric field '" + tok + "'");
      }
    }
    if (vals.size() != 9)
      throw FormatError(in.eof() ? Kind::Truncated : Kind::Malformed,
                        csv_path + ": line " + std::to_string(lineno) + ": expected 9 columns");
    ds.samples.push_back({CameraPosition(vals[0], vals[1], vals[2]), Orientation{vals[3], vals[4], vals[5]},
                          BasePosition(vals[6], vals[7], vals[8])});
  }
  if (ds.samples.size() != rows)
    throw FormatError(Kind::Truncated, csv_path + ": expected " + std::to_string(rows) + " rows, found " +
                                           std::to_string(ds.samples.size()));
  return ds;
}

}  // namespace cfcal::phase1
