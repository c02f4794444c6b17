#include "cfcal/phase2.hpp"

#include "cfcal/errors.hpp"
#include "cfcal/kvfile.hpp"
#include "cfcal/parallel.hpp"
#include "cfcal/rng.hpp"

#include <fstream>
#include <sstream>

namespace cfcal::phase2 {

CalibrationGrid make_grid(const worldsim::Workspace& ws, const GridOptions& opts) {
  if (opts.rows < 1 || opts.cols < 1) throw InvalidArgument("grid needs at least one row and column");
  const double wx = ws.x.width() - 2.0 * opts.margin;
  const double wy = ws.y.width() - 2.0 * opts.margin;
  if (wx < 0.0 || wy < 0.0) throw InvalidArgument("grid margin exceeds the workspace");
  const double dx = opts.cols > 1 ? wx / (opts.cols - 1) : 0.0;
  const double dy = opts.rows > 1 ? wy / (opts.rows - 1) : 0.0;
  CalibrationGrid g;
  g.radius = opts.radius;
  for (int r = 0; r < opts.rows; ++r)
    for (int c = 0; c < opts.cols; ++c)
      g.centers.emplace_back(ws.x.lo + opts.margin + c * dx, ws.y.lo + opts.margin + r * dy, ws.z.lo);
  return g;
}

void validate_grid(const CalibrationGrid& grid, const worldsim::Workspace& ws) {
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!ws.contains(BasePosition(grid.centers[i].v)))
      throw InvalidArgument("grid circle " + std::to_string(i) + " lies outside the workspace");
    for (std::size_t j = 0; j < i; ++j)
      if ((grid.centers[i].v - grid.centers[j].v).norm() < 8.0)
        throw InvalidArgument("grid circles " + std::to_string(j) + " and " + std::to_string(i) +
                              " are closer than 8 mm");
  }
}

Vec3 correction_oracle(const WorldPoint& reached, const WorldPoint& target, const HandModel& hand,
                       const worldsim::FrameOffset& offset, std::uint64_t seed) {
  Rng rng = make_rng(seed);
  Vec3 d = target.v - reached.v;
  d.x() += gaussian(rng, hand.sigma);
  d.y() += gaussian(rng, hand.sigma);
  d.z() += gaussian(rng, hand.sigma_z);
  return offset.world_vector_to_base(d);
}

std::array<FineDataset, 5> collect_fine(const Predictor& coarse, const CalibrationGrid& grid,
                                        const FineSetup& setup, std::uint64_t seed, std::size_t threads) {
  const std::size_t nc = grid.size();
  struct Visit {
    bool ok{false};
    ResidualSample sample;
  };
  std::vector<Visit> visits(kYawTags.size() * nc);
  parallel_for(visits.size(), threads, [&](std::size_t job) {
    const int tag = kYawTags[job / nc];
    const std::size_t i = job % nc;
    const std::uint64_t s = derive_seed(seed, Stream::Fine, job);
    const Orientation phi = setup.pitch_roll.orientation(tag);
    const WorldPoint& center = grid.centers[i];
    const CameraPosition x_c =
        stereocam::locate_target(center, setup.rig, setup.target_pixel_sigma, derive_seed(s, Stream::Detect));
    const BasePosition x_b = coarse(x_c, phi);
    if (!x_b.finite() || !setup.arm.workspace.in_envelope(x_b)) return;
    const WorldPoint reached = worldsim::execute_command(x_b, phi, setup.arm, derive_seed(s, Stream::Execute));
    const Vec3 eps = correction_oracle(reached, center, setup.hand, setup.arm.offset, derive_seed(s, Stream::Hand));
    if (!(eps.norm() <= kMaxCorrection)) return;
    visits[job] = {true, {x_b, eps, static_cast<int>(i)}};
  });

  std::array<FineDataset, 5> out;
  for (std::size_t g = 0; g < kYawTags.size(); ++g) {
    out[g].yaw = kYawTags[g];
    for (std::size_t i = 0; i < nc; ++i) {
      const auto& v = visits[g * nc + i];
      if (v.ok)
        out[g].samples.push_back(v.sample);
      else
        ++out[g].failed;
    }
  }
  return out;
}

double mean_correction(std::span<const FineDataset> datasets) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& ds : datasets)
    for (const auto& s : ds.samples) {
      sum += s.epsilon.norm();
      ++n;
    }
  if (n == 0) throw EmptyDataset("mean_correction: no residual samples");
  return sum / static_cast<double>(n);
}

std::map<int, regress::ForestModel> train_residual_forests(std::span<const FineDataset> datasets,
                                                           const regress::ForestOptions& opts) {
  std::map<int, const FineDataset*> by_yaw;
  for (const auto& ds : datasets) {
    if (!is_yaw_tag(ds.yaw)) throw InvalidArgument("fine dataset has yaw " + std::to_string(ds.yaw));
    by_yaw[ds.yaw] = &ds;
  }
  std::map<int, regress::ForestModel> out;
  for (std::size_t g = 0; g < kYawTags.size(); ++g) {
    const int tag = kYawTags[g];
    const auto it = by_yaw.find(tag);
    if (it == by_yaw.end()) throw InvalidArgument("missing fine dataset for yaw " + std::to_string(tag));
    const FineDataset& ds = *it->second;
    if (ds.samples.empty()) throw EmptyDataset("fine dataset for yaw " + std::to_string(tag) + " is empty");
    Eigen::MatrixXd X(static_cast<Eigen::Index>(ds.size()), 3), Y(static_cast<Eigen::Index>(ds.size()), 3);
    for (std::size_t i = 0; i < ds.size(); ++i) {
      X.row(static_cast<Eigen::Index>(i)) = ds.samples[i].predicted.v.transpose();
      Y.row(static_cast<Eigen::Index>(i)) = ds.samples[i].epsilon.transpose();
    }
    regress::ForestOptions o = opts;
    o.seed = derive_seed(opts.seed, Stream::Forest, g);
    out.emplace(tag, regress::fit_forest(X, Y, o));
  }
  return out;
}

void CombinedPredictor::validate() const {
  mlp.validate();
  for (int tag : kYawTags) {
    const auto it = forests.find(tag);
    if (it == forests.end()) throw InvalidArgument("combined predictor lacks a forest for yaw " + std::to_string(tag));
    if (it->second.input_dim != 3 || it->second.output_dim != 3)
      throw InvalidArgument("residual forest for yaw " + std::to_string(tag) + " must map 3 -> 3");
  }
}

Vec3 CombinedPredictor::residual(const BasePosition& coarse, int yaw_tag) const {
  const auto it = forests.find(yaw_tag);
  if (it == forests.end() || it->second.empty()) return Vec3::Zero();
  return it->second.predict(coarse.v);
}

BasePosition CombinedPredictor::predict(const CameraPosition& c, const Orientation& phi) const {
  const BasePosition coarse = mlp.predict(c, phi);
  return BasePosition(coarse.v + residual(coarse, nearest_yaw_tag(phi.yaw)));
}

namespace {
constexpr const char* kFineHeader = "yaw,circle,xb_x,xb_y,xb_z,eps_x,eps_y,eps_z";
}

void save_fine_dataset(const FineDataset& ds, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << "# cfcal-fine-dataset 1 yaw=" << ds.yaw << " failed=" << ds.failed << " rows=" << ds.samples.size()
      << '\n'
      << kFineHeader << '\n';
  for (const auto& s : ds.samples) {
    out << ds.yaw << ',' << s.circle;
    for (int k = 0; k < 3; ++k) out << ',' << format_double(s.predicted.v[k]);
    for (int k = 0; k < 3; ++k) out << ',' << format_double(s.epsilon[k]);
    out << '\n';
  }
}

FineDataset load_fine_dataset(const std::string& path) {
  using Kind = FormatError::Kind;
  std::ifstream in(path);
  if (!in) throw FormatError(Kind::Truncated, path + ": cannot open");
  std::string line;
  if (!std::getline(in, line)) throw FormatError(Kind::Truncated, path + ": empty file");
  std::istringstream head(line);
  std::string hash, magic, yaw_kv, failed_kv, rows_kv;
  int version = 0;
  head >> hash >> magic >> version >> yaw_kv >> failed_kv >> rows_kv;
  if (hash != "#" || magic != "cfcal-fine-dataset") throw FormatError(Kind::Malformed, path + ": not a fine dataset");
  if (version != 1) throw FormatError(Kind::Version, path + ": unsupported version " + std::to_string(version));
  if (yaw_kv.rfind("yaw=", 0) != 0 || failed_kv.rfind("failed=", 0) != 0 || rows_kv.rfind("rows=", 0) != 0)
    throw FormatError(Kind::Malformed, path + ": malformed header");
  FineDataset ds;
  std::size_t rows = 0;
  try {
    ds.yaw = static_cast<int>(parse_int(yaw_kv.substr(4), 1));
    ds.failed = parse_u64(failed_kv.substr(7), 1);
    rows = parse_u64(rows_kv.substr(5), 1);
  } catch (const ConfigError&) {
    throw FormatError(Kind::NonNumeric, path + ": non-numeric header field");
  }
  if (!is_yaw_tag(ds.yaw)) throw FormatError(Kind::Malformed, path + ": yaw is not a discretized tag");
  if (!std::getline(in, line)) throw FormatError(Kind::Truncated, path + ": missing column header");
  if (trim(line) != kFineHeader) throw FormatError(Kind::Malformed, path + ": unexpected column header");
  int lineno = 2;
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
                          path + ": line " + std::to_string(lineno) + ": non-numeric field '" + tok + "'");
      }
    }
    if (vals.size() != 8)
      throw FormatError(in.eof() ? Kind::Truncated : Kind::Malformed,
                        path + ": line " + std::to_string(lineno) + ": expected 8 columns");
    if (static_cast<int>(vals[0]) != ds.yaw)
      throw FormatError(Kind::Malformed,
                        path + ": line " + std::to_string(lineno) + ": yaw column disagrees with header");
    ds.samples.push_back({BasePosition(vals[2], vals[3], vals[4]), Vec3(vals[5], vals[6], vals[7]),
                          static_cast<int>(vals[1])});
  }
  if (ds.samples.size() != rows)
    throw FormatError(Kind::Truncated, path + ": expected " + std::to_string(rows) + " rows, found " +
                                           std::to_string(ds.samples.size()));
  return ds;
}

}  // namespace cfcal::phase2
