#include "cfcal/worldsim.hpp"

#include "cfcal/errors.hpp"
#include "cfcal/rng.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace cfcal::worldsim {

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

std::array<double, BiasField::kMonomials> monomials(const Vec3& u) {
  return {1.0,          u.x(),        u.y(),        u.z(),        u.x() * u.x(),
          u.y() * u.y(), u.z() * u.z(), u.x() * u.y(), u.x() * u.z(), u.y() * u.z()};
}

std::string join(const Vec3& v) {
  return format_double(v.x()) + " " + format_double(v.y()) + " " + format_double(v.z());
}

std::vector<double> split_numbers(const KvEntry& e) {
  std::istringstream ss(e.value);
  std::vector<double> out;
  std::string tok;
  while (ss >> tok) out.push_back(parse_double(tok, e.line));
  return out;
}

Vec3 read_vec3(const KvDocument& doc, const std::string& key) {
  const auto& e = doc.require("bias", key);
  const auto xs = split_numbers(e);
  if (xs.size() != 3) throw ConfigError(e.line, key + ": expected 3 values");
  return {xs[0], xs[1], xs[2]};
}

}  // namespace

void Workspace::validate() const {
  if (!x.valid() || !y.valid() || !z.valid())
    throw InvalidArgument("workspace ranges must be finite and non-empty");
  if (!std::isfinite(camera_height) || camera_height <= z.hi)
    throw InvalidArgument("camera height must exceed the workspace top");
  if (!(safety_margin >= 0.0)) throw InvalidArgument("safety margin must be non-negative");
}

bool Workspace::contains(const BasePosition& p) const {
  return x.contains(p.x()) && y.contains(p.y()) && z.contains(p.z());
}

bool Workspace::in_envelope(const BasePosition& p) const {
  const double m = safety_margin;
  return p.finite() && p.x() >= x.lo - m && p.x() <= x.hi + m && p.y() >= y.lo - m &&
         p.y() <= y.hi + m && p.z() >= z.lo - m && p.z() <= z.hi + m;
}

Vec3 BiasField::operator()(const BasePosition& b, const Orientation& phi) const {
  const Vec3 u = (b.v - center) / scale;
  const auto mono = monomials(u);
  Vec3 out = Vec3::Zero();
  for (int m = 0; m < kMonomials; ++m) out += poly[m] * mono[m];
  for (int k = 0; k < 3; ++k)
    out[k] += sin_amplitude[k] *
              std::sin(2.0 * std::numbers::pi * sin_frequency[k].dot(b.v) + sin_phase[k]);
  const Vec3 s(std::sin(phi.yaw * kDeg), std::sin(phi.pitch * kDeg), std::sin(phi.roll * kDeg));
  out += rotation_coupling * s;
  return out;
}

BiasField BiasField::zero() {
  BiasField f;
  for (auto& p : f.poly) p.setZero();
  for (auto& w : f.sin_frequency) w.setZero();
  return f;
}

BiasField BiasField::constant(const Vec3& offset) {
  BiasField f = zero();
  f.poly[0] = offset;
  return f;
}

KvDocument BiasField::to_kv() const {
  KvDocument doc;
  doc.set("bias", "seed", std::to_string(seed));
  doc.set("bias", "target_rms", target_rms);
  doc.set("bias", "scale", scale);
  doc.set("bias", "center", join(center));
  for (int m = 0; m < kMonomials; ++m) doc.set("bias", "poly." + std::to_string(m), join(poly[m]));
  doc.set("bias", "sin_amplitude", join(sin_amplitude));
  for (int k = 0; k < 3; ++k)
    doc.set("bias", "sin_frequency." + std::to_string(k), join(sin_frequency[k]));
  doc.set("bias", "sin_phase", join(sin_phase));
  for (int r = 0; r < 3; ++r)
    doc.set("bias", "rotation_coupling." + std::to_string(r),
            join(rotation_coupling.row(r).transpose()));
  return doc;
}

BiasField BiasField::from_kv(const KvDocument& doc) {
  BiasField f;
  const auto& seed_entry = doc.require("bias", "seed");
  f.seed = parse_u64(seed_entry.value, seed_entry.line);
  const auto& rms_entry = doc.require("bias", "target_rms");
  f.target_rms = parse_double(rms_entry.value, rms_entry.line);
  const auto& scale_entry = doc.require("bias", "scale");
  f.scale = parse_double(scale_entry.value, scale_entry.line);
  f.center = read_vec3(doc, "center");
  for (int m = 0; m < kMonomials; ++m) f.poly[m] = read_vec3(doc, "poly." + std::to_string(m));
  f.sin_amplitude = read_vec3(doc, "sin_amplitude");
  for (int k = 0; k < 3; ++k) f.sin_frequency[k] = read_vec3(doc, "sin_frequency." + std::to_string(k));
  f.sin_phase = read_vec3(doc, "sin_phase");
  for (int r = 0; r < 3; ++r)
    f.rotation_coupling.row(r) = read_vec3(doc, "rotation_coupling." + std::to_string(r)).transpose();
  if (!(f.scale > 0.0)) throw ConfigError(0, "bias scale must be positive");
  return f;
}

double grid_rms(const BiasField& field, const Workspace& ws, const PitchRollTable& table) {
  constexpr int nx = 10, ny = 10, nz = 3;
  double sum = 0.0;
  int count = 0;
  for (int i = 0; i < nx; ++i) {
    const double x = ws.x.lo + ws.x.width() * i / (nx - 1);
    for (int j = 0; j < ny; ++j) {
      const double y = ws.y.lo + ws.y.width() * j / (ny - 1);
      for (int k = 0; k < nz; ++k) {
        const double z = ws.z.lo + ws.z.width() * k / (nz - 1);
        for (int tag : kYawTags) {
          sum += field(BasePosition(x, y, z), table.orientation(tag)).squaredNorm();
          ++count;
        }
      }
    }
  }
  return std::sqrt(sum / count);
}

BiasField make_bias_field(std::uint64_t seed, double target_rms, const Workspace& ws,
                          const PitchRollTable& table, const BiasShape& shape) {
  if (!(target_rms > 0.0) || !std::isfinite(target_rms))
    throw InvalidArgument("target_rms must be positive");
  ws.validate();
  if (!(shape.min_period > 0.0) || shape.max_period < shape.min_period)
    throw InvalidArgument("bias sinusoid periods must be positive and ordered");

  Rng rng = make_rng(derive_seed(seed, Stream::Bias));
  auto normal = [&](double sigma) { return gaussian(rng, sigma); };
  auto vec = [&](double sigma) { return Vec3(normal(sigma), normal(sigma), normal(sigma)); };

  BiasField f;
  f.seed = seed;
  f.target_rms = target_rms;
  f.center = ws.center();
  f.scale = 0.5 * std::max(ws.x.width(), ws.y.width());

  f.poly[0] = vec(shape.constant);
  for (int m = 1; m <= 3; ++m) f.poly[m] = vec(shape.linear);
  for (int m = 4; m < BiasField::kMonomials; ++m) f.poly[m] = vec(shape.quadratic);

  for (int k = 0; k < 3; ++k) {
    f.sin_amplitude[k] = shape.sinusoid * uniform(rng, 0.6, 1.0);
    const double period = uniform(rng, shape.min_period, shape.max_period);
    const double heading = uniform(rng, 0.0, 2.0 * std::numbers::pi);
    f.sin_frequency[k] = Vec3(std::cos(heading), std::sin(heading), 0.0) / period;
    f.sin_phase[k] = uniform(rng, 0.0, 2.0 * std::numbers::pi);
  }
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) f.rotation_coupling(r, c) = normal(shape.rotation);

  // Damp the vertical output component; lateral error is what the cameras see.
  for (auto& p : f.poly) p.z() *= shape.z_axis;
  f.sin_amplitude.z() *= shape.z_axis;
  f.rotation_coupling.row(2) *= shape.z_axis;

  const double rms = grid_rms(f, ws, table);
  if (!(rms > 0.0)) throw NumericFailure("degenerate bias draw");
  const double gain = target_rms / rms;
  for (auto& p : f.poly) p *= gain;
  f.sin_amplitude *= gain;
  f.rotation_coupling *= gain;
  return f;
}

WorldPoint reach_exact(const BasePosition& x_b, const Orientation& phi, const Arm& arm) {
  return WorldPoint(arm.offset.to_world(x_b).v + arm.field(x_b, phi));
}

WorldPoint execute_command(const BasePosition& x_b, const Orientation& phi, const Arm& arm,
                           std::uint64_t noise_seed) {
  if (!arm.workspace.in_envelope(x_b)) {
    std::ostringstream msg;
    msg << "command (" << x_b.x() << ", " << x_b.y() << ", " << x_b.z()
        << ") outside the safety envelope";
    throw SafetyViolation(msg.str());
  }
  WorldPoint w = reach_exact(x_b, phi, arm);
  if (arm.measurement_noise > 0.0) {
    Rng rng = make_rng(noise_seed);
    for (int k = 0; k < 3; ++k) w.v[k] += gaussian(rng, arm.measurement_noise);
  }
  return w;
}

BasePosition true_inverse(const WorldPoint& target, const Orientation& phi, const Arm& arm) {
  // b <- offset^-1(target - bias(b)); contracts because |d bias / d b| < 1.
  BasePosition b = arm.offset.to_base(target);
  for (int it = 0; it < 200; ++it) {
    const BasePosition next = arm.offset.to_base(WorldPoint(target.v - arm.field(b, phi)));
    const double step = (next.v - b.v).norm();
    b = next;
    if (step < 1e-13) break;
  }
  return b;
}

}  // namespace cfcal::worldsim
