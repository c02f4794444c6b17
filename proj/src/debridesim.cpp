#include "cfcal/debridesim.hpp"

#include "cfcal/errors.hpp"
#include "cfcal/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace cfcal::debridesim {

std::string to_string(Kind k) { return k == Kind::Pumpkin ? "pumpkin" : "raisin"; }

Kind parse_kind(const std::string& s) {
  if (s == "pumpkin") return Kind::Pumpkin;
  if (s == "raisin") return Kind::Raisin;
  throw InvalidArgument("unknown fragment kind '" + s + "'");
}

FragmentShape fragment_shape(Kind k) {
  if (k == Kind::Pumpkin) return {{12.4, 0.8}, {6.8, 0.3}, {2.4, 0.3}};
  return {{12.3, 1.5}, {5.9, 1.1}, {4.2, 0.5}};
}

namespace {

double clipped(Rng& rng, const Dimension& d) {
  const double x = d.mean + gaussian(rng, d.sigma);
  return std::clamp(x, d.mean - 3.0 * d.sigma, d.mean + 3.0 * d.sigma);
}

double gap(const Fragment& a, const Fragment& b) {
  const double d = std::hypot(a.center.x() - b.center.x(), a.center.y() - b.center.y());
  return d - a.radius() - b.radius();
}

}  // namespace

Scene gen_scene(Kind kind, std::uint64_t seed, const worldsim::Workspace& ws, const SceneOptions& opts) {
  const FragmentShape shape = fragment_shape(kind);
  Rng rng = make_rng(seed);
  Scene scene;
  int attempts = 0;
  while (static_cast<int>(scene.fragments.size()) < opts.fragments) {
    if (attempts++ >= opts.max_attempts)
      throw DegenerateInput("gen_scene: placed " + std::to_string(scene.fragments.size()) + " of " +
                            std::to_string(opts.fragments) + " fragments in " + std::to_string(opts.max_attempts) +
                            " attempts");
    Fragment f;
    f.kind = kind;
    f.length = clipped(rng, shape.length);
    f.width = std::min(clipped(rng, shape.width), 10.0);
    f.thickness = clipped(rng, shape.thickness);
    f.angle = uniform(rng, -90.0, 90.0);
    const double r = f.radius();
    const double x = uniform(rng, ws.x.lo + r, ws.x.hi - r);
    const double y = uniform(rng, ws.y.lo + r, ws.y.hi - r);
    f.center = WorldPoint(x, y, ws.z.lo + 0.5 * f.thickness);
    const bool clear = std::all_of(scene.fragments.begin(), scene.fragments.end(),
                                   [&](const Fragment& o) { return gap(f, o) >= opts.clearance; });
    if (clear) scene.fragments.push_back(f);
  }
  return scene;
}

double min_clearance(const Scene& scene) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < scene.fragments.size(); ++i)
    for (std::size_t j = 0; j < i; ++j) best = std::min(best, gap(scene.fragments[i], scene.fragments[j]));
  return best;
}

int snap_yaw(double angle_deg) {
  if (!(angle_deg >= -90.0 && angle_deg < 90.0))
    throw InvalidArgument("snap_yaw: angle must lie in [-90, 90)");
  return nearest_yaw_tag(angle_deg);
}

std::pair<double, double> lookup_pitch_roll(int yaw_tag, const PitchRollTable& table) { return table.lookup(yaw_tag); }

char symbol(OutcomeTag t) {
  switch (t) {
    case OutcomeTag::Success: return '-';
    case OutcomeTag::TypeA: return 'A';
    case OutcomeTag::TypeB: return 'B';
    case OutcomeTag::TypeC: return 'C';
  }
  return '?';
}

double grasp_tol(const Fragment& f, const GraspModel& model) { return 0.5 * f.width + model.tip_slack; }

OutcomeTag classify_grasp(double lateral_error, const Fragment& f, const GraspModel& model, std::uint64_t seed) {
  Rng rng = make_rng(seed);
  const double u = uniform(rng, 0.0, 1.0);
  const double tol = grasp_tol(f, model);
  if (!(lateral_error <= tol)) {
    if (f.kind == Kind::Raisin && lateral_error <= tol + model.raisin_band) return OutcomeTag::TypeC;
    return OutcomeTag::TypeA;
  }
  const double slip = f.kind == Kind::Pumpkin ? model.pumpkin_slip : model.raisin_slip;
  return u < slip ? OutcomeTag::TypeB : OutcomeTag::Success;
}

Outcome attempt_grasp(const Fragment& frag, const Predictor& predictor, const TrialSetup& setup,
                      std::uint64_t seed) {
  Outcome out;
  out.yaw = snap_yaw(frag.angle);
  const auto [pitch, roll] = lookup_pitch_roll(out.yaw, setup.pitch_roll);
  const Orientation phi{static_cast<double>(out.yaw), pitch, roll};
  const CameraPosition x_c =
      stereocam::locate_target(frag.center, setup.rig, setup.target_pixel_sigma, derive_seed(seed, Stream::Detect));
  const BasePosition x_b = predictor(x_c, phi);
  if (!x_b.finite() || !setup.arm.workspace.in_envelope(x_b)) {
    // The arm refuses the move; the fragment is never reached.
    out.tag = OutcomeTag::TypeA;
    out.lateral_error = std::numeric_limits<double>::infinity();
    return out;
  }
  const WorldPoint reached = worldsim::execute_command(x_b, phi, setup.arm, derive_seed(seed, Stream::Execute));
  out.lateral_error = std::hypot(reached.x() - frag.center.x(), reached.y() - frag.center.y());
  out.tag = classify_grasp(out.lateral_error, frag, setup.grasp, derive_seed(seed, Stream::Grasp));
  return out;
}

int Tally::attempts() const { return counts[0] + counts[1] + counts[2] + counts[3]; }

double Tally::success_fraction() const {
  const int n = attempts();
  return n ? static_cast<double>(count(OutcomeTag::Success)) / n : 0.0;
}

std::string Tally::grid() const {
  std::ostringstream os;
  os << "# " << to_string(kind) << ' ' << mapping << '\n';
  for (std::size_t t = 0; t < trials.size(); ++t) {
    os << t + 1;
    for (const auto& o : trials[t]) os << ',' << symbol(o.tag);
    os << '\n';
  }
  os << "Success: " << count(OutcomeTag::Success) << '/' << attempts() << "  A:" << count(OutcomeTag::TypeA)
     << "  B:" << count(OutcomeTag::TypeB) << "  C:" << count(OutcomeTag::TypeC) << '\n';
  return os.str();
}

Tally run_trials(Kind kind, const std::string& mapping, const Predictor& predictor, int n_trials,
                 const TrialSetup& setup, std::uint64_t seed) {
  if (n_trials < 1) throw InvalidArgument("run_trials: need at least one trial");
  Tally tally;
  tally.kind = kind;
  tally.mapping = mapping;
  for (int t = 0; t < n_trials; ++t) {
    const Scene scene = gen_scene(kind, derive_seed(seed, Stream::Scene, static_cast<std::uint64_t>(t)),
                                  setup.arm.workspace, setup.scene);
    std::vector<Outcome> row;
    for (std::size_t j = 0; j < scene.fragments.size(); ++j) {
      const std::uint64_t s = derive_seed(seed, Stream::Debride, static_cast<std::uint64_t>(t) * 1000 + j);
      row.push_back(attempt_grasp(scene.fragments[j], predictor, setup, s));
      ++tally.counts[static_cast<std::size_t>(row.back().tag)];
    }
    tally.trials.push_back(std::move(row));
  }
  return tally;
}

}  // namespace cfcal::debridesim
