#include "cfcal/config.hpp"

#include "cfcal/errors.hpp"
#include "cfcal/rng.hpp"

#include <Eigen/Geometry>

#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <set>
#include <sstream>

namespace cfcal {

namespace {

using C = ScenarioConfig;

struct Field {
  std::string section;
  std::string key;
  std::function<std::string(const C&)> get;
  std::function<void(C&, const std::string&, int)> set;
};

constexpr double kInf = std::numeric_limits<double>::infinity();

// Reference accessors are written against a mutable config; reading goes
// through a copy so the table stays a single list.
template <class Ref>
Field real(const char* s, const char* k, Ref ref, double lo = -kInf, bool strict = false) {
  return {s, k, [ref](const C& c) { C& m = const_cast<C&>(c); return format_double(ref(m)); },
          [ref, lo, strict, k](C& c, const std::string& v, int line) {
            const double x = parse_double(v, line);
            if (!std::isfinite(x)) throw ConfigError(line, std::string(k) + " must be finite");
            if (strict ? !(x > lo) : !(x >= lo))
              throw ConfigError(line, std::string(k) + " must be " + (strict ? "> " : ">= ") + format_double(lo));
            ref(c) = x;
          }};
}

template <class Ref>
Field integer(const char* s, const char* k, Ref ref, long long lo) {
  return {s, k, [ref](const C& c) { C& m = const_cast<C&>(c); return std::to_string(ref(m)); },
          [ref, lo, k](C& c, const std::string& v, int line) {
            const long long x = parse_int(v, line);
            if (x < lo) throw ConfigError(line, std::string(k) + " must be >= " + std::to_string(lo));
            ref(c) = static_cast<std::remove_reference_t<decltype(ref(c))>>(x);
          }};
}

template <class Ref>
Field boolean(const char* s, const char* k, Ref ref) {
  return {s, k, [ref](const C& c) { C& m = const_cast<C&>(c); return std::string(ref(m) ? "true" : "false"); },
          [ref](C& c, const std::string& v, int line) { ref(c) = parse_bool(v, line); }};
}

std::string yaw_key(int tag) { return tag < 0 ? "yaw_m" + std::to_string(-tag) : "yaw_" + std::to_string(tag); }

std::vector<Field> fields() {
  std::vector<Field> f;
  f.push_back({"scenario", "seed", [](const C& c) { return std::to_string(c.seed); },
               [](C& c, const std::string& v, int line) { c.seed = parse_u64(v, line); }});
  f.push_back(integer("scenario", "threads", [](C& c) -> std::size_t& { return c.threads; }, 0));

  f.push_back(real("workspace", "x_min", [](C& c) -> double& { return c.workspace.x.lo; }));
  f.push_back(real("workspace", "x_max", [](C& c) -> double& { return c.workspace.x.hi; }));
  f.push_back(real("workspace", "y_min", [](C& c) -> double& { return c.workspace.y.lo; }));
  f.push_back(real("workspace", "y_max", [](C& c) -> double& { return c.workspace.y.hi; }));
  f.push_back(real("workspace", "z_min", [](C& c) -> double& { return c.workspace.z.lo; }));
  f.push_back(real("workspace", "z_max", [](C& c) -> double& { return c.workspace.z.hi; }));
  f.push_back(real("workspace", "camera_height", [](C& c) -> double& { return c.workspace.camera_height; }, 0.0, true));
  f.push_back(real("workspace", "safety_margin", [](C& c) -> double& { return c.workspace.safety_margin; }, 0.0));
  f.push_back(real("workspace", "offset_x", [](C& c) -> double& { return c.offset_translation.x(); }));
  f.push_back(real("workspace", "offset_y", [](C& c) -> double& { return c.offset_translation.y(); }));
  f.push_back(real("workspace", "offset_z", [](C& c) -> double& { return c.offset_translation.z(); }));
  f.push_back(real("workspace", "offset_yaw", [](C& c) -> double& { return c.offset_yaw_deg; }));

  f.push_back({"bias", "seed",
               [](const C& c) { return c.bias_seed ? std::to_string(*c.bias_seed) : std::string("auto"); },
               [](C& c, const std::string& v, int line) {
                 if (trim(v) == "auto")
                   c.bias_seed.reset();
                 else
                   c.bias_seed = parse_u64(v, line);
               }});
  f.push_back(real("bias", "target_rms", [](C& c) -> double& { return c.bias_rms; }, 0.0, true));
  f.push_back(real("bias", "constant", [](C& c) -> double& { return c.bias_shape.constant; }, 0.0));
  f.push_back(real("bias", "linear", [](C& c) -> double& { return c.bias_shape.linear; }, 0.0));
  f.push_back(real("bias", "quadratic", [](C& c) -> double& { return c.bias_shape.quadratic; }, 0.0));
  f.push_back(real("bias", "sinusoid", [](C& c) -> double& { return c.bias_shape.sinusoid; }, 0.0));
  f.push_back(real("bias", "rotation", [](C& c) -> double& { return c.bias_shape.rotation; }, 0.0));
  f.push_back(real("bias", "z_axis", [](C& c) -> double& { return c.bias_shape.z_axis; }, 0.0));
  f.push_back(real("bias", "min_period", [](C& c) -> double& { return c.bias_shape.min_period; }, 0.0, true));
  f.push_back(real("bias", "max_period", [](C& c) -> double& { return c.bias_shape.max_period; }, 0.0, true));

  f.push_back(real("rig", "focal_px", [](C& c) -> double& { return c.rig.focal_px; }, 0.0, true));
  f.push_back(real("rig", "baseline", [](C& c) -> double& { return c.rig.baseline; }, 0.0, true));
  f.push_back(real("rig", "cx_left", [](C& c) -> double& { return c.rig.cx_left; }));
  f.push_back(real("rig", "cy_left", [](C& c) -> double& { return c.rig.cy_left; }));
  f.push_back(real("rig", "cx_right", [](C& c) -> double& { return c.rig.cx_right; }));
  f.push_back(real("rig", "cy_right", [](C& c) -> double& { return c.rig.cy_right; }));
  f.push_back(integer("rig", "image_width", [](C& c) -> int& { return c.rig.image_width; }, 1));
  f.push_back(integer("rig", "image_height", [](C& c) -> int& { return c.rig.image_height; }, 1));

  f.push_back(real("noise", "measurement", [](C& c) -> double& { return c.measurement_noise; }, 0.0));
  f.push_back(real("noise", "target_pixel", [](C& c) -> double& { return c.target_pixel_sigma; }, 0.0));
  f.push_back(real("noise", "hand", [](C& c) -> double& { return c.hand.sigma; }, 0.0));
  f.push_back(real("noise", "hand_z", [](C& c) -> double& { return c.hand.sigma_z; }, 0.0));

  f.push_back(boolean("occlusion", "enabled", [](C& c) -> bool& { return c.occlusion.enabled; }));
  f.push_back(real("occlusion", "nominal_pitch", [](C& c) -> double& { return c.occlusion.nominal_pitch; }));
  f.push_back(real("occlusion", "p_max", [](C& c) -> double& { return c.occlusion.p_max; }, 0.0));
  f.push_back(real("occlusion", "midpoint", [](C& c) -> double& { return c.occlusion.midpoint; }));
  f.push_back(real("occlusion", "slope", [](C& c) -> double& { return c.occlusion.slope; }, 0.0, true));
  f.push_back(real("occlusion", "spurious_rate", [](C& c) -> double& { return c.occlusion.spurious_rate; }, 0.0));
  f.push_back(real("occlusion", "pixel_sigma", [](C& c) -> double& { return c.occlusion.pixel_sigma; }, 0.0));

  f.push_back(integer("phase1", "n_traj", [](C& c) -> int& { return c.n_traj; }, 1));
  f.push_back(real("phase1", "step_mm", [](C& c) -> double& { return c.trajectory.step_mm; }, 0.0, true));
  f.push_back(integer(
      "phase1", "rotations_per_pause", [](C& c) -> int& { return c.trajectory.rotations_per_pause; }, 0));
  f.push_back(real("phase1", "marker_x", [](C& c) -> double& { return c.marker_offset.x(); }));
  f.push_back(real("phase1", "marker_y", [](C& c) -> double& { return c.marker_offset.y(); }));
  f.push_back(real("phase1", "marker_z", [](C& c) -> double& { return c.marker_offset.z(); }));
  f.push_back(real("phase1", "consistency_tol", [](C& c) -> double& { return c.clean.consistency_tol; }, 0.0));

  f.push_back(integer("mlp", "layers", [](C& c) -> int& { return c.arch.hidden_layers; }, 1));
  f.push_back(integer("mlp", "width", [](C& c) -> int& { return c.arch.width; }, 1));
  f.push_back({"mlp", "activation", [](const C& c) { return regress::to_string(c.arch.activation); },
               [](C& c, const std::string& v, int line) {
                 try {
                   c.arch.activation = regress::parse_activation(std::string(trim(v)));
                 } catch (const InvalidArgument& e) {
                   throw ConfigError(line, e.what());
                 }
               }});
  f.push_back(integer("mlp", "epochs", [](C& c) -> int& { return c.train.epochs; }, 1));
  f.push_back(integer("mlp", "batch_size", [](C& c) -> int& { return c.train.batch_size; }, 0));
  f.push_back(real("mlp", "learning_rate", [](C& c) -> double& { return c.train.learning_rate; }, 0.0, true));
  f.push_back(real("mlp", "beta1", [](C& c) -> double& { return c.train.beta1; }, 0.0));
  f.push_back(real("mlp", "beta2", [](C& c) -> double& { return c.train.beta2; }, 0.0));
  f.push_back(real("mlp", "epsilon", [](C& c) -> double& { return c.train.epsilon; }, 0.0, true));
  f.push_back(integer("mlp", "cv_folds", [](C& c) -> int& { return c.cv_folds; }, 2));
  f.push_back(boolean("mlp", "sweep", [](C& c) -> bool& { return c.sweep; }));
  f.push_back(integer("mlp", "sweep_epochs", [](C& c) -> int& { return c.sweep_epochs; }, 1));

  f.push_back(integer("forest", "trees", [](C& c) -> int& { return c.forest.trees; }, 1));
  f.push_back({"forest", "max_depth",
               [](const C& c) {
                 return c.forest.max_depth ? std::to_string(*c.forest.max_depth) : std::string("none");
               },
               [](C& c, const std::string& v, int line) {
                 if (trim(v) == "none") {
                   c.forest.max_depth.reset();
                   return;
                 }
                 const long long d = parse_int(v, line);
                 if (d < 0) throw ConfigError(line, "max_depth must be >= 0 or none");
                 c.forest.max_depth = static_cast<int>(d);
               }});
  f.push_back(integer("forest", "min_leaf", [](C& c) -> int& { return c.forest.min_leaf; }, 1));
  f.push_back(boolean("forest", "bootstrap", [](C& c) -> bool& { return c.forest.bootstrap; }));

  f.push_back(integer("grid", "rows", [](C& c) -> int& { return c.grid.rows; }, 1));
  f.push_back(integer("grid", "cols", [](C& c) -> int& { return c.grid.cols; }, 1));
  f.push_back(real("grid", "margin", [](C& c) -> double& { return c.grid.margin; }, 0.0));
  f.push_back(real("grid", "radius", [](C& c) -> double& { return c.grid.radius; }, 0.0));

  f.push_back({"debride", "kinds",
               [](const C& c) {
                 std::string s;
                 for (auto k : c.kinds) s += (s.empty() ? "" : " ") + debridesim::to_string(k);
                 return s;
               },
               [](C& c, const std::string& v, int line) {
                 std::istringstream ss(v);
                 std::string tok;
                 c.kinds.clear();
                 while (ss >> tok) {
                   try {
                     c.kinds.push_back(debridesim::parse_kind(tok));
                   } catch (const InvalidArgument& e) {
                     throw ConfigError(line, e.what());
                   }
                 }
               }});
  f.push_back(integer("debride", "n_trials", [](C& c) -> int& { return c.n_trials; }, 1));
  f.push_back(integer("debride", "fragments", [](C& c) -> int& { return c.scene.fragments; }, 1));
  f.push_back(real("debride", "clearance", [](C& c) -> double& { return c.scene.clearance; }, 0.0));
  f.push_back(integer("debride", "max_attempts", [](C& c) -> int& { return c.scene.max_attempts; }, 1));
  f.push_back(real("debride", "tip_slack", [](C& c) -> double& { return c.grasp.tip_slack; }, 0.0));
  f.push_back(real("debride", "pumpkin_slip", [](C& c) -> double& { return c.grasp.pumpkin_slip; }, 0.0));
  f.push_back(real("debride", "raisin_slip", [](C& c) -> double& { return c.grasp.raisin_slip; }, 0.0));
  f.push_back(real("debride", "raisin_band", [](C& c) -> double& { return c.grasp.raisin_band; }, 0.0));

  for (std::size_t g = 0; g < kYawTags.size(); ++g) {
    f.push_back({"pitch_roll", yaw_key(kYawTags[g]),
                 [g](const C& c) {
                   return format_double(c.pitch_roll.entries[g].first) + ", " +
                          format_double(c.pitch_roll.entries[g].second);
                 },
                 [g](C& c, const std::string& v, int line) {
                   const auto comma = v.find(',');
                   if (comma == std::string::npos) throw ConfigError(line, "expected 'pitch, roll'");
                   c.pitch_roll.entries[g] = {parse_double(std::string_view(v).substr(0, comma), line),
                                              parse_double(std::string_view(v).substr(comma + 1), line)};
                 }});
  }
  return f;
}

const std::vector<Field>& field_table() {
  static const std::vector<Field> table = fields();
  return table;
}

}  // namespace

ScenarioConfig parse_config(const KvDocument& doc) {
  const auto& table = field_table();
  std::set<std::string> sections;
  for (const auto& f : table) sections.insert(f.section);
  ScenarioConfig c;
  std::set<std::pair<std::string, std::string>> seen;
  for (const auto& e : doc.entries()) {
    if (!sections.count(e.section))
      throw ConfigError(e.line, e.section.empty() ? "key '" + e.key + "' outside any section"
                                                  : "unknown section [" + e.section + "]");
    const Field* match = nullptr;
    for (const auto& f : table)
      if (f.section == e.section && f.key == e.key) match = &f;
    if (!match) throw ConfigError(e.line, "unknown key '" + e.key + "' in [" + e.section + "]");
    if (!seen.insert({e.section, e.key}).second)
      throw ConfigError(e.line, "duplicate key '" + e.key + "' in [" + e.section + "]");
    match->set(c, e.value, e.line);
  }
  try {
    validate(c);
  } catch (const InvalidArgument& e) {
    throw ConfigError(0, e.what());
  }
  return c;
}

ScenarioConfig load_config(const std::string& path) { return parse_config(KvDocument::load(path)); }

KvDocument to_kv(const ScenarioConfig& c) {
  KvDocument doc;
  for (const auto& f : field_table()) doc.set(f.section, f.key, f.get(c));
  return doc;
}

std::string config_text(const ScenarioConfig& c) { return to_kv(c).str(); }

std::uint64_t config_hash(const ScenarioConfig& c) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : config_text(c)) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

void validate(const ScenarioConfig& c) {
  c.workspace.validate();
  make_rig(c).validate(c.workspace);
  c.pitch_roll.validate();
  if (c.bias_shape.min_period > c.bias_shape.max_period)
    throw InvalidArgument("bias min_period exceeds max_period");
  if (c.occlusion.p_max > 1.0) throw InvalidArgument("occlusion p_max must be <= 1");
  if (c.grasp.pumpkin_slip > 1.0 || c.grasp.raisin_slip > 1.0) throw InvalidArgument("slip probabilities must be <= 1");
  if (c.train.beta1 >= 1.0 || c.train.beta2 >= 1.0) throw InvalidArgument("Adam betas must be < 1");
  if (c.kinds.empty()) throw InvalidArgument("debride kinds must name at least one fragment kind");
}

std::uint64_t effective_bias_seed(const ScenarioConfig& c) {
  return c.bias_seed ? *c.bias_seed : derive_seed(c.seed, Stream::Bias);
}

worldsim::FrameOffset make_offset(const ScenarioConfig& c) {
  worldsim::FrameOffset o;
  o.rotation = Eigen::AngleAxisd(c.offset_yaw_deg * std::numbers::pi / 180.0, Vec3::UnitZ()).toRotationMatrix();
  o.translation = c.offset_translation;
  return o;
}

stereocam::StereoRig make_rig(const ScenarioConfig& c) {
  stereocam::StereoRig rig = c.rig;
  rig.left_center_world = stereocam::StereoRig::for_workspace(c.workspace).left_center_world;
  return rig;
}

worldsim::Arm make_arm(const ScenarioConfig& c) {
  worldsim::Arm arm;
  arm.workspace = c.workspace;
  arm.field = worldsim::make_bias_field(effective_bias_seed(c), c.bias_rms, c.workspace, c.pitch_roll, c.bias_shape);
  arm.offset = make_offset(c);
  arm.measurement_noise = c.measurement_noise;
  return arm;
}

}  // namespace cfcal
