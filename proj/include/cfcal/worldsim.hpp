#pragma once

#include "cfcal/kvfile.hpp"
#include "cfcal/types.hpp"

#include <array>
#include <cstdint>
#include <string>

namespace cfcal::worldsim {

struct Workspace {
  Interval x{0.0, 75.0};
  Interval y{0.0, 75.0};
  Interval z{0.0, 10.0};  // above the phantom plane
  double camera_height{190.5};
  // Commands may leave the nominal box by this much before being refused;
  // calibrated commands routinely overshoot it to cancel the bias.
  double safety_margin{10.0};

  void validate() const;
  bool contains(const BasePosition& p) const;
  bool in_envelope(const BasePosition& p) const;
  Vec3 center() const { return {x.mid(), y.mid(), z.mid()}; }
};

// Rigid map from the base frame into the world frame.
struct FrameOffset {
  Mat3 rotation{Mat3::Identity()};
  Vec3 translation{Vec3::Zero()};

  WorldPoint to_world(const BasePosition& b) const { return WorldPoint(rotation * b.v + translation); }
  BasePosition to_base(const WorldPoint& w) const {
    return BasePosition(rotation.transpose() * (w.v - translation));
  }
  Vec3 world_vector_to_base(const Vec3& d) const { return rotation.transpose() * d; }
};

// Hidden systematic error of the arm: what it reaches minus what it was told,
// as a pure function of the commanded base position and orientation.
//
//   bias(b, phi) = sum_m poly[m] * monomial_m(u)
//                + amplitude_k * sin(2*pi * <frequency_k, b> + phase_k)   (axis k)
//                + coupling * (sin yaw, sin pitch, sin roll)
//
// with u = (b - center) / scale the normalized position. Monomials are, in
// order: 1, ux, uy, uz, ux^2, uy^2, uz^2, ux*uy, ux*uz, uy*uz.
struct BiasField {
  static constexpr int kMonomials = 10;

  std::array<Vec3, kMonomials> poly{};
  Vec3 sin_amplitude{Vec3::Zero()};
  std::array<Vec3, 3> sin_frequency{};  // 1/mm, one wave vector per output axis
  Vec3 sin_phase{Vec3::Zero()};
  Mat3 rotation_coupling{Mat3::Zero()};  // column j: mm per unit sin of angle j
  Vec3 center{Vec3::Zero()};
  double scale{1.0};
  double target_rms{0.0};
  std::uint64_t seed{0};

  Vec3 operator()(const BasePosition& b, const Orientation& phi) const;

  static BiasField zero();
  static BiasField constant(const Vec3& offset);

  KvDocument to_kv() const;
  static BiasField from_kv(const KvDocument& doc);
};

struct BiasShape {
  // Relative standard deviations of each component before the global rescale.
  double constant{0.0};
  double linear{0.3};
  double quadratic{0.6};
  double sinusoid{1.5};
  double rotation{0.3};
  double z_axis{0.3};  // scale applied to the z output component
  double min_period{40.0};
  double max_period{60.0};
};

// Draws a field from `seed` and rescales it so its RMS magnitude over the
// reference grid (see grid_rms) equals target_rms.
BiasField make_bias_field(std::uint64_t seed, double target_rms, const Workspace& ws = {},
                          const PitchRollTable& table = {}, const BiasShape& shape = {});

// RMS of |bias| over a 10x10x3 grid spanning the workspace crossed with the
// five discretized yaws (pitch and roll from `table`).
double grid_rms(const BiasField& field, const Workspace& ws, const PitchRollTable& table);

// Everything needed to execute a command on the simulated arm.
struct Arm {
  Workspace workspace{};
  BiasField field{};
  FrameOffset offset{};
  double measurement_noise{0.1};  // mm, per axis
};

// Reached world point for a commanded base position. Throws SafetyViolation
// when the command leaves the safety envelope.
WorldPoint execute_command(const BasePosition& x_b, const Orientation& phi, const Arm& arm,
                           std::uint64_t noise_seed);

// Noise-free reached point, used by oracles.
WorldPoint reach_exact(const BasePosition& x_b, const Orientation& phi, const Arm& arm);

// Command that reaches `target` exactly in the absence of noise, found by
// fixed-point iteration on the bias. Test and benchmark oracle.
BasePosition true_inverse(const WorldPoint& target, const Orientation& phi, const Arm& arm);

}  // namespace cfcal::worldsim
