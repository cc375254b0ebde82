#pragma once

// Right-hand sides for every dynamical regime of the dimer pseudospin.
//
// Canonical forms (pure-state flows are tangent to the unit sphere):
//   unitary   n' = (J x + h z) x n
//   lindblad  m' = J x x m - gamma z x (m x z)         (noise-averaged, |m| <= 1)
//   angular   n' = J x x n + gamma n_z (z - n_z n)
//   radial    d' = -gamma d (1 - n_z^2)
//   linear    n' = J x x n + s (n_z n - z)
//   variance  n' = J x x n + s n_z (z - n_z n)
// The noisy pure-state equation is a Stratonovich SDE with drift (J x + h z) x n
// and noise term eta * (z x n), <eta(t) eta(t')> = 2 gamma delta(t - t').

#include <cstdint>

#include "dimer/core.hpp"

namespace dimer {

enum class BiasKind { linear, variance };

const char* bias_kind_name(BiasKind kind) noexcept;

struct BiasSpec {
  BiasKind kind = BiasKind::linear;
  double s = 0.0;

  /// Instantaneous expectation of the biasing observable: n_z or 1 - n_z^2.
  double observable(const Vec3& n) const;
  void validate() const;
};

struct NoiseSpec {
  double variance_rate = 0.0;  ///< intensity of the effective z-field noise
  std::uint64_t master_seed = 0;

  /// variance_rate = 2 gamma, so the noise average reproduces the Lindblad flow.
  static NoiseSpec from_model(const ModelParams& params, std::uint64_t seed);
  double amplitude() const;
  double gamma() const { return 0.5 * variance_rate; }
  void validate() const;
};

Vec3 unitary_field(const Vec3& n, double J, double h);
Vec3 lindblad_field(const Vec3& nbar, double J, double gamma);
Vec3 angular_field(const Vec3& n, double J, double gamma);
double radial_rate(double nz, double d, double gamma);
Vec3 biased_field(const Vec3& n, double J, const BiasSpec& bias);

struct SdeTerms {
  Vec3 drift;
  Vec3 diffusion_direction;
  double amplitude = 0.0;
};

SdeTerms sde_terms(const Vec3& n, double J, double h, const NoiseSpec& noise);

/// Uncorrected variants of the flows, kept only so the calibration report
/// can quantify how far they deviate. They are not used for dynamics.
namespace printed {
/// n' = J x x n - gamma n_z n x (z x n)
Vec3 angular_field(const Vec3& n, double J, double gamma);
/// d' = -gamma (1 - n_z^2)
double radial_rate(double nz, double gamma);
/// n' = J x x n - s1 n_z z x (z x n) - s2 n_z n x (z x n)
Vec3 biased_field(const Vec3& n, double J, double s1, double s2);
}  // namespace printed

/// Autonomous flow descriptor, the unit passed to integrators and to the
/// fixed-point machinery.
struct Flow {
  enum class Kind { unitary, lindblad, angular, biased_linear, biased_variance };

  Kind kind = Kind::angular;
  double J = 1.0;
  double gamma = 0.0;  ///< lindblad / angular
  double h = 0.0;      ///< unitary
  double s = 0.0;      ///< biased

  static Flow unitary(double J, double h = 0.0) { return {Kind::unitary, J, 0.0, h, 0.0}; }
  static Flow lindblad(double J, double gamma) { return {Kind::lindblad, J, gamma, 0.0, 0.0}; }
  static Flow angular(double J, double gamma) { return {Kind::angular, J, gamma, 0.0, 0.0}; }
  static Flow biased(double J, const BiasSpec& bias);

  Vec3 operator()(const Vec3& n) const;
  /// True for pure-state flows tangent to the unit sphere.
  bool on_sphere() const { return kind != Kind::lindblad; }
  void validate() const;
};

const char* flow_kind_name(Flow::Kind kind) noexcept;

}  // namespace dimer
