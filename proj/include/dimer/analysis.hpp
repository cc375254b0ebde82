#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "dimer/core.hpp"
#include "dimer/flows.hpp"
#include "dimer/integrate.hpp"

namespace dimer {

// --- spectral transition of the noise-averaged flow ---------------------------

enum class Regime { underdamped, critical, overdamped };

const char* regime_name(Regime r) noexcept;

struct SpectrumRecord {
  std::array<Complex, 3> eigenvalues;  ///< {-gamma, (-gamma + r)/2, (-gamma - r)/2}, r = sqrt(gamma^2 - 4J^2)
  Regime regime = Regime::underdamped;
};

/// 3x3 matrix of the linear noise-averaged flow m' = L m.
Eigen::Matrix3d lindblad_generator(double J, double gamma);
SpectrumRecord linear_spectrum(double J, double gamma);

// --- fixed points on the sphere -------------------------------------------------

enum class FixedPointClass { repeller, attractor, saddle, center };

const char* fixed_point_class_name(FixedPointClass c) noexcept;

struct Classification {
  FixedPointClass kind = FixedPointClass::center;
  std::array<Complex, 2> eigenvalues;
  bool marginal = false;  ///< center of a nonlinear flow; linear test is inconclusive
  double step_disagreement = 0.0;
};

struct FixedPointRecord {
  BlochVector location = BlochVector::south();
  StereoPoint w;
  Classification classification;
  double residual = 0.0;
};

struct FixedPointSearch {
  std::vector<FixedPointRecord> points;
  /// False when some Newton run stalled near a root it could not confirm.
  bool complete = true;
};

struct FixedPointOptions {
  std::size_t seeds_per_axis = 24;
  double seed_extent = 1.5;  ///< seeds cover [-extent, extent]^2 in both charts
  double dedup_distance = 1e-6;
  double residual_tolerance = 1e-8;
  unsigned workers = 1;
};

FixedPointSearch find_fixed_points(const Flow& flow, const FixedPointOptions& options = {});

/// Tangent-plane Jacobian by central differences (step 1e-6, cross-checked
/// at 1e-5); classification from the eigenvalue real parts.
Classification classify_fixed_point(const Flow& flow, const BlochVector& point);

/// Eigenvalues of the finite-difference Jacobian of a ball flow at a point.
std::array<Complex, 3> ball_jacobian_eigenvalues(const Flow& flow, const Vec3& point);

// --- disconnection ----------------------------------------------------------------

/// Start state of every biased/dissipative run: south pole pushed 1e-6 along +y.
Vec3 displaced_south_pole();
Vec3 displaced_north_pole();

struct DisconnectionResult {
  bool connected = false;
  double max_nz = -1.0;
};

/// Connected iff n_z exceeds 0.5 within `horizon` (default 500 / J).
DisconnectionResult disconnection_test(const Flow& flow, std::optional<double> horizon = std::nullopt,
                                       const Vec3& start = displaced_south_pole());

// --- dynamical free energy ------------------------------------------------------------

struct FreeEnergyOptions {
  double initial_time = 100.0;  ///< in units of 1/J
  double horizon = 1e4;         ///< in units of 1/J
  double tolerance = 1e-3;
  IntegratorConfig integrator{};
};

struct FreeEnergyEstimate {
  double s = 0.0;
  /// -s <O>_inf evaluated in the late-time state; for the variance bias
  /// <O>_inf = 1 - (late-time mean n_z)^2.
  double phi = 0.0;
  /// -s times the late-time average of the instantaneous <O>, i.e. the
  /// growth rate of ln Z_s(t).
  double phi_logz = 0.0;
  bool converged = false;
  bool stationary = false;  ///< late-time state is a fixed point (not an orbit)
  double final_time = 0.0;
  Vec3 late_mean = Vec3::Zero();
  /// Variance bias only: phi on the other basin (start at the north pole).
  std::optional<double> phi_other_basin;

  const char* estimator() const { return stationary ? "fixed_point" : "orbit_average"; }
};

FreeEnergyEstimate free_energy(const BiasSpec& bias, double J, const FreeEnergyOptions& options = {});

enum class TransitionType { kink, jump };

const char* transition_type_name(TransitionType t) noexcept;

struct Transition {
  TransitionType type = TransitionType::kink;
  double s = 0.0;          ///< located s (grid point for kinks, gap midpoint for jumps)
  std::size_t index = 0;   ///< grid index (left index of the gap for jumps)
  double magnitude = 0.0;  ///< |second difference| or |gap|
};

struct FreeEnergyCurve {
  BiasKind kind = BiasKind::linear;
  double J = 1.0;
  std::vector<double> s;
  std::vector<FreeEnergyEstimate> points;
  std::vector<Transition> transitions;
  double tolerance = 1e-3;
};

/// Kinks: isolated peaks of |second differences| above 10x the noise floor
/// max(median |D2|, 2 tol). Jumps: gaps above 10x the local variation,
/// max(median |gap| over 4 gaps on each side, tol). Kinks within three points
/// of a jump are attributed to the jump.
std::vector<Transition> detect_transitions(const std::vector<double>& s, const std::vector<double>& phi,
                                           double tolerance);

FreeEnergyCurve phi_sweep(BiasKind kind, double J, const std::vector<double>& s_grid,
                          const FreeEnergyOptions& options = {}, unsigned workers = 0);

// --- flow-field sampling ----------------------------------------------------------------

enum class Chart { stereographic, yz_cut };

const char* chart_name(Chart c) noexcept;

/// One sampled point: chart position (u, v), chart velocity (du, dv), and the
/// 3-vector position and velocity it came from.
struct FlowSample {
  double u = 0.0, v = 0.0, du = 0.0, dv = 0.0;
  Vec3 n = Vec3::Zero();
  Vec3 f = Vec3::Zero();
};

/// Stereographic chart: w = u + i v over [-extent, extent]^2. yz cut: (y, z)
/// over [-extent, extent]^2 restricted to the unit disk, x = 0.
std::vector<FlowSample> flow_field_grid(const Flow& flow, Chart chart, std::size_t resolution,
                                        double extent = 2.0);

/// dw/dt of the north stereographic chart for a sphere flow at n.
Complex stereo_velocity(const Vec3& n, const Vec3& f);

}  // namespace dimer
