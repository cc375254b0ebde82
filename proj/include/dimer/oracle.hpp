#pragma once

// Exact small-matrix quantum evolution used to arbitrate the conventions of
// the Bloch-vector flows.
//
// Pseudospin generator: i psi' = (H - i kappa B) psi with H = (J/2) T_x + (h/2) T_z,
// so kappa = 0 precesses exactly as n' = (J x + h z) x n. B is the bias
// observable O (unnormalized mode) or O - <O> (normalized, nonlinear mode).
//
// Two-spin generator, in the same units:
//   H4 = (J/4) sigma_1 . sigma_2 - (h + eta)/4 (sigma_1^z - sigma_2^z)
// whose restriction to span{|dn,up>, |up,dn>} is (J/2) T_x + (h + eta)/2 T_z - J/4.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dimer/core.hpp"
#include "dimer/flows.hpp"
#include "dimer/integrate.hpp"

namespace dimer {

enum class EvolutionMode { normalized, unnormalized };

struct OracleBias {
  BiasKind kind = BiasKind::linear;
  double kappa = 0.0;
};

/// ln Z(t) alongside the running bias integral -2 kappa int <O>.
struct LogNormRecord {
  std::vector<double> times;
  std::vector<double> log_z;
  std::vector<double> bias_integral;
};

struct PseudoSpinEvolution {
  std::vector<double> times;
  std::vector<PseudoSpinState> states;  ///< normalized
  LogNormRecord record;

  Trajectory bloch() const;
};

/// Bias generator B for the spinor, evaluated on its normalized state.
Mat2c bias_observable(BiasKind kind, const PseudoSpinState& psi);

PseudoSpinEvolution evolve_pseudospin(double J, double h, const std::optional<OracleBias>& bias,
                                      const PseudoSpinState& psi0, TimeSpan span, EvolutionMode mode,
                                      const IntegratorConfig& cfg,
                                      std::span<const double> output_times = {});

/// Bloch velocity of the normalized oracle dynamics at n, from
/// n_k' = 2 Re <psi| T_k |psi'>.
Vec3 oracle_velocity(const Vec3& n, double J, const std::optional<OracleBias>& bias);

Mat4c two_spin_hamiltonian(double J, double h);

struct TwoSpinEvolution {
  std::vector<double> times;
  std::vector<TwoSpinState> states;
  std::vector<double> residuals;  ///< weight outside the zero-magnetization subspace

  double max_residual() const;
  Trajectory bloch() const;
};

/// Optional z-noise drive: segment k of length path.dt carries the constant
/// field eta_k = amplitude * dW_k / dt.
struct NoiseDrive {
  const NoisePath* path = nullptr;
  double amplitude = 0.0;
  std::size_t record_every = 1;
};

TwoSpinEvolution evolve_two_spin(double J, const FieldSchedule& schedule, const TwoSpinState& psi0,
                                 TimeSpan span, const IntegratorConfig& cfg,
                                 const std::optional<NoiseDrive>& noise = std::nullopt,
                                 std::span<const double> output_times = {});

struct KappaFit {
  BiasKind kind = BiasKind::linear;
  double kappa_per_s = 0.0;
  double max_residual = 0.0;
};

struct DiscrepancyNote {
  std::string subject;
  std::string description;
  double max_deviation = 0.0;
};

struct CalibrationReport {
  std::uint64_t seed = 0;
  std::size_t samples = 0;
  double J = 1.0;
  std::vector<KappaFit> fits;
  std::vector<DiscrepancyNote> notes;

  const KappaFit& fit(BiasKind kind) const;
  std::string to_json() const;
};

struct CalibrationOptions {
  std::size_t samples = 2000;
  std::uint64_t seed = 20240501;
  double J = 1.0;
  double threshold = 1e-10;
};

/// Least-squares fit of kappa(s) between oracle velocities and the canonical
/// biased fields. Throws Errc::calibration_failure above options.threshold.
CalibrationReport calibrate(const CalibrationOptions& options = {});

std::vector<Vec3> random_unit_vectors(std::size_t count, std::uint64_t seed);

}  // namespace dimer
