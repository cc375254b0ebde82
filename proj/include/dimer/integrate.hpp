#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "dimer/core.hpp"
#include "dimer/error.hpp"
#include "dimer/flows.hpp"
#include "dimer/ode.hpp"

namespace dimer {

/// Time series of Bloch (or ball) vectors with optional extra channels.
struct Trajectory {
  std::vector<double> times;
  std::vector<Vec3> states;
  std::vector<double> radial;    ///< d(t), when integrated
  std::vector<double> log_norm;  ///< ln <psi|psi>, when integrated
  double max_nz = -1.0;          ///< largest n_z seen at any internal step
  double max_norm_drift = 0.0;   ///< largest | |n| - 1 | before renormalization

  std::size_t size() const { return times.size(); }
  bool empty() const { return times.empty(); }
  const Vec3& final_state() const { return states.back(); }
  /// Linear interpolation; clamps outside the recorded span.
  Vec3 at(double t) const;
};

class NonConvergenceError : public Error {
 public:
  NonConvergenceError(const std::string& what, Trajectory partial)
      : Error(Errc::non_convergence, what), partial_(std::move(partial)) {}

  const Trajectory& partial() const noexcept { return partial_; }

 private:
  Trajectory partial_;
};

enum class Domain { sphere, ball };

struct TimeSpan {
  double t0 = 0.0;
  double t1 = 1.0;
};

using TimeField = std::function<Vec3(double t, const Vec3& n)>;

/// Adaptive embedded Runge-Kutta integration. Sphere trajectories are
/// projected back to |n| = 1 after every accepted step when cfg.renormalize.
Trajectory integrate_ode(const TimeField& field, const Vec3& n0, TimeSpan span,
                         const IntegratorConfig& cfg, Domain domain,
                         std::span<const double> output_times = {});
Trajectory integrate_ode(const Flow& flow, const Vec3& n0, TimeSpan span, const IntegratorConfig& cfg,
                         std::span<const double> output_times = {});

/// Integrates the decoupled pure-state pair (angular flow, radial rate) and
/// fills Trajectory::radial with d(t).
Trajectory integrate_angular_radial(double J, double gamma, const BallState& start, TimeSpan span,
                                    const IntegratorConfig& cfg, std::span<const double> output_times = {});

std::vector<double> uniform_grid(double t0, double t1, std::size_t intervals);

enum class SdeScheme {
  heun,           ///< Stratonovich stochastic Heun
  euler_maruyama  ///< Ito Euler-Maruyama with explicit Ito drift; cross-check only
};

struct SdeConfig {
  double dt = 1e-3;
  double t0 = 0.0;
  double t1 = 1.0;
  std::size_t output_every = 1;  ///< record every k-th step (plus the start)
  SdeScheme scheme = SdeScheme::heun;

  std::size_t step_count() const;
  void validate() const;
};

/// Wiener increments of one trajectory, replayable by the exact oracle.
struct NoisePath {
  double dt = 0.0;
  std::vector<double> increments;
};

/// Deterministic per-trajectory generator derived from (master_seed, index).
std::mt19937_64 trajectory_rng(std::uint64_t master_seed, std::uint64_t index);

Trajectory integrate_sde(double J, const FieldSchedule& schedule, const NoiseSpec& noise,
                         std::uint64_t trajectory_index, const Vec3& n0, const SdeConfig& cfg,
                         NoisePath* record = nullptr);

/// Replays a recorded path. A path recorded at dt/k is summed in blocks of k,
/// so coarse and fine runs see the same Brownian motion.
Trajectory integrate_sde_driven(double J, const FieldSchedule& schedule, double gamma, const NoisePath& path,
                                const Vec3& n0, const SdeConfig& cfg);

/// Mergeable Monte-Carlo accumulator over a fixed output grid.
class EnsembleStats {
 public:
  static constexpr std::size_t kFidelityBins = 20;

  EnsembleStats() = default;
  explicit EnsembleStats(std::vector<double> grid);

  void add(const Trajectory& traj);
  void merge(const EnsembleStats& other);

  const std::vector<double>& grid() const { return grid_; }
  std::size_t sample_count() const { return count_; }
  const std::vector<Vec3>& mean() const { return mean_; }
  Vec3 variance(std::size_t i) const;
  Vec3 standard_error(std::size_t i) const;
  std::size_t crossing_count() const { return crossings_; }
  double crossing_fraction() const;
  /// Mean of |<dn,up|psi(T)>|^2 = (1 + n_z(T)) / 2 at the last grid point.
  double mean_final_fidelity() const;
  const std::array<std::size_t, kFidelityBins>& fidelity_histogram() const { return histogram_; }

 private:
  std::vector<double> grid_;
  std::size_t count_ = 0;
  std::vector<Vec3> mean_;
  std::vector<Vec3> m2_;
  std::size_t crossings_ = 0;
  std::array<std::size_t, kFidelityBins> histogram_{};
};

struct EnsembleSpec {
  double J = 1.0;
  FieldSchedule schedule = FieldSchedule::constant(0.0);
  NoiseSpec noise;
  Vec3 n0 = -Vec3::UnitZ();
  SdeConfig sde;
  std::size_t trajectories = 1;

  void validate() const;
};

/// Parallel map over trajectory indices with fixed-order merging, so the
/// result does not depend on `workers`.
EnsembleStats run_ensemble(const EnsembleSpec& spec, unsigned workers = 0);

struct SweepResult {
  Trajectory trajectory;
  double final_fidelity = 0.0;
};

struct SweepOptions {
  double sde_dt = 1e-3;
  std::uint64_t trajectory_index = 0;
  std::size_t output_points = 1000;
};

/// Drives |up,dn> (south pole by default) through the field schedule.
/// Without noise the adaptive integrator is used; with noise one stochastic
/// trajectory is generated.
SweepResult run_sweep(double J, const FieldSchedule& schedule, const std::optional<NoiseSpec>& noise,
                      const IntegratorConfig& cfg, const SweepOptions& options = {},
                      const Vec3& n0 = -Vec3::UnitZ());

inline double fidelity_from_bloch(const Vec3& n) { return 0.5 * (1.0 + n.z()); }

unsigned resolve_workers(unsigned requested);

}  // namespace dimer
