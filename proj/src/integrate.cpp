#include "dimer/integrate.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "dimer/parallel.hpp"

namespace dimer {

Vec3 Trajectory::at(double t) const {
  require(!times.empty(), "cannot sample an empty trajectory");
  if (t <= times.front()) return states.front();
  if (t >= times.back()) return states.back();
  const auto it = std::upper_bound(times.begin(), times.end(), t);
  const std::size_t hi = static_cast<std::size_t>(it - times.begin());
  const std::size_t lo = hi - 1;
  const double w = (t - times[lo]) / (times[hi] - times[lo]);
  return (1.0 - w) * states[lo] + w * states[hi];
}

namespace {

void check_start(const Vec3& n0, Domain domain) {
  if (domain == Domain::sphere) {
    require(std::abs(n0.norm() - 1.0) <= kUnitTolerance, "sphere flows need a unit start vector",
            Errc::normalization);
  } else {
    require(n0.norm() <= 1.0 + kUnitTolerance, "ball flows need a start vector inside the unit ball");
  }
}

void check_output_times(std::span<const double> out, TimeSpan span) {
  for (std::size_t i = 0; i < out.size(); ++i) {
    require(out[i] >= span.t0 && out[i] <= span.t1, "output times must lie inside the time span");
    if (i > 0) require(out[i] > out[i - 1], "output times must be strictly increasing");
  }
}

}  // namespace

Trajectory integrate_ode(const TimeField& field, const Vec3& n0, TimeSpan span, const IntegratorConfig& cfg,
                         Domain domain, std::span<const double> output_times) {
  cfg.validate();
  require(span.t1 >= span.t0, "time span must be non-decreasing");
  check_start(n0, domain);
  check_output_times(output_times, span);

  Trajectory traj;
  traj.max_nz = n0.z();
  auto rhs = [&](double t, const StateVec<3>& y) -> StateVec<3> { return field(t, y); };
  auto post = [&](double, StateVec<3>& y) {
    traj.max_nz = std::max(traj.max_nz, y.z());
    if (domain == Domain::sphere) {
      const double norm = y.norm();
      traj.max_norm_drift = std::max(traj.max_norm_drift, std::abs(norm - 1.0));
      if (cfg.renormalize) {
        y /= norm;
        return true;
      }
    }
    return false;
  };
  auto observe = [&](double t, const StateVec<3>& y) {
    if (!traj.times.empty() && t <= traj.times.back()) return;
    traj.times.push_back(t);
    traj.states.push_back(y);
  };
  const OdeStatus status = dopri5<3>(rhs, n0, span.t0, span.t1, cfg, output_times, post, observe);
  if (!status.completed) {
    std::ostringstream os;
    os << "ODE integration did not converge: stopped at t = " << status.t_reached << " after "
       << status.steps << " steps";
    throw NonConvergenceError(os.str(), std::move(traj));
  }
  return traj;
}

Trajectory integrate_ode(const Flow& flow, const Vec3& n0, TimeSpan span, const IntegratorConfig& cfg,
                         std::span<const double> output_times) {
  flow.validate();
  return integrate_ode([&flow](double, const Vec3& n) { return flow(n); }, n0, span, cfg,
                       flow.on_sphere() ? Domain::sphere : Domain::ball, output_times);
}

Trajectory integrate_angular_radial(double J, double gamma, const BallState& start, TimeSpan span,
                                    const IntegratorConfig& cfg, std::span<const double> output_times) {
  cfg.validate();
  check_output_times(output_times, span);
  StateVec<4> y0;
  y0 << start.n.vec(), start.d;
  Trajectory traj;
  traj.max_nz = start.n.z();
  auto rhs = [&](double, const StateVec<4>& y) -> StateVec<4> {
    const Vec3 n = y.head<3>();
    StateVec<4> dy;
    dy << angular_field(n, J, gamma), radial_rate(n.z(), y(3), gamma);
    return dy;
  };
  auto post = [&](double, StateVec<4>& y) {
    const double norm = y.head<3>().norm();
    traj.max_norm_drift = std::max(traj.max_norm_drift, std::abs(norm - 1.0));
    traj.max_nz = std::max(traj.max_nz, y(2) / norm);
    if (!cfg.renormalize) return false;
    y.head<3>() /= norm;
    return true;
  };
  auto observe = [&](double t, const StateVec<4>& y) {
    if (!traj.times.empty() && t <= traj.times.back()) return;
    traj.times.push_back(t);
    traj.states.push_back(y.head<3>());
    traj.radial.push_back(y(3));
  };
  const OdeStatus status = dopri5<4>(rhs, y0, span.t0, span.t1, cfg, output_times, post, observe);
  if (!status.completed) {
    throw NonConvergenceError("angular/radial integration did not converge", std::move(traj));
  }
  return traj;
}

std::vector<double> uniform_grid(double t0, double t1, std::size_t intervals) {
  require(intervals >= 1, "grid needs at least one interval");
  std::vector<double> grid(intervals + 1);
  for (std::size_t i = 0; i <= intervals; ++i) {
    grid[i] = t0 + (t1 - t0) * static_cast<double>(i) / static_cast<double>(intervals);
  }
  return grid;
}

std::size_t SdeConfig::step_count() const {
  return static_cast<std::size_t>(std::max(1.0, std::round((t1 - t0) / dt)));
}

void SdeConfig::validate() const {
  require(std::isfinite(dt) && dt > 0.0, "SDE step dt must be positive");
  require(t1 > t0, "SDE time span must be non-empty");
  require(output_every >= 1, "output_every must be at least 1");
}

std::mt19937_64 trajectory_rng(std::uint64_t master_seed, std::uint64_t index) {
  // splitmix64 finalizer on both words decorrelates neighbouring indices
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  const std::uint64_t a = mix(master_seed);
  const std::uint64_t b = mix(a ^ mix(index + 0x632be59bd9b4e019ULL));
  std::seed_seq seq{static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                    static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32)};
  return std::mt19937_64(seq);
}

namespace {

template <class Draw>
Trajectory sde_loop(double J, const FieldSchedule& schedule, double amp, double gamma, const Vec3& n0,
                    const SdeConfig& cfg, std::size_t steps, double dt, Draw&& draw) {
  Trajectory traj;
  traj.times.reserve(steps / cfg.output_every + 2);
  traj.states.reserve(steps / cfg.output_every + 2);
  Vec3 n = n0;
  traj.times.push_back(cfg.t0);
  traj.states.push_back(n);
  traj.max_nz = n.z();

  auto diffusion = [](const Vec3& v) { return Vec3(-v.y(), v.x(), 0.0); };
  for (std::size_t k = 0; k < steps; ++k) {
    const double t = cfg.t0 + dt * static_cast<double>(k);
    const double dW = draw(k);
    const Vec3 a0 = unitary_field(n, J, schedule(t));
    const Vec3 b0 = diffusion(n);
    Vec3 next;
    if (cfg.scheme == SdeScheme::heun) {
      const Vec3 pred = n + a0 * dt + b0 * (amp * dW);
      const Vec3 a1 = unitary_field(pred, J, schedule(t + dt));
      const Vec3 b1 = diffusion(pred);
      next = n + 0.5 * (a0 + a1) * dt + 0.5 * (b0 + b1) * (amp * dW);
    } else {
      const Vec3 ito = -gamma * Vec3(n.x(), n.y(), 0.0);
      next = n + (a0 + ito) * dt + b0 * (amp * dW);
    }
    const double norm = next.norm();
    traj.max_norm_drift = std::max(traj.max_norm_drift, std::abs(norm - 1.0));
    require(std::isfinite(norm) && norm > 0.0, "SDE state overflowed", Errc::non_convergence);
    n = next / norm;
    traj.max_nz = std::max(traj.max_nz, n.z());
    if ((k + 1) % cfg.output_every == 0 || k + 1 == steps) {
      const double t_next = (k + 1 == steps) ? cfg.t1 : t + dt;
      if (t_next > traj.times.back()) {
        traj.times.push_back(t_next);
        traj.states.push_back(n);
      }
    }
  }
  return traj;
}

}  // namespace

Trajectory integrate_sde(double J, const FieldSchedule& schedule, const NoiseSpec& noise,
                         std::uint64_t trajectory_index, const Vec3& n0, const SdeConfig& cfg,
                         NoisePath* record) {
  cfg.validate();
  noise.validate();
  require(std::abs(n0.norm() - 1.0) <= kUnitTolerance, "SDE start vector must be a unit vector",
          Errc::normalization);

  const std::size_t steps = cfg.step_count();
  const double dt = (cfg.t1 - cfg.t0) / static_cast<double>(steps);
  const double sqrt_dt = std::sqrt(dt);
  const double amp = noise.amplitude();

  auto rng = trajectory_rng(noise.master_seed, trajectory_index);
  std::normal_distribution<double> normal(0.0, 1.0);
  if (record) {
    record->dt = dt;
    record->increments.clear();
    record->increments.reserve(steps);
  }
  return sde_loop(J, schedule, amp, noise.gamma(), n0, cfg, steps, dt, [&](std::size_t) {
    const double dW = amp > 0.0 ? sqrt_dt * normal(rng) : 0.0;
    if (record) record->increments.push_back(dW);
    return dW;
  });
}

Trajectory integrate_sde_driven(double J, const FieldSchedule& schedule, double gamma, const NoisePath& path,
                                const Vec3& n0, const SdeConfig& cfg) {
  cfg.validate();
  require(gamma >= 0.0, "dephasing rate must be non-negative", Errc::invalid_argument);
  require(std::abs(n0.norm() - 1.0) <= kUnitTolerance, "SDE start vector must be a unit vector",
          Errc::normalization);
  const std::size_t steps = cfg.step_count();
  const double dt = (cfg.t1 - cfg.t0) / static_cast<double>(steps);
  require(!path.increments.empty() && path.increments.size() % steps == 0,
          "noise path length is not a multiple of the step count", Errc::invalid_argument);
  const std::size_t fine = path.increments.size() / steps;
  const double amp = std::sqrt(2.0 * gamma);
  return sde_loop(J, schedule, amp, gamma, n0, cfg, steps, dt, [&](std::size_t k) {
    double dW = 0.0;
    for (std::size_t j = 0; j < fine; ++j) dW += path.increments[k * fine + j];
    return dW;
  });
}

EnsembleStats::EnsembleStats(std::vector<double> grid)
    : grid_(std::move(grid)), mean_(grid_.size(), Vec3::Zero()), m2_(grid_.size(), Vec3::Zero()) {}

void EnsembleStats::add(const Trajectory& traj) {
  ++count_;
  const double inv = 1.0 / static_cast<double>(count_);
  for (std::size_t i = 0; i < grid_.size(); ++i) {
    const Vec3 x = traj.at(grid_[i]);
    const Vec3 delta = x - mean_[i];
    mean_[i] += delta * inv;
    m2_[i] += delta.cwiseProduct(x - mean_[i]);
  }
  if (traj.max_nz > 0.0) ++crossings_;
  const double f = fidelity_from_bloch(traj.final_state());
  const auto bin = std::min<std::size_t>(kFidelityBins - 1,
                                         static_cast<std::size_t>(std::max(0.0, f) * kFidelityBins));
  ++histogram_[bin];
}

void EnsembleStats::merge(const EnsembleStats& other) {
  if (other.count_ == 0) return;
  if (count_ == 0) {
    *this = other;
    return;
  }
  require(grid_ == other.grid_, "cannot merge ensembles on different grids");
  const double na = static_cast<double>(count_);
  const double nb = static_cast<double>(other.count_);
  const double n = na + nb;
  for (std::size_t i = 0; i < grid_.size(); ++i) {
    const Vec3 delta = other.mean_[i] - mean_[i];
    mean_[i] = (na * mean_[i] + nb * other.mean_[i]) / n;
    m2_[i] += other.m2_[i] + delta.cwiseProduct(delta) * (na * nb / n);
  }
  count_ += other.count_;
  crossings_ += other.crossings_;
  for (std::size_t b = 0; b < kFidelityBins; ++b) histogram_[b] += other.histogram_[b];
}

Vec3 EnsembleStats::variance(std::size_t i) const {
  if (count_ < 2) return Vec3::Zero();
  return m2_.at(i) / static_cast<double>(count_ - 1);
}

Vec3 EnsembleStats::standard_error(std::size_t i) const {
  if (count_ < 2) return Vec3::Zero();
  return (variance(i) / static_cast<double>(count_)).cwiseSqrt();
}

double EnsembleStats::crossing_fraction() const {
  return count_ == 0 ? 0.0 : static_cast<double>(crossings_) / static_cast<double>(count_);
}

double EnsembleStats::mean_final_fidelity() const {
  require(count_ > 0 && !mean_.empty(), "empty ensemble has no fidelity");
  return fidelity_from_bloch(mean_.back());
}

void EnsembleSpec::validate() const {
  require(std::isfinite(J) && J > 0.0, "J must be positive");
  schedule.validate();
  noise.validate();
  sde.validate();
  require(trajectories >= 1, "ensemble needs at least one trajectory");
}

unsigned resolve_workers(unsigned requested) {
  if (requested > 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

EnsembleStats run_ensemble(const EnsembleSpec& spec, unsigned workers) {
  spec.validate();
  constexpr std::size_t kBlock = 64;
  const std::size_t steps = spec.sde.step_count();
  const double dt = (spec.sde.t1 - spec.sde.t0) / static_cast<double>(steps);
  std::vector<double> grid;
  for (std::size_t k = 0; k <= steps; k += spec.sde.output_every) {
    grid.push_back(spec.sde.t0 + dt * static_cast<double>(k));
  }
  if (steps % spec.sde.output_every != 0) grid.push_back(spec.sde.t1);
  grid.back() = spec.sde.t1;

  const std::size_t blocks = (spec.trajectories + kBlock - 1) / kBlock;
  std::vector<EnsembleStats> partial(blocks, EnsembleStats(grid));
  parallel_for(blocks, resolve_workers(workers), [&](std::size_t b) {
    const std::size_t begin = b * kBlock;
    const std::size_t end = std::min(spec.trajectories, begin + kBlock);
    for (std::size_t i = begin; i < end; ++i) {
      partial[b].add(integrate_sde(spec.J, spec.schedule, spec.noise, i, spec.n0, spec.sde));
    }
  });
  EnsembleStats total(grid);
  for (const auto& p : partial) total.merge(p);
  return total;
}

SweepResult run_sweep(double J, const FieldSchedule& schedule, const std::optional<NoiseSpec>& noise,
                      const IntegratorConfig& cfg, const SweepOptions& options, const Vec3& n0) {
  schedule.validate();
  require(J > 0.0, "J must be positive");
  require(options.output_points >= 1, "sweep needs at least one output point");
  const double T = schedule.T;
  SweepResult result;
  if (!noise || noise->variance_rate == 0.0) {
    const auto grid = uniform_grid(0.0, T, options.output_points);
    result.trajectory = integrate_ode(
        [&](double t, const Vec3& n) { return unitary_field(n, J, schedule(t)); }, n0, {0.0, T}, cfg,
        Domain::sphere, grid);
  } else {
    SdeConfig sde;
    sde.dt = options.sde_dt;
    sde.t0 = 0.0;
    sde.t1 = T;
    sde.output_every = std::max<std::size_t>(1, sde.step_count() / options.output_points);
    result.trajectory = integrate_sde(J, schedule, *noise, options.trajectory_index, n0, sde);
  }
  result.final_fidelity = fidelity_from_bloch(result.trajectory.final_state());
  return result;
}

}  // namespace dimer
