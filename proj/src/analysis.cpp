#include "dimer/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>

#include "dimer/error.hpp"
#include "dimer/parallel.hpp"

namespace dimer {

const char* regime_name(Regime r) noexcept {
  switch (r) {
    case Regime::underdamped: return "underdamped";
    case Regime::critical: return "critical";
    case Regime::overdamped: return "overdamped";
  }
  return "unknown";
}

const char* fixed_point_class_name(FixedPointClass c) noexcept {
  switch (c) {
    case FixedPointClass::repeller: return "repeller";
    case FixedPointClass::attractor: return "attractor";
    case FixedPointClass::saddle: return "saddle";
    case FixedPointClass::center: return "center";
  }
  return "unknown";
}

const char* transition_type_name(TransitionType t) noexcept {
  return t == TransitionType::kink ? "kink" : "jump";
}

const char* chart_name(Chart c) noexcept { return c == Chart::stereographic ? "stereographic" : "yz_cut"; }

Eigen::Matrix3d lindblad_generator(double J, double gamma) {
  Eigen::Matrix3d L;
  L << -gamma, 0.0, 0.0,
       0.0, -gamma, -J,
       0.0, J, 0.0;
  return L;
}

SpectrumRecord linear_spectrum(double J, double gamma) {
  require(std::isfinite(J) && J > 0.0, "J must be positive");
  require(std::isfinite(gamma) && gamma >= 0.0, "gamma must be non-negative");
  const double disc = gamma * gamma - 4.0 * J * J;
  const Complex root = disc >= 0.0 ? Complex(std::sqrt(disc), 0.0) : Complex(0.0, std::sqrt(-disc));
  SpectrumRecord rec;
  rec.eigenvalues = {Complex(-gamma, 0.0), 0.5 * (Complex(-gamma, 0.0) + root),
                     0.5 * (Complex(-gamma, 0.0) - root)};
  const double gap = gamma - 2.0 * J;
  if (std::abs(gap) <= 1e-12 * std::max(1.0, J)) rec.regime = Regime::critical;
  else rec.regime = gap < 0.0 ? Regime::underdamped : Regime::overdamped;
  return rec;
}

namespace {

// Charts: north w = (x + i y)/(1 + z); south w = (x - i y)/(1 - z).
Vec3 chart_point(bool south, double u, double v) {
  const double r2 = u * u + v * v;
  const double inv = 1.0 / (1.0 + r2);
  if (south) return Vec3(2.0 * u * inv, -2.0 * v * inv, (r2 - 1.0) * inv);
  return Vec3(2.0 * u * inv, 2.0 * v * inv, (1.0 - r2) * inv);
}

Eigen::Vector2d chart_velocity(bool south, const Vec3& n, const Vec3& f) {
  if (south) {
    const double den = 1.0 - n.z();
    const Complex dw = Complex(f.x(), -f.y()) / den + Complex(n.x(), -n.y()) * f.z() / (den * den);
    return {dw.real(), dw.imag()};
  }
  const Complex dw = stereo_velocity(n, f);
  return {dw.real(), dw.imag()};
}

struct NewtonOutcome {
  Vec3 n = Vec3::Zero();
  double residual = std::numeric_limits<double>::infinity();
  bool converged = false;
};

NewtonOutcome newton_on_chart(const Flow& flow, bool south, Eigen::Vector2d w) {
  auto G = [&](const Eigen::Vector2d& p) {
    const Vec3 n = chart_point(south, p.x(), p.y());
    return chart_velocity(south, n, flow(n));
  };
  NewtonOutcome out;
  Eigen::Vector2d g = G(w);
  for (int iter = 0; iter < 80; ++iter) {
    const Vec3 n = chart_point(south, w.x(), w.y());
    const double res = flow(n).norm();
    if (res <= 1e-14) break;
    const double h = 1e-7 * (1.0 + w.norm());
    Eigen::Matrix2d jac;
    for (int k = 0; k < 2; ++k) {
      Eigen::Vector2d dp = Eigen::Vector2d::Zero();
      dp(k) = h;
      jac.col(k) = (G(w + dp) - G(w - dp)) / (2.0 * h);
    }
    const double det = jac.determinant();
    if (!std::isfinite(det) || std::abs(det) < 1e-300) break;
    Eigen::Vector2d step = -jac.inverse() * g;
    const double cap = 0.5 * (1.0 + w.norm());
    if (step.norm() > cap) step *= cap / step.norm();
    double lambda = 1.0;
    Eigen::Vector2d w_new = w + step;
    Eigen::Vector2d g_new = G(w_new);
    for (int bt = 0; bt < 12 && g_new.norm() > g.norm(); ++bt) {
      lambda *= 0.5;
      w_new = w + lambda * step;
      g_new = G(w_new);
    }
    const double moved = (w_new - w).norm();
    w = w_new;
    g = g_new;
    if (!std::isfinite(w.norm()) || w.norm() > 1e6) break;
    if (moved <= 1e-15 * (1.0 + w.norm())) break;
  }
  out.n = chart_point(south, w.x(), w.y()).normalized();
  out.residual = flow(out.n).norm();
  out.converged = out.residual <= 1e-8;
  return out;
}

std::array<Complex, 2> eig2(const Eigen::Matrix2d& m) {
  const double tr = m.trace();
  const double det = m.determinant();
  const double disc = 0.25 * tr * tr - det;
  if (disc >= 0.0) {
    const double r = std::sqrt(disc);
    return {Complex(0.5 * tr + r, 0.0), Complex(0.5 * tr - r, 0.0)};
  }
  const double r = std::sqrt(-disc);
  return {Complex(0.5 * tr, r), Complex(0.5 * tr, -r)};
}

Eigen::Matrix2d tangent_jacobian(const Flow& flow, const Vec3& p, const Vec3& e1, const Vec3& e2, double h) {
  auto G = [&](double a, double b) {
    const Vec3 m = a * e1 + b * e2 + std::sqrt(std::max(0.0, 1.0 - a * a - b * b)) * p;
    const Vec3 f = flow(m);
    return Eigen::Vector2d(f.dot(e1), f.dot(e2));
  };
  Eigen::Matrix2d jac;
  jac.col(0) = (G(h, 0.0) - G(-h, 0.0)) / (2.0 * h);
  jac.col(1) = (G(0.0, h) - G(0.0, -h)) / (2.0 * h);
  return jac;
}

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  double m = v[mid];
  if (v.size() % 2 == 0) {
    m = 0.5 * (m + *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid)));
  }
  return m;
}

}  // namespace

Complex stereo_velocity(const Vec3& n, const Vec3& f) {
  const double den = 1.0 + n.z();
  return Complex(f.x(), f.y()) / den - Complex(n.x(), n.y()) * f.z() / (den * den);
}

Classification classify_fixed_point(const Flow& flow, const BlochVector& point) {
  require(flow.on_sphere(), "fixed-point classification needs a sphere flow");
  const Vec3 p = point.vec();
  const double res = flow(p).norm();
  require(res <= 1e-8, "classify_fixed_point: point is not a fixed point (|f| > 1e-8)");

  const Vec3 axis = std::abs(p.x()) < 0.6 ? Vec3::UnitX() : Vec3::UnitY();
  const Vec3 e1 = axis.cross(p).normalized();
  const Vec3 e2 = p.cross(e1);
  const Eigen::Matrix2d jac = tangent_jacobian(flow, p, e1, e2, 1e-6);
  const Eigen::Matrix2d coarse = tangent_jacobian(flow, p, e1, e2, 1e-5);

  Classification c;
  c.eigenvalues = eig2(jac);
  c.step_disagreement = (jac - coarse).cwiseAbs().maxCoeff();
  constexpr double thr = 1e-10;
  const double r1 = c.eigenvalues[0].real();
  const double r2 = c.eigenvalues[1].real();
  if (r1 > thr && r2 > thr) c.kind = FixedPointClass::repeller;
  else if (r1 < -thr && r2 < -thr) c.kind = FixedPointClass::attractor;
  else if ((r1 > thr && r2 < -thr) || (r1 < -thr && r2 > thr)) c.kind = FixedPointClass::saddle;
  else {
    c.kind = FixedPointClass::center;
    c.marginal = true;
  }
  return c;
}

std::array<Complex, 3> ball_jacobian_eigenvalues(const Flow& flow, const Vec3& point) {
  constexpr double h = 1e-6;
  Eigen::Matrix3d jac;
  for (int k = 0; k < 3; ++k) {
    Vec3 dp = Vec3::Zero();
    dp(k) = h;
    jac.col(k) = (flow(point + dp) - flow(point - dp)) / (2.0 * h);
  }
  Eigen::EigenSolver<Eigen::Matrix3d> solver(jac, false);
  const auto ev = solver.eigenvalues();
  return {ev(0), ev(1), ev(2)};
}

FixedPointSearch find_fixed_points(const Flow& flow, const FixedPointOptions& options) {
  flow.validate();
  require(flow.on_sphere(), "find_fixed_points needs a sphere-tangent flow");
  require(options.seeds_per_axis >= 2, "need at least 2 seeds per axis");

  const std::size_t per_axis = options.seeds_per_axis;
  const std::size_t per_chart = per_axis * per_axis;
  std::vector<NewtonOutcome> runs(2 * per_chart);
  parallel_for(runs.size(), std::max(1u, options.workers), [&](std::size_t idx) {
    const bool south = idx >= per_chart;
    const std::size_t k = idx % per_chart;
    const double step = 2.0 * options.seed_extent / static_cast<double>(per_axis - 1);
    const double u = -options.seed_extent + step * static_cast<double>(k % per_axis);
    const double v = -options.seed_extent + step * static_cast<double>(k / per_axis);
    runs[idx] = newton_on_chart(flow, south, Eigen::Vector2d(u, v));
  });

  FixedPointSearch search;
  std::vector<Vec3> found;
  std::vector<double> residuals;
  for (const auto& r : runs) {
    if (!r.converged) {
      if (r.residual < 1e-4) search.complete = false;
      continue;
    }
    bool duplicate = false;
    for (std::size_t j = 0; j < found.size(); ++j) {
      if ((found[j] - r.n).norm() < options.dedup_distance) {
        duplicate = true;
        if (r.residual < residuals[j]) {
          found[j] = r.n;
          residuals[j] = r.residual;
        }
        break;
      }
    }
    if (!duplicate) {
      found.push_back(r.n);
      residuals.push_back(r.residual);
    }
  }
  // a stalled run that sits on a confirmed root is not evidence of a missing one
  if (!search.complete) {
    search.complete = true;
    for (const auto& r : runs) {
      if (r.converged || r.residual >= 1e-4) continue;
      bool near_known = false;
      for (const auto& p : found) near_known = near_known || (p - r.n).norm() < 1e-3;
      if (!near_known) search.complete = false;
    }
  }

  std::vector<std::size_t> order(found.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const Vec3& pa = found[a];
    const Vec3& pb = found[b];
    if (pa.z() != pb.z()) return pa.z() < pb.z();
    if (pa.y() != pb.y()) return pa.y() < pb.y();
    return pa.x() < pb.x();
  });
  for (std::size_t i : order) {
    if (residuals[i] > options.residual_tolerance) continue;
    FixedPointRecord rec;
    rec.location = BlochVector::normalized(found[i]);
    rec.w = stereo_project(rec.location);
    rec.residual = flow(rec.location.vec()).norm();
    rec.classification = classify_fixed_point(flow, rec.location);
    search.points.push_back(rec);
  }
  return search;
}

Vec3 displaced_south_pole() { return Vec3(0.0, 1e-6, -1.0).normalized(); }

Vec3 displaced_north_pole() { return Vec3(0.0, 1e-6, 1.0).normalized(); }

DisconnectionResult disconnection_test(const Flow& flow, std::optional<double> horizon, const Vec3& start) {
  flow.validate();
  require(flow.on_sphere(), "disconnection test needs a pure-state flow");
  const double t_end = horizon.value_or(500.0 / flow.J);
  require(t_end > 0.0, "horizon must be positive");
  IntegratorConfig cfg;
  cfg.rel_tol = 1e-9;
  cfg.abs_tol = 1e-11;
  const double out[] = {t_end};
  const Trajectory traj = integrate_ode(flow, start, {0.0, t_end}, cfg, out);
  DisconnectionResult r;
  r.max_nz = traj.max_nz;
  r.connected = traj.max_nz > 0.5;
  return r;
}

namespace {

struct WindowAverages {
  Vec3 mean = Vec3::Zero();
  double mean_nz2 = 0.0;
};

// State: n (3), int n (3), int n_z^2 (1)
FreeEnergyEstimate estimate_phi(const BiasSpec& bias, double J, const FreeEnergyOptions& options,
                                const Vec3& start) {
  FreeEnergyEstimate est;
  est.s = bias.s;
  const Flow flow = Flow::biased(J, bias);
  const double t_first = options.initial_time / J;
  const double t_last = options.horizon / J;

  std::vector<double> checkpoints;
  for (double t = t_first; t < t_last; t *= 2.0) {
    checkpoints.push_back(0.5 * t);
    checkpoints.push_back(t);
  }
  checkpoints.push_back(0.5 * t_last);
  checkpoints.push_back(t_last);
  std::sort(checkpoints.begin(), checkpoints.end());
  checkpoints.erase(std::unique(checkpoints.begin(), checkpoints.end()), checkpoints.end());

  StateVec<7> y;
  y << start, Vec3::Zero(), 0.0;
  auto rhs = [&](double, const StateVec<7>& s) -> StateVec<7> {
    const Vec3 n = s.head<3>();
    StateVec<7> d;
    d << flow(n), n, n.z() * n.z();
    return d;
  };
  auto post = [&](double, StateVec<7>& s) {
    s.head<3>().normalize();
    return true;
  };

  std::vector<StateVec<7>> at_checkpoint;
  double t = 0.0;
  std::optional<double> previous_phi, previous_logz;
  for (double target : checkpoints) {
    StateVec<7> last = y;
    const double out[] = {target};
    const OdeStatus status = dopri5<7>(rhs, y, t, target, options.integrator, out, post,
                                       [&](double, const StateVec<7>& s) { last = s; });
    if (!status.completed) {
      est.converged = false;
      break;
    }
    y = last;
    t = target;
    at_checkpoint.push_back(y);

    const double half = 0.5 * t;
    const auto it = std::find(checkpoints.begin(), checkpoints.end(), half);
    if (it == checkpoints.end() || t < t_first) continue;
    const StateVec<7>& early = at_checkpoint[static_cast<std::size_t>(it - checkpoints.begin())];
    const double window = t - half;
    const Vec3 mean = (y.segment<3>(3) - early.segment<3>(3)) / window;
    const double mean_nz2 = (y(6) - early(6)) / window;

    double phi, logz;
    if (bias.kind == BiasKind::linear) {
      phi = -bias.s * mean.z();
      logz = phi;
    } else {
      phi = -bias.s * (1.0 - mean.z() * mean.z());
      logz = -bias.s * (1.0 - mean_nz2);
    }
    est.phi = phi;
    est.phi_logz = logz;
    est.final_time = t;
    est.late_mean = mean;
    est.stationary = (mean_nz2 - mean.z() * mean.z()) <= 1e-6 && mean.norm() > 1.0 - 1e-6;
    if (previous_phi && std::abs(phi - *previous_phi) <= options.tolerance &&
        std::abs(logz - *previous_logz) <= options.tolerance) {
      est.converged = true;
      break;
    }
    previous_phi = phi;
    previous_logz = logz;
  }
  return est;
}

}  // namespace

FreeEnergyEstimate free_energy(const BiasSpec& bias, double J, const FreeEnergyOptions& options) {
  bias.validate();
  require(std::isfinite(J) && J > 0.0, "J must be positive");
  require(options.initial_time > 0.0 && options.horizon >= options.initial_time,
          "free-energy horizon must exceed the initial averaging time");
  require(options.tolerance > 0.0, "free-energy tolerance must be positive");
  options.integrator.validate();

  if (bias.s == 0.0) {
    FreeEnergyEstimate est;
    est.converged = true;
    if (bias.kind == BiasKind::variance) est.phi_other_basin = 0.0;
    return est;
  }
  FreeEnergyEstimate est = estimate_phi(bias, J, options, displaced_south_pole());
  if (bias.kind == BiasKind::variance) {
    est.phi_other_basin = estimate_phi(bias, J, options, displaced_north_pole()).phi;
  }
  return est;
}

std::vector<Transition> detect_transitions(const std::vector<double>& s, const std::vector<double>& phi,
                                           double tolerance) {
  require(s.size() == phi.size(), "s grid and phi samples differ in length");
  std::vector<Transition> out;
  const std::size_t n = phi.size();
  if (n < 3) return out;

  std::vector<double> gap(n - 1);
  for (std::size_t i = 0; i + 1 < n; ++i) gap[i] = phi[i + 1] - phi[i];

  // jumps
  std::vector<Transition> jumps;
  for (std::size_t i = 0; i < gap.size(); ++i) {
    std::vector<double> left, right;
    for (std::size_t k = 1; k <= 4; ++k) {
      if (i >= k) left.push_back(std::abs(gap[i - k]));
      if (i + k < gap.size()) right.push_back(std::abs(gap[i + k]));
    }
    const double floor = std::max({median(left), median(right), tolerance});
    if (std::abs(gap[i]) > 10.0 * floor) {
      jumps.push_back({TransitionType::jump, 0.5 * (s[i] + s[i + 1]), i, std::abs(gap[i])});
    }
  }
  // adjacent flagged gaps describe one jump; keep the largest
  for (std::size_t k = 0; k < jumps.size(); ++k) {
    if (!out.empty() && out.back().type == TransitionType::jump && jumps[k].index == out.back().index + 1) {
      if (jumps[k].magnitude > out.back().magnitude) out.back() = jumps[k];
      continue;
    }
    out.push_back(jumps[k]);
  }

  // kinks
  std::vector<double> d2(n, 0.0);
  std::vector<double> abs_d2;
  for (std::size_t i = 1; i + 1 < n; ++i) {
    d2[i] = phi[i + 1] - 2.0 * phi[i] + phi[i - 1];
    abs_d2.push_back(std::abs(d2[i]));
  }
  const double floor2 = std::max(median(abs_d2), 2.0 * tolerance);
  const std::size_t jump_count = out.size();
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const double m = std::abs(d2[i]);
    if (m <= 10.0 * floor2) continue;
    bool peak = true;
    for (std::size_t k = 1; k <= 2 && peak; ++k) {
      if (i >= k + 1 && std::abs(d2[i - k]) > m) peak = false;
      if (i + k + 1 < n && std::abs(d2[i + k]) > m) peak = false;
    }
    if (!peak) continue;
    bool near_jump = false;
    for (std::size_t j = 0; j < jump_count; ++j) {
      const auto a = static_cast<long>(out[j].index);
      const auto b = a + 1;
      const auto ii = static_cast<long>(i);
      near_jump = near_jump || (ii >= a - 3 && ii <= b + 3);
    }
    if (near_jump) continue;
    out.push_back({TransitionType::kink, s[i], i, m});
  }
  std::sort(out.begin(), out.end(), [](const Transition& a, const Transition& b) { return a.s < b.s; });
  return out;
}

FreeEnergyCurve phi_sweep(BiasKind kind, double J, const std::vector<double>& s_grid,
                          const FreeEnergyOptions& options, unsigned workers) {
  require(!s_grid.empty(), "phi_sweep needs a non-empty s grid");
  for (std::size_t i = 1; i < s_grid.size(); ++i) {
    require(s_grid[i] > s_grid[i - 1], "phi_sweep needs a strictly increasing s grid");
  }
  FreeEnergyCurve curve;
  curve.kind = kind;
  curve.J = J;
  curve.s = s_grid;
  curve.tolerance = options.tolerance;
  curve.points.resize(s_grid.size());
  parallel_for(s_grid.size(), resolve_workers(workers), [&](std::size_t i) {
    curve.points[i] = free_energy(BiasSpec{kind, s_grid[i]}, J, options);
  });
  std::vector<double> phi(s_grid.size());
  for (std::size_t i = 0; i < phi.size(); ++i) phi[i] = curve.points[i].phi;
  curve.transitions = detect_transitions(s_grid, phi, options.tolerance);
  return curve;
}

std::vector<FlowSample> flow_field_grid(const Flow& flow, Chart chart, std::size_t resolution, double extent) {
  flow.validate();
  require(resolution >= 2, "flow-field resolution must be at least 2");
  require(extent > 0.0, "flow-field extent must be positive");
  std::vector<FlowSample> rows;
  rows.reserve(resolution * resolution);
  const double step = 2.0 * extent / static_cast<double>(resolution - 1);
  for (std::size_t j = 0; j < resolution; ++j) {
    for (std::size_t i = 0; i < resolution; ++i) {
      FlowSample row;
      row.u = -extent + step * static_cast<double>(i);
      row.v = -extent + step * static_cast<double>(j);
      if (chart == Chart::stereographic) {
        require(flow.on_sphere(), "stereographic sampling needs a sphere flow");
        row.n = chart_point(false, row.u, row.v);
        row.f = flow(row.n);
        const Complex dw = stereo_velocity(row.n, row.f);
        row.du = dw.real();
        row.dv = dw.imag();
      } else {
        if (row.u * row.u + row.v * row.v > 1.0 + 1e-12) continue;
        row.n = Vec3(0.0, row.u, row.v);
        row.f = flow(row.n);
        row.du = row.f.y();
        row.dv = row.f.z();
      }
      rows.push_back(row);
    }
  }
  return rows;
}

}  // namespace dimer
