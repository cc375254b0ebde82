#pragma once

// Adaptive Dormand-Prince 5(4) stepper over fixed-size Eigen states.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>

#include <Eigen/Dense>

#include "dimer/error.hpp"

namespace dimer {

struct IntegratorConfig {
  double rel_tol = 1e-10;
  double abs_tol = 1e-12;
  double dt_init = 1e-3;
  double dt_max = 0.25;
  bool renormalize = true;
  std::size_t max_steps = 20'000'000;

  void validate() const {
    require(rel_tol > 0.0 && abs_tol > 0.0, "integrator tolerances must be positive");
    require(dt_init > 0.0 && dt_max > 0.0, "integrator steps must be positive");
    require(max_steps > 0, "max_steps must be positive");
  }
};

template <int N>
using StateVec = Eigen::Matrix<double, N, 1>;

struct OdeStatus {
  bool completed = true;
  std::size_t steps = 0;
  std::size_t rejected = 0;
  double t_reached = 0.0;
};

/// Integrates y' = rhs(t, y) from t0 to t1.
///
/// `post_step(t, y)` runs after every accepted step and may modify y in place
/// (projections, rescaling). `observe(t, y)` sees t0 and then either every
/// accepted step (empty `output_times`) or exactly the requested output times,
/// which must be increasing and inside [t0, t1].
template <int N, class Rhs, class PostStep, class Observe>
OdeStatus dopri5(Rhs&& rhs, StateVec<N> y, double t0, double t1, const IntegratorConfig& cfg,
                 std::span<const double> output_times, PostStep&& post_step, Observe&& observe) {
  using V = StateVec<N>;
  constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  constexpr double a21 = 1.0 / 5;
  constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                   a54 = -212.0 / 729;
  constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                   a65 = -5103.0 / 18656;
  constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                   b6 = 11.0 / 84;
  constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                   e6 = 22.0 / 525, e7 = -1.0 / 40;

  OdeStatus status;
  status.t_reached = t0;
  double t = t0;
  observe(t, static_cast<const V&>(y));

  std::size_t next_out = 0;
  while (next_out < output_times.size() && output_times[next_out] <= t0) ++next_out;
  if (t1 <= t0) return status;

  const bool record_all = output_times.empty();
  double h = std::min({cfg.dt_init, cfg.dt_max, t1 - t0});
  V k1 = rhs(t, y);
  V k2, k3, k4, k5, k6, k7, y_new, err;
  double err_prev = 1e-4;

  while (t < t1) {
    if (status.steps >= cfg.max_steps) {
      status.completed = false;
      return status;
    }
    double target = t1;
    if (!record_all && next_out < output_times.size()) target = std::min(target, output_times[next_out]);
    double hs = h;
    bool lands = false;
    if (t + hs >= target || target - (t + hs) < 1e-12 * std::max(1.0, std::abs(target))) {
      hs = target - t;
      lands = true;
    }

    k2 = rhs(t + c2 * hs, y + hs * (a21 * k1));
    k3 = rhs(t + c3 * hs, y + hs * (a31 * k1 + a32 * k2));
    k4 = rhs(t + c4 * hs, y + hs * (a41 * k1 + a42 * k2 + a43 * k3));
    k5 = rhs(t + c5 * hs, y + hs * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
    k6 = rhs(t + hs, y + hs * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
    y_new = y + hs * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
    k7 = rhs(t + hs, y_new);
    err = hs * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);

    double acc = 0.0;
    for (int i = 0; i < y.size(); ++i) {
      const double sc = cfg.abs_tol + cfg.rel_tol * std::max(std::abs(y(i)), std::abs(y_new(i)));
      acc += (err(i) / sc) * (err(i) / sc);
    }
    double err_norm = std::sqrt(acc / static_cast<double>(y.size()));
    if (!std::isfinite(err_norm)) err_norm = 1e10;
    ++status.steps;

    if (err_norm <= 1.0) {
      t = lands ? target : t + hs;
      y = y_new;
      const bool modified = post_step(t, y);
      k1 = modified ? V(rhs(t, y)) : k7;
      status.t_reached = t;
      if (record_all) {
        observe(t, static_cast<const V&>(y));
      } else {
        while (next_out < output_times.size() && output_times[next_out] <= t) {
          observe(t, static_cast<const V&>(y));
          ++next_out;
        }
      }
      // PI controller (Hairer & Wanner II.4)
      const double e = std::max(err_norm, 1e-10);
      double fac = 0.9 * std::pow(e, -0.7 / 5.0) * std::pow(err_prev, 0.4 / 5.0);
      fac = std::clamp(fac, 0.2, 5.0);
      err_prev = e;
      // a step shortened to land on a target says nothing about the proposal
      if (!(lands && hs < h)) h = std::min(hs * fac, cfg.dt_max);
    } else {
      ++status.rejected;
      const double fac = std::max(0.2, 0.9 * std::pow(err_norm, -0.2));
      h = hs * fac;
      if (h < 1e-14 * std::max(1.0, std::abs(t))) {
        status.completed = false;
        return status;
      }
    }
  }
  return status;
}

}  // namespace dimer
