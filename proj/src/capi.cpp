#include "dimer/dimer.h"

#include <cstdlib>
#include <cstring>
#include <new>
#include <string>

#include "dimer/analysis.hpp"
#include "dimer/oracle.hpp"

#ifndef DIMER_VERSION_STRING
#define DIMER_VERSION_STRING "0.0.0"
#endif

using namespace dimer;

struct dimer_trajectory {
  Trajectory traj;
};

struct dimer_ensemble {
  EnsembleStats stats;
};

struct dimer_fixed_points {
  FixedPointSearch search;
};

struct dimer_curve {
  FreeEnergyCurve curve;
};

struct dimer_flow_table {
  std::vector<FlowSample> rows;
};

namespace {

thread_local std::string last_error;

dimer_status to_status(Errc code) {
  switch (code) {
    case Errc::invalid_argument: return DIMER_ERR_INVALID_ARGUMENT;
    case Errc::normalization: return DIMER_ERR_NORMALIZATION;
    case Errc::degenerate_projection: return DIMER_ERR_DEGENERATE_PROJECTION;
    case Errc::non_convergence: return DIMER_ERR_NON_CONVERGENCE;
    case Errc::calibration_failure: return DIMER_ERR_CALIBRATION;
    case Errc::internal: return DIMER_ERR_INTERNAL;
  }
  return DIMER_ERR_INTERNAL;
}

template <class Fn>
dimer_status guarded(Fn&& fn) {
  try {
    fn();
    last_error.clear();
    return DIMER_OK;
  } catch (const Error& e) {
    last_error = e.what();
    return to_status(e.code());
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
    return DIMER_ERR_INTERNAL;
  } catch (const std::exception& e) {
    last_error = e.what();
    return DIMER_ERR_INTERNAL;
  }
}

void need(const void* p, const char* what) { require(p != nullptr, std::string(what) + " must not be NULL"); }

Vec3 vec(dimer_vec3 v) { return Vec3(v.x, v.y, v.z); }
dimer_vec3 vec(const Vec3& v) { return {v.x(), v.y(), v.z()}; }
Complex cplx(dimer_complex c) { return Complex(c.re, c.im); }
dimer_complex cplx(Complex c) { return {c.real(), c.imag()}; }

Flow to_flow(const dimer_flow* f) {
  need(f, "flow");
  Flow flow;
  switch (f->kind) {
    case DIMER_FLOW_UNITARY: flow = Flow::unitary(f->J, f->h); break;
    case DIMER_FLOW_LINDBLAD: flow = Flow::lindblad(f->J, f->gamma); break;
    case DIMER_FLOW_ANGULAR: flow = Flow::angular(f->J, f->gamma); break;
    case DIMER_FLOW_BIASED_LINEAR: flow = Flow::biased(f->J, {BiasKind::linear, f->s}); break;
    case DIMER_FLOW_BIASED_VARIANCE: flow = Flow::biased(f->J, {BiasKind::variance, f->s}); break;
    default: throw Error(Errc::invalid_argument, "unknown flow kind");
  }
  flow.validate();
  return flow;
}

IntegratorConfig to_config(const dimer_integrator_config* c) {
  IntegratorConfig cfg;
  if (c) {
    cfg.rel_tol = c->rel_tol;
    cfg.abs_tol = c->abs_tol;
    cfg.dt_init = c->dt_init;
    cfg.dt_max = c->dt_max;
    cfg.renormalize = c->renormalize != 0;
    cfg.max_steps = static_cast<std::size_t>(c->max_steps);
  }
  cfg.validate();
  return cfg;
}

FieldSchedule to_schedule(const dimer_field_schedule* s) {
  need(s, "schedule");
  FieldSchedule fs;
  switch (s->kind) {
    case DIMER_SCHEDULE_CONSTANT: fs = FieldSchedule::constant(s->h0); break;
    case DIMER_SCHEDULE_LINEAR: fs = FieldSchedule::linear(s->h0, s->h1, s->T); break;
    case DIMER_SCHEDULE_TANH: fs = FieldSchedule::tanh(s->h0, s->h1, s->T, s->tanh_steepness); break;
    default: throw Error(Errc::invalid_argument, "unknown schedule kind");
  }
  fs.validate();
  return fs;
}

SdeConfig to_sde(const dimer_sde_config* c) {
  need(c, "sde config");
  SdeConfig cfg;
  cfg.dt = c->dt;
  cfg.t0 = c->t0;
  cfg.t1 = c->t1;
  cfg.output_every = c->output_every;
  require(c->scheme == DIMER_SDE_HEUN || c->scheme == DIMER_SDE_EULER_MARUYAMA, "unknown SDE scheme");
  cfg.scheme = c->scheme == DIMER_SDE_HEUN ? SdeScheme::heun : SdeScheme::euler_maruyama;
  cfg.validate();
  return cfg;
}

BiasKind to_bias(dimer_bias_kind k) {
  require(k == DIMER_BIAS_LINEAR || k == DIMER_BIAS_VARIANCE, "unknown bias kind");
  return k == DIMER_BIAS_LINEAR ? BiasKind::linear : BiasKind::variance;
}

FreeEnergyOptions to_fe_options(const dimer_free_energy_options* o) {
  FreeEnergyOptions opts;
  if (o) {
    opts.initial_time = o->initial_time;
    opts.horizon = o->horizon;
    opts.tolerance = o->tolerance;
  }
  return opts;
}

std::span<const double> times_span(const double* t, std::size_t n) {
  if (n == 0) return {};
  need(t, "output_times");
  return {t, n};
}

dimer_free_energy_estimate to_c(const FreeEnergyEstimate& e) {
  dimer_free_energy_estimate out{};
  out.s = e.s;
  out.phi = e.phi;
  out.phi_logz = e.phi_logz;
  out.converged = e.converged ? 1 : 0;
  out.stationary = e.stationary ? 1 : 0;
  out.final_time = e.final_time;
  out.has_other_basin = e.phi_other_basin ? 1 : 0;
  out.phi_other_basin = e.phi_other_basin.value_or(0.0);
  return out;
}

dimer_fixed_point_class to_c(FixedPointClass c) {
  switch (c) {
    case FixedPointClass::repeller: return DIMER_FP_REPELLER;
    case FixedPointClass::attractor: return DIMER_FP_ATTRACTOR;
    case FixedPointClass::saddle: return DIMER_FP_SADDLE;
    case FixedPointClass::center: return DIMER_FP_CENTER;
  }
  return DIMER_FP_CENTER;
}

const dimer_trajectory* checked(const dimer_trajectory* t, std::size_t i) {
  need(t, "trajectory");
  require(i < t->traj.size(), "trajectory index out of range");
  return t;
}

}  // namespace

extern "C" {

const char* dimer_version(void) { return DIMER_VERSION_STRING; }

const char* dimer_status_name(dimer_status status) {
  if (status == DIMER_OK) return "ok";
  if (status < DIMER_ERR_INVALID_ARGUMENT || status > DIMER_ERR_INTERNAL) return "unknown";
  return errc_name(static_cast<Errc>(status));
}

const char* dimer_last_error(void) { return last_error.c_str(); }

dimer_status dimer_spinor_to_bloch(const dimer_complex psi[2], dimer_vec3* n) {
  return guarded([&] {
    need(psi, "psi");
    need(n, "n");
    *n = vec(spinor_to_bloch(PseudoSpinState(cplx(psi[0]), cplx(psi[1]))).vec());
  });
}

dimer_status dimer_bloch_to_spinor(dimer_vec3 n, dimer_complex psi[2]) {
  return guarded([&] {
    need(psi, "psi");
    const PseudoSpinState s = bloch_to_spinor(BlochVector(vec(n)));
    psi[0] = cplx(s.n1());
    psi[1] = cplx(s.n2());
  });
}

dimer_status dimer_embed_two_spin(const dimer_complex psi[2], dimer_complex amp[4]) {
  return guarded([&] {
    need(psi, "psi");
    need(amp, "amp");
    const TwoSpinState s = embed_two_spin(PseudoSpinState(cplx(psi[0]), cplx(psi[1])));
    for (int k = 0; k < 4; ++k) amp[k] = cplx(s.amp(k));
  });
}

dimer_status dimer_project_two_spin(const dimer_complex amp[4], dimer_complex psi[2], double* residual) {
  return guarded([&] {
    need(amp, "amp");
    need(psi, "psi");
    TwoSpinState s;
    for (int k = 0; k < 4; ++k) s.amp(k) = cplx(amp[k]);
    const SubspaceProjection p = project_two_spin(s);
    psi[0] = cplx(p.psi.n1());
    psi[1] = cplx(p.psi.n2());
    if (residual) *residual = p.residual;
  });
}

dimer_status dimer_entanglement(dimer_vec3 n, double* schmidt_gap, double* concurrence) {
  return guarded([&] {
    const EntanglementReport r = entanglement_measures(BlochVector(vec(n)));
    if (schmidt_gap) *schmidt_gap = r.schmidt_gap;
    if (concurrence) *concurrence = r.concurrence;
  });
}

dimer_status dimer_stereo_project(dimer_vec3 n, dimer_complex* w, int* infinite) {
  return guarded([&] {
    need(w, "w");
    const StereoPoint p = stereo_project(BlochVector(vec(n)));
    *w = cplx(p.w);
    if (infinite) *infinite = p.infinite ? 1 : 0;
  });
}

dimer_status dimer_stereo_unproject(dimer_complex w, int infinite, dimer_vec3* n) {
  return guarded([&] {
    need(n, "n");
    *n = vec(stereo_unproject(StereoPoint{cplx(w), infinite != 0}).vec());
  });
}

dimer_status dimer_flow_eval(const dimer_flow* flow, dimer_vec3 n, dimer_vec3* velocity) {
  return guarded([&] {
    need(velocity, "velocity");
    *velocity = vec(to_flow(flow)(vec(n)));
  });
}

dimer_integrator_config dimer_integrator_config_default(void) {
  const IntegratorConfig c;
  return {c.rel_tol, c.abs_tol, c.dt_init, c.dt_max, c.renormalize ? 1 : 0, static_cast<uint64_t>(c.max_steps)};
}

dimer_sde_config dimer_sde_config_default(void) {
  const SdeConfig c;
  return {c.dt, c.t0, c.t1, c.output_every, DIMER_SDE_HEUN};
}

dimer_status dimer_schedule_eval(const dimer_field_schedule* schedule, double t, double* h) {
  return guarded([&] {
    need(h, "h");
    *h = to_schedule(schedule)(t);
  });
}

size_t dimer_trajectory_size(const dimer_trajectory* traj) { return traj ? traj->traj.size() : 0; }

dimer_status dimer_trajectory_sample(const dimer_trajectory* traj, size_t i, double* t, dimer_vec3* n) {
  return guarded([&] {
    checked(traj, i);
    if (t) *t = traj->traj.times[i];
    if (n) *n = vec(traj->traj.states[i]);
  });
}

dimer_status dimer_trajectory_radial(const dimer_trajectory* traj, size_t i, double* d) {
  return guarded([&] {
    checked(traj, i);
    need(d, "d");
    require(i < traj->traj.radial.size(), "trajectory has no radial channel");
    *d = traj->traj.radial[i];
  });
}

dimer_status dimer_trajectory_log_norm(const dimer_trajectory* traj, size_t i, double* log_z) {
  return guarded([&] {
    checked(traj, i);
    need(log_z, "log_z");
    require(i < traj->traj.log_norm.size(), "trajectory has no log-norm channel");
    *log_z = traj->traj.log_norm[i];
  });
}

double dimer_trajectory_max_nz(const dimer_trajectory* traj) { return traj ? traj->traj.max_nz : -1.0; }

double dimer_trajectory_max_norm_drift(const dimer_trajectory* traj) {
  return traj ? traj->traj.max_norm_drift : 0.0;
}

void dimer_trajectory_free(dimer_trajectory* traj) { delete traj; }

dimer_status dimer_integrate_ode(const dimer_flow* flow, dimer_vec3 n0, double t0, double t1,
                                 const dimer_integrator_config* cfg, const double* output_times, size_t n_output,
                                 dimer_trajectory** out) {
  if (out) *out = nullptr;
  return guarded([&] {
    need(out, "out");
    const Flow f = to_flow(flow);
    try {
      *out = new dimer_trajectory{integrate_ode(f, vec(n0), {t0, t1}, to_config(cfg),
                                                times_span(output_times, n_output))};
    } catch (const NonConvergenceError& e) {
      *out = new dimer_trajectory{e.partial()};
      throw;
    }
  });
}

dimer_status dimer_integrate_angular_radial(double J, double gamma, dimer_vec3 n0, double d0, double t0, double t1,
                                            const dimer_integrator_config* cfg, const double* output_times,
                                            size_t n_output, dimer_trajectory** out) {
  if (out) *out = nullptr;
  return guarded([&] {
    need(out, "out");
    const BallState start{BlochVector(vec(n0)), d0};
    try {
      *out = new dimer_trajectory{integrate_angular_radial(J, gamma, start, {t0, t1}, to_config(cfg),
                                                           times_span(output_times, n_output))};
    } catch (const NonConvergenceError& e) {
      *out = new dimer_trajectory{e.partial()};
      throw;
    }
  });
}

dimer_status dimer_integrate_sde(double J, const dimer_field_schedule* schedule, double gamma, uint64_t master_seed,
                                 uint64_t trajectory_index, dimer_vec3 n0, const dimer_sde_config* cfg,
                                 dimer_trajectory** out) {
  if (out) *out = nullptr;
  return guarded([&] {
    need(out, "out");
    const NoiseSpec noise{2.0 * gamma, master_seed};
    noise.validate();
    *out = new dimer_trajectory{
        integrate_sde(J, to_schedule(schedule), noise, trajectory_index, vec(n0), to_sde(cfg))};
  });
}

dimer_status dimer_evolve_pseudospin(double J, double h, dimer_bias_kind bias, double kappa,
                                     const dimer_complex psi0[2], double t0, double t1, dimer_evolution_mode mode,
                                     const dimer_integrator_config* cfg, const double* output_times,
                                     size_t n_output, dimer_trajectory** out) {
  if (out) *out = nullptr;
  return guarded([&] {
    need(out, "out");
    need(psi0, "psi0");
    require(mode == DIMER_EVOLVE_NORMALIZED || mode == DIMER_EVOLVE_UNNORMALIZED, "unknown evolution mode");
    std::optional<OracleBias> b;
    if (kappa != 0.0) b = OracleBias{to_bias(bias), kappa};
    const PseudoSpinEvolution ev = evolve_pseudospin(
        J, h, b, PseudoSpinState(cplx(psi0[0]), cplx(psi0[1])), {t0, t1},
        mode == DIMER_EVOLVE_NORMALIZED ? EvolutionMode::normalized : EvolutionMode::unnormalized, to_config(cfg),
        times_span(output_times, n_output));
    *out = new dimer_trajectory{ev.bloch()};
  });
}

dimer_status dimer_evolve_two_spin(double J, const dimer_field_schedule* schedule, const dimer_complex amp0[4],
                                   double t0, double t1, const dimer_integrator_config* cfg,
                                   const double* output_times, size_t n_output, dimer_trajectory** out,
                                   double* max_residual) {
  if (out) *out = nullptr;
  return guarded([&] {
    need(out, "out");
    need(amp0, "amp0");
    TwoSpinState s;
    for (int k = 0; k < 4; ++k) s.amp(k) = cplx(amp0[k]);
    const TwoSpinEvolution ev = evolve_two_spin(J, to_schedule(schedule), s, {t0, t1}, to_config(cfg),
                                                std::nullopt, times_span(output_times, n_output));
    *out = new dimer_trajectory{ev.bloch()};
    if (max_residual) *max_residual = ev.max_residual();
  });
}

dimer_status dimer_run_ensemble(double J, const dimer_field_schedule* schedule, double gamma, uint64_t master_seed,
                                dimer_vec3 n0, const dimer_sde_config* cfg, size_t trajectories, unsigned workers,
                                dimer_ensemble** out) {
  if (out) *out = nullptr;
  return guarded([&] {
    need(out, "out");
    EnsembleSpec spec;
    spec.J = J;
    spec.schedule = to_schedule(schedule);
    spec.noise = NoiseSpec{2.0 * gamma, master_seed};
    spec.n0 = vec(n0);
    spec.sde = to_sde(cfg);
    spec.trajectories = trajectories;
    *out = new dimer_ensemble{run_ensemble(spec, workers)};
  });
}

size_t dimer_ensemble_grid_size(const dimer_ensemble* e) { return e ? e->stats.grid().size() : 0; }

dimer_status dimer_ensemble_point(const dimer_ensemble* e, size_t i, double* t, dimer_vec3* mean,
                                  dimer_vec3* standard_error) {
  return guarded([&] {
    need(e, "ensemble");
    require(i < e->stats.grid().size(), "ensemble index out of range");
    if (t) *t = e->stats.grid()[i];
    if (mean) *mean = vec(e->stats.mean()[i]);
    if (standard_error) *standard_error = vec(e->stats.standard_error(i));
  });
}

size_t dimer_ensemble_sample_count(const dimer_ensemble* e) { return e ? e->stats.sample_count() : 0; }

double dimer_ensemble_crossing_fraction(const dimer_ensemble* e) { return e ? e->stats.crossing_fraction() : 0.0; }

double dimer_ensemble_mean_final_fidelity(const dimer_ensemble* e) {
  return e ? e->stats.mean_final_fidelity() : 0.0;
}

dimer_status dimer_ensemble_fidelity_histogram(const dimer_ensemble* e, size_t counts[20]) {
  return guarded([&] {
    need(e, "ensemble");
    need(counts, "counts");
    const auto& h = e->stats.fidelity_histogram();
    for (std::size_t k = 0; k < h.size(); ++k) counts[k] = h[k];
  });
}

void dimer_ensemble_free(dimer_ensemble* e) { delete e; }

dimer_status dimer_run_sweep(double J, const dimer_field_schedule* schedule, int noisy, double gamma,
                             uint64_t master_seed, uint64_t trajectory_index, double sde_dt, size_t output_points,
                             const dimer_integrator_config* cfg, dimer_trajectory** out, double* final_fidelity) {
  if (out) *out = nullptr;
  return guarded([&] {
    need(out, "out");
    std::optional<NoiseSpec> noise;
    if (noisy) noise = NoiseSpec{2.0 * gamma, master_seed};
    SweepOptions opts;
    opts.sde_dt = sde_dt;
    opts.trajectory_index = trajectory_index;
    opts.output_points = output_points;
    SweepResult r = run_sweep(J, to_schedule(schedule), noise, to_config(cfg), opts);
    if (final_fidelity) *final_fidelity = r.final_fidelity;
    *out = new dimer_trajectory{std::move(r.trajectory)};
  });
}

dimer_status dimer_linear_spectrum(double J, double gamma, dimer_spectrum* out) {
  return guarded([&] {
    need(out, "out");
    const SpectrumRecord r = linear_spectrum(J, gamma);
    for (int k = 0; k < 3; ++k) out->eigenvalues[k] = cplx(r.eigenvalues[k]);
    out->regime = static_cast<dimer_regime>(static_cast<int>(r.regime));
  });
}

dimer_status dimer_find_fixed_points(const dimer_flow* flow, unsigned workers, dimer_fixed_points** out) {
  if (out) *out = nullptr;
  return guarded([&] {
    need(out, "out");
    FixedPointOptions opts;
    opts.workers = resolve_workers(workers);
    *out = new dimer_fixed_points{find_fixed_points(to_flow(flow), opts)};
  });
}

size_t dimer_fixed_points_size(const dimer_fixed_points* fp) { return fp ? fp->search.points.size() : 0; }

int dimer_fixed_points_complete(const dimer_fixed_points* fp) { return fp && fp->search.complete ? 1 : 0; }

dimer_status dimer_fixed_points_get(const dimer_fixed_points* fp, size_t i, dimer_fixed_point* out) {
  return guarded([&] {
    need(fp, "fixed points");
    need(out, "out");
    require(i < fp->search.points.size(), "fixed-point index out of range");
    const FixedPointRecord& r = fp->search.points[i];
    out->location = vec(r.location.vec());
    out->w = cplx(r.w.w);
    out->w_infinite = r.w.infinite ? 1 : 0;
    out->classification = to_c(r.classification.kind);
    out->eigenvalues[0] = cplx(r.classification.eigenvalues[0]);
    out->eigenvalues[1] = cplx(r.classification.eigenvalues[1]);
    out->marginal = r.classification.marginal ? 1 : 0;
    out->residual = r.residual;
  });
}

void dimer_fixed_points_free(dimer_fixed_points* fp) { delete fp; }

const char* dimer_fixed_point_class_name(dimer_fixed_point_class c) {
  switch (c) {
    case DIMER_FP_REPELLER: return "repeller";
    case DIMER_FP_ATTRACTOR: return "attractor";
    case DIMER_FP_SADDLE: return "saddle";
    case DIMER_FP_CENTER: return "center";
  }
  return "unknown";
}

dimer_status dimer_classify_fixed_point(const dimer_flow* flow, dimer_vec3 n, dimer_fixed_point_class* classification,
                                        dimer_complex eigenvalues[2]) {
  return guarded([&] {
    const Classification c = classify_fixed_point(to_flow(flow), BlochVector(vec(n)));
    if (classification) *classification = to_c(c.kind);
    if (eigenvalues) {
      eigenvalues[0] = cplx(c.eigenvalues[0]);
      eigenvalues[1] = cplx(c.eigenvalues[1]);
    }
  });
}

dimer_status dimer_disconnection_test(const dimer_flow* flow, double horizon, int* connected, double* max_nz) {
  return guarded([&] {
    std::optional<double> h;
    if (horizon > 0.0) h = horizon;
    const DisconnectionResult r = disconnection_test(to_flow(flow), h);
    if (connected) *connected = r.connected ? 1 : 0;
    if (max_nz) *max_nz = r.max_nz;
  });
}

dimer_free_energy_options dimer_free_energy_options_default(void) {
  const FreeEnergyOptions o;
  return {o.initial_time, o.horizon, o.tolerance};
}

dimer_status dimer_free_energy(dimer_bias_kind kind, double s, double J, const dimer_free_energy_options* options,
                               dimer_free_energy_estimate* out) {
  return guarded([&] {
    need(out, "out");
    *out = to_c(free_energy(BiasSpec{to_bias(kind), s}, J, to_fe_options(options)));
  });
}

dimer_status dimer_phi_sweep(dimer_bias_kind kind, double J, const double* s_grid, size_t n,
                             const dimer_free_energy_options* options, unsigned workers, dimer_curve** out) {
  if (out) *out = nullptr;
  return guarded([&] {
    need(out, "out");
    need(s_grid, "s_grid");
    const std::vector<double> grid(s_grid, s_grid + n);
    *out = new dimer_curve{phi_sweep(to_bias(kind), J, grid, to_fe_options(options), workers)};
  });
}

size_t dimer_curve_size(const dimer_curve* c) { return c ? c->curve.points.size() : 0; }

dimer_status dimer_curve_point(const dimer_curve* c, size_t i, dimer_free_energy_estimate* out) {
  return guarded([&] {
    need(c, "curve");
    need(out, "out");
    require(i < c->curve.points.size(), "curve index out of range");
    *out = to_c(c->curve.points[i]);
  });
}

size_t dimer_curve_transition_count(const dimer_curve* c) { return c ? c->curve.transitions.size() : 0; }

dimer_status dimer_curve_transition(const dimer_curve* c, size_t i, dimer_transition* out) {
  return guarded([&] {
    need(c, "curve");
    need(out, "out");
    require(i < c->curve.transitions.size(), "transition index out of range");
    const Transition& t = c->curve.transitions[i];
    out->type = t.type == TransitionType::kink ? DIMER_TRANSITION_KINK : DIMER_TRANSITION_JUMP;
    out->s = t.s;
    out->index = t.index;
    out->magnitude = t.magnitude;
  });
}

void dimer_curve_free(dimer_curve* c) { delete c; }

dimer_status dimer_flow_field(const dimer_flow* flow, dimer_chart chart, size_t resolution, double extent,
                              dimer_flow_table** out) {
  if (out) *out = nullptr;
  return guarded([&] {
    need(out, "out");
    require(chart == DIMER_CHART_STEREOGRAPHIC || chart == DIMER_CHART_YZ_CUT, "unknown chart");
    const Chart ch = chart == DIMER_CHART_STEREOGRAPHIC ? Chart::stereographic : Chart::yz_cut;
    *out = new dimer_flow_table{flow_field_grid(to_flow(flow), ch, resolution, extent)};
  });
}

size_t dimer_flow_table_size(const dimer_flow_table* t) { return t ? t->rows.size() : 0; }

dimer_status dimer_flow_table_row(const dimer_flow_table* t, size_t i, dimer_flow_sample* out) {
  return guarded([&] {
    need(t, "table");
    need(out, "out");
    require(i < t->rows.size(), "flow-table index out of range");
    const FlowSample& r = t->rows[i];
    *out = {r.u, r.v, r.du, r.dv, vec(r.n), vec(r.f)};
  });
}

void dimer_flow_table_free(dimer_flow_table* t) { delete t; }

dimer_status dimer_calibrate(size_t samples, uint64_t seed, double J, double threshold, char** json) {
  if (json) *json = nullptr;
  return guarded([&] {
    need(json, "json");
    CalibrationOptions opts;
    opts.samples = samples;
    opts.seed = seed;
    opts.J = J;
    opts.threshold = threshold;
    const std::string text = calibrate(opts).to_json();
    char* buf = static_cast<char*>(std::malloc(text.size() + 1));
    if (!buf) throw std::bad_alloc();
    std::memcpy(buf, text.c_str(), text.size() + 1);
    *json = buf;
  });
}

void dimer_string_free(char* s) { std::free(s); }

}  // extern "C"
