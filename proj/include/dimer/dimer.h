#ifndef DIMER_DIMER_H
#define DIMER_DIMER_H

/* C interface to the dimer library. Functions return a dimer_status; on
 * failure dimer_last_error() holds a thread-local message. Handles are
 * opaque and owned by the caller, who releases them with the matching
 * *_free function (which accepts NULL). */

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(_WIN32)
#define DIMER_API __declspec(dllexport)
#else
#define DIMER_API __attribute__((visibility("default")))
#endif

typedef enum {
  DIMER_OK = 0,
  DIMER_ERR_INVALID_ARGUMENT = 1,
  DIMER_ERR_NORMALIZATION = 2,
  DIMER_ERR_DEGENERATE_PROJECTION = 3,
  DIMER_ERR_NON_CONVERGENCE = 4,
  DIMER_ERR_CALIBRATION = 5,
  DIMER_ERR_INTERNAL = 6
} dimer_status;

typedef struct {
  double re, im;
} dimer_complex;

typedef struct {
  double x, y, z;
} dimer_vec3;

DIMER_API const char* dimer_version(void);
DIMER_API const char* dimer_status_name(dimer_status status);
/* Message of the last failing call on this thread ("" after success). */
DIMER_API const char* dimer_last_error(void);

/* ---- state conversions ---- */

/* psi = (n1, n2) in the basis (|dn,up>, |up,dn>); must be normalized. */
DIMER_API dimer_status dimer_spinor_to_bloch(const dimer_complex psi[2], dimer_vec3* n);
DIMER_API dimer_status dimer_bloch_to_spinor(dimer_vec3 n, dimer_complex psi[2]);
/* amp in the basis (|up,up>, |up,dn>, |dn,up>, |dn,dn>). */
DIMER_API dimer_status dimer_embed_two_spin(const dimer_complex psi[2], dimer_complex amp[4]);
DIMER_API dimer_status dimer_project_two_spin(const dimer_complex amp[4], dimer_complex psi[2], double* residual);
DIMER_API dimer_status dimer_entanglement(dimer_vec3 n, double* schmidt_gap, double* concurrence);
DIMER_API dimer_status dimer_stereo_project(dimer_vec3 n, dimer_complex* w, int* infinite);
DIMER_API dimer_status dimer_stereo_unproject(dimer_complex w, int infinite, dimer_vec3* n);

/* ---- flows and configuration ---- */

typedef enum {
  DIMER_FLOW_UNITARY = 0,
  DIMER_FLOW_LINDBLAD = 1,
  DIMER_FLOW_ANGULAR = 2,
  DIMER_FLOW_BIASED_LINEAR = 3,
  DIMER_FLOW_BIASED_VARIANCE = 4
} dimer_flow_kind;

/* Unused parameters of a kind are ignored. */
typedef struct {
  dimer_flow_kind kind;
  double J;
  double gamma;
  double h;
  double s;
} dimer_flow;

DIMER_API dimer_status dimer_flow_eval(const dimer_flow* flow, dimer_vec3 n, dimer_vec3* velocity);

typedef struct {
  double rel_tol;
  double abs_tol;
  double dt_init;
  double dt_max;
  int renormalize;
  uint64_t max_steps;
} dimer_integrator_config;

DIMER_API dimer_integrator_config dimer_integrator_config_default(void);

typedef enum { DIMER_SCHEDULE_CONSTANT = 0, DIMER_SCHEDULE_LINEAR = 1, DIMER_SCHEDULE_TANH = 2 } dimer_schedule_kind;

typedef struct {
  dimer_schedule_kind kind;
  double h0;
  double h1;
  double T;
  double tanh_steepness;
} dimer_field_schedule;

typedef enum { DIMER_SDE_HEUN = 0, DIMER_SDE_EULER_MARUYAMA = 1 } dimer_sde_scheme;

typedef struct {
  double dt;
  double t0;
  double t1;
  size_t output_every;
  dimer_sde_scheme scheme;
} dimer_sde_config;

DIMER_API dimer_sde_config dimer_sde_config_default(void);

DIMER_API dimer_status dimer_schedule_eval(const dimer_field_schedule* schedule, double t, double* h);

/* ---- trajectories ---- */

typedef struct dimer_trajectory dimer_trajectory;

DIMER_API size_t dimer_trajectory_size(const dimer_trajectory* traj);
DIMER_API dimer_status dimer_trajectory_sample(const dimer_trajectory* traj, size_t i, double* t, dimer_vec3* n);
/* Extra channels; return DIMER_ERR_INVALID_ARGUMENT when not recorded. */
DIMER_API dimer_status dimer_trajectory_radial(const dimer_trajectory* traj, size_t i, double* d);
DIMER_API dimer_status dimer_trajectory_log_norm(const dimer_trajectory* traj, size_t i, double* log_z);
DIMER_API double dimer_trajectory_max_nz(const dimer_trajectory* traj);
DIMER_API double dimer_trajectory_max_norm_drift(const dimer_trajectory* traj);
DIMER_API void dimer_trajectory_free(dimer_trajectory* traj);

/* output_times may be NULL (record every accepted step). On
 * DIMER_ERR_NON_CONVERGENCE *out still receives the partial trajectory. */
DIMER_API dimer_status dimer_integrate_ode(const dimer_flow* flow, dimer_vec3 n0, double t0, double t1,
                                           const dimer_integrator_config* cfg, const double* output_times,
                                           size_t n_output, dimer_trajectory** out);
/* Pure-state angular flow plus the radial coordinate d. */
DIMER_API dimer_status dimer_integrate_angular_radial(double J, double gamma, dimer_vec3 n0, double d0, double t0,
                                                      double t1, const dimer_integrator_config* cfg,
                                                      const double* output_times, size_t n_output,
                                                      dimer_trajectory** out);
/* One stochastic trajectory with noise intensity 2 gamma. */
DIMER_API dimer_status dimer_integrate_sde(double J, const dimer_field_schedule* schedule, double gamma,
                                           uint64_t master_seed, uint64_t trajectory_index, dimer_vec3 n0,
                                           const dimer_sde_config* cfg, dimer_trajectory** out);

typedef enum { DIMER_BIAS_LINEAR = 0, DIMER_BIAS_VARIANCE = 1 } dimer_bias_kind;
typedef enum { DIMER_EVOLVE_NORMALIZED = 0, DIMER_EVOLVE_UNNORMALIZED = 1 } dimer_evolution_mode;

/* Exact 2x2 evolution; kappa = 0 disables the bias. The log_norm channel
 * carries ln Z(t). */
DIMER_API dimer_status dimer_evolve_pseudospin(double J, double h, dimer_bias_kind bias, double kappa,
                                               const dimer_complex psi0[2], double t0, double t1,
                                               dimer_evolution_mode mode, const dimer_integrator_config* cfg,
                                               const double* output_times, size_t n_output,
                                               dimer_trajectory** out);
/* Exact 4x4 evolution from amp0; the Bloch trace is that of the projected state. */
DIMER_API dimer_status dimer_evolve_two_spin(double J, const dimer_field_schedule* schedule,
                                             const dimer_complex amp0[4], double t0, double t1,
                                             const dimer_integrator_config* cfg, const double* output_times,
                                             size_t n_output, dimer_trajectory** out, double* max_residual);

/* ---- ensembles and sweeps ---- */

typedef struct dimer_ensemble dimer_ensemble;

/* workers = 0 uses the available parallelism. Results do not depend on it. */
DIMER_API dimer_status dimer_run_ensemble(double J, const dimer_field_schedule* schedule, double gamma,
                                          uint64_t master_seed, dimer_vec3 n0, const dimer_sde_config* cfg,
                                          size_t trajectories, unsigned workers, dimer_ensemble** out);
DIMER_API size_t dimer_ensemble_grid_size(const dimer_ensemble* e);
DIMER_API dimer_status dimer_ensemble_point(const dimer_ensemble* e, size_t i, double* t, dimer_vec3* mean,
                                            dimer_vec3* standard_error);
DIMER_API size_t dimer_ensemble_sample_count(const dimer_ensemble* e);
DIMER_API double dimer_ensemble_crossing_fraction(const dimer_ensemble* e);
DIMER_API double dimer_ensemble_mean_final_fidelity(const dimer_ensemble* e);
/* 20 bins of final fidelity over [0, 1]. */
DIMER_API dimer_status dimer_ensemble_fidelity_histogram(const dimer_ensemble* e, size_t counts[20]);
DIMER_API void dimer_ensemble_free(dimer_ensemble* e);

/* noisy = 0 integrates the noiseless equation adaptively; otherwise one
 * stochastic trajectory with step sde_dt is generated. */
DIMER_API dimer_status dimer_run_sweep(double J, const dimer_field_schedule* schedule, int noisy, double gamma,
                                       uint64_t master_seed, uint64_t trajectory_index, double sde_dt,
                                       size_t output_points, const dimer_integrator_config* cfg,
                                       dimer_trajectory** out, double* final_fidelity);

/* ---- analysis ---- */

typedef enum { DIMER_REGIME_UNDERDAMPED = 0, DIMER_REGIME_CRITICAL = 1, DIMER_REGIME_OVERDAMPED = 2 } dimer_regime;

typedef struct {
  dimer_complex eigenvalues[3];
  dimer_regime regime;
} dimer_spectrum;

DIMER_API dimer_status dimer_linear_spectrum(double J, double gamma, dimer_spectrum* out);

typedef enum {
  DIMER_FP_REPELLER = 0,
  DIMER_FP_ATTRACTOR = 1,
  DIMER_FP_SADDLE = 2,
  DIMER_FP_CENTER = 3
} dimer_fixed_point_class;

typedef struct {
  dimer_vec3 location;
  dimer_complex w;
  int w_infinite;
  dimer_fixed_point_class classification;
  dimer_complex eigenvalues[2];
  int marginal;
  double residual;
} dimer_fixed_point;

typedef struct dimer_fixed_points dimer_fixed_points;

DIMER_API dimer_status dimer_find_fixed_points(const dimer_flow* flow, unsigned workers, dimer_fixed_points** out);
DIMER_API size_t dimer_fixed_points_size(const dimer_fixed_points* fp);
DIMER_API int dimer_fixed_points_complete(const dimer_fixed_points* fp);
DIMER_API dimer_status dimer_fixed_points_get(const dimer_fixed_points* fp, size_t i, dimer_fixed_point* out);
DIMER_API void dimer_fixed_points_free(dimer_fixed_points* fp);
DIMER_API const char* dimer_fixed_point_class_name(dimer_fixed_point_class c);

DIMER_API dimer_status dimer_classify_fixed_point(const dimer_flow* flow, dimer_vec3 n,
                                                  dimer_fixed_point_class* classification,
                                                  dimer_complex eigenvalues[2]);

/* horizon <= 0 selects the default 500 / J. */
DIMER_API dimer_status dimer_disconnection_test(const dimer_flow* flow, double horizon, int* connected,
                                                double* max_nz);

typedef struct {
  double initial_time;
  double horizon;
  double tolerance;
} dimer_free_energy_options;

DIMER_API dimer_free_energy_options dimer_free_energy_options_default(void);

typedef struct {
  double s;
  double phi;
  double phi_logz;
  int converged;
  int stationary;
  double final_time;
  int has_other_basin;
  double phi_other_basin;
} dimer_free_energy_estimate;

DIMER_API dimer_status dimer_free_energy(dimer_bias_kind kind, double s, double J,
                                         const dimer_free_energy_options* options,
                                         dimer_free_energy_estimate* out);

typedef enum { DIMER_TRANSITION_KINK = 0, DIMER_TRANSITION_JUMP = 1 } dimer_transition_type;

typedef struct {
  dimer_transition_type type;
  double s;
  size_t index;
  double magnitude;
} dimer_transition;

typedef struct dimer_curve dimer_curve;

DIMER_API dimer_status dimer_phi_sweep(dimer_bias_kind kind, double J, const double* s_grid, size_t n,
                                       const dimer_free_energy_options* options, unsigned workers,
                                       dimer_curve** out);
DIMER_API size_t dimer_curve_size(const dimer_curve* c);
DIMER_API dimer_status dimer_curve_point(const dimer_curve* c, size_t i, dimer_free_energy_estimate* out);
DIMER_API size_t dimer_curve_transition_count(const dimer_curve* c);
DIMER_API dimer_status dimer_curve_transition(const dimer_curve* c, size_t i, dimer_transition* out);
DIMER_API void dimer_curve_free(dimer_curve* c);

typedef enum { DIMER_CHART_STEREOGRAPHIC = 0, DIMER_CHART_YZ_CUT = 1 } dimer_chart;

typedef struct {
  double u, v, du, dv;
  dimer_vec3 n;
  dimer_vec3 f;
} dimer_flow_sample;

typedef struct dimer_flow_table dimer_flow_table;

DIMER_API dimer_status dimer_flow_field(const dimer_flow* flow, dimer_chart chart, size_t resolution, double extent,
                                        dimer_flow_table** out);
DIMER_API size_t dimer_flow_table_size(const dimer_flow_table* t);
DIMER_API dimer_status dimer_flow_table_row(const dimer_flow_table* t, size_t i, dimer_flow_sample* out);
DIMER_API void dimer_flow_table_free(dimer_flow_table* t);

/* ---- calibration ---- */

/* Writes a newly allocated JSON report to *json (release with
 * dimer_string_free). DIMER_ERR_CALIBRATION when a fit exceeds threshold. */
DIMER_API dimer_status dimer_calibrate(size_t samples, uint64_t seed, double J, double threshold, char** json);
DIMER_API void dimer_string_free(char* s);

#ifdef __cplusplus
}
#endif

#endif
