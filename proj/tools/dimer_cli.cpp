// dimer: command-line front end over the C API.
//
// Exit codes: 0 success, 1 other failure, 2 configuration error,
// 3 numerical non-convergence.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "dimer/dimer.h"
#include "json.hpp"
#include "run_config.hpp"

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;
constexpr int kExitNonConvergence = 3;

struct CommandError : std::runtime_error {
  int exit_code;
  CommandError(int code, const std::string& what) : std::runtime_error(what), exit_code(code) {}
};

void check(dimer_status st, const char* what) {
  if (st == DIMER_OK) return;
  const std::string msg = std::string(what) + ": " + dimer_last_error();
  switch (st) {
    case DIMER_ERR_NON_CONVERGENCE: throw CommandError(kExitNonConvergence, msg);
    case DIMER_ERR_INVALID_ARGUMENT:
    case DIMER_ERR_NORMALIZATION: throw CommandError(kExitConfig, msg);
    default: throw CommandError(kExitFailure, msg);
  }
}

std::string num(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string quoted(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out + "\"";
}

class Csv {
 public:
  Csv(const fs::path& path, const std::string& comment, const std::vector<std::string>& columns) : out_(path) {
    if (!out_) throw CommandError(kExitFailure, "cannot write " + path.string());
    out_ << "# " << comment << "\n";
    for (std::size_t i = 0; i < columns.size(); ++i) out_ << (i ? "," : "") << columns[i];
    out_ << "\n";
  }
  Csv& operator<<(double x) { return cell(num(x)); }
  Csv& operator<<(const std::string& s) { return cell(s); }
  void end() {
    out_ << "\n";
    first_ = true;
  }

 private:
  Csv& cell(const std::string& s) {
    if (!first_) out_ << ",";
    out_ << s;
    first_ = false;
    return *this;
  }
  std::ofstream out_;
  bool first_ = true;
};

// One NDJSON record with fields in insertion order.
class Record {
 public:
  Record& add(const std::string& key, double x) { return raw(key, num(x)); }
  Record& add(const std::string& key, const std::string& s) { return raw(key, quoted(s)); }
  Record& add(const std::string& key, const char* s) { return raw(key, quoted(s)); }
  Record& flag(const std::string& key, bool b) { return raw(key, b ? "true" : "false"); }
  std::string str() const { return "{" + body_ + "}"; }

 private:
  Record& raw(const std::string& key, const std::string& value) {
    if (!body_.empty()) body_ += ",";
    body_ += quoted(key) + ":" + value;
    return *this;
  }
  std::string body_;
};

struct Context {
  cli::RunConfig cfg;
  fs::path out_dir;
  unsigned workers = 0;
};

struct Outcome {
  std::vector<std::string> outputs;
  ojson summary = ojson::object();
  int exit_code = kExitOk;
  std::string message;
};

dimer_flow make_flow(const cli::RunConfig& c) { return {c.flow, c.J, c.gamma, c.h, c.s}; }

const char* flow_name(dimer_flow_kind k) {
  switch (k) {
    case DIMER_FLOW_UNITARY: return "unitary";
    case DIMER_FLOW_LINDBLAD: return "lindblad";
    case DIMER_FLOW_ANGULAR: return "angular";
    case DIMER_FLOW_BIASED_LINEAR: return "biased_linear";
    case DIMER_FLOW_BIASED_VARIANCE: return "biased_variance";
  }
  return "unknown";
}

dimer_vec3 displaced_south() {
  const double y = 1e-6;
  const double norm = std::sqrt(1.0 + y * y);
  return {0.0, y / norm, -1.0 / norm};
}

Outcome run_flowfield(const Context& ctx) {
  const auto& c = ctx.cfg;
  const dimer_flow flow = make_flow(c);
  dimer_flow_table* table = nullptr;
  check(dimer_flow_field(&flow, c.chart, c.resolution, c.extent, &table), "flowfield");
  const bool stereo = c.chart == DIMER_CHART_STEREOGRAPHIC;
  Csv csv(ctx.out_dir / "flowfield.csv",
          std::string("flowfield ") + flow_name(c.flow) + " chart=" + (stereo ? "stereographic" : "yz_cut") +
              " | u, v: " + (stereo ? "w = u + i v" : "(n_y, n_z)") +
              " [1]; du, dv: chart velocity [J]; nx, ny, nz: position [1]; fx, fy, fz: field [J]",
          {"u", "v", "du", "dv", "nx", "ny", "nz", "fx", "fy", "fz"});
  const std::size_t n = dimer_flow_table_size(table);
  for (std::size_t i = 0; i < n; ++i) {
    dimer_flow_sample r;
    dimer_flow_table_row(table, i, &r);
    csv << r.u << r.v << r.du << r.dv << r.n.x << r.n.y << r.n.z << r.f.x << r.f.y << r.f.z;
    csv.end();
  }
  dimer_flow_table_free(table);
  Outcome o;
  o.outputs = {"flowfield.csv"};
  o.summary["rows"] = n;
  return o;
}

Outcome run_trajectory(const Context& ctx) {
  const auto& c = ctx.cfg;
  const dimer_flow flow = make_flow(c);
  const dimer_vec3 start = c.start.value_or(displaced_south());
  std::vector<double> times(c.points);
  for (std::size_t i = 0; i < c.points; ++i) times[i] = c.t1 * static_cast<double>(i) / static_cast<double>(c.points - 1);
  times.back() = c.t1;

  dimer_trajectory* traj = nullptr;
  dimer_status st;
  if (c.radial) {
    st = dimer_integrate_angular_radial(c.J, c.gamma, start, 1.0, 0.0, c.t1, &c.integrator, times.data(), times.size(),
                                        &traj);
  } else {
    st = dimer_integrate_ode(&flow, start, 0.0, c.t1, &c.integrator, times.data(), times.size(), &traj);
  }
  const std::string error = st == DIMER_OK ? "" : dimer_last_error();

  Outcome o;
  if (traj) {
    std::vector<std::string> cols = {"t", "nx", "ny", "nz"};
    std::string comment = std::string("trajectory ") + flow_name(c.flow) +
                          " | t: time [1/J]; nx, ny, nz: Bloch vector [1]";
    if (c.radial) {
      cols.push_back("d");
      comment += "; d: radial coordinate [1]";
    }
    Csv csv(ctx.out_dir / "trajectory.csv", comment, cols);
    const std::size_t n = dimer_trajectory_size(traj);
    for (std::size_t i = 0; i < n; ++i) {
      double t;
      dimer_vec3 v;
      dimer_trajectory_sample(traj, i, &t, &v);
      csv << t << v.x << v.y << v.z;
      if (c.radial) {
        double d = 0.0;
        dimer_trajectory_radial(traj, i, &d);
        csv << d;
      }
      csv.end();
    }
    o.outputs = {"trajectory.csv"};
    o.summary["samples"] = n;
    o.summary["max_nz"] = dimer_trajectory_max_nz(traj);
    o.summary["max_norm_drift"] = dimer_trajectory_max_norm_drift(traj);
    dimer_trajectory_free(traj);
  }
  if (st != DIMER_OK) {
    o.summary["partial"] = true;
    o.summary["error"] = error;
    try {
      check(st, "trajectory");
    } catch (const CommandError& e) {
      o.exit_code = e.exit_code;
      o.message = std::string("trajectory: ") + error;
    }
  }
  return o;
}

Outcome run_ensemble(const Context& ctx) {
  const auto& c = ctx.cfg;
  dimer_sde_config sde = c.sde;
  sde.t0 = 0.0;
  dimer_ensemble* e = nullptr;
  check(dimer_run_ensemble(c.J, &c.schedule, c.gamma, c.seed, c.start.value_or(dimer_vec3{0.0, 0.0, -1.0}), &sde,
                           c.trajectories, ctx.workers, &e),
        "ensemble");
  Csv csv(ctx.out_dir / "ensemble.csv",
          "ensemble | t: time [1/J]; mean_n*: ensemble mean Bloch vector [1]; se_n*: standard error [1]; "
          "fidelity: mean |<dn,up|psi>|^2 [1]",
          {"t", "mean_nx", "mean_ny", "mean_nz", "se_nx", "se_ny", "se_nz", "fidelity"});
  const std::size_t n = dimer_ensemble_grid_size(e);
  for (std::size_t i = 0; i < n; ++i) {
    double t;
    dimer_vec3 m, se;
    dimer_ensemble_point(e, i, &t, &m, &se);
    csv << t << m.x << m.y << m.z << se.x << se.y << se.z << 0.5 * (1.0 + m.z);
    csv.end();
  }
  size_t hist[20];
  dimer_ensemble_fidelity_histogram(e, hist);
  Outcome o;
  o.outputs = {"ensemble.csv"};
  o.summary["trajectories"] = dimer_ensemble_sample_count(e);
  o.summary["crossing_fraction"] = dimer_ensemble_crossing_fraction(e);
  o.summary["mean_final_fidelity"] = dimer_ensemble_mean_final_fidelity(e);
  o.summary["fidelity_histogram"] = std::vector<std::size_t>(hist, hist + 20);
  dimer_ensemble_free(e);
  return o;
}

Outcome run_sweep(const Context& ctx) {
  const auto& c = ctx.cfg;
  dimer_trajectory* traj = nullptr;
  double fidelity = 0.0;
  check(dimer_run_sweep(c.J, &c.schedule, c.noisy ? 1 : 0, c.gamma, c.seed, c.trajectory_index, c.sweep_dt,
                        c.output_points, &c.integrator, &traj, &fidelity),
        "sweep");
  Csv csv(ctx.out_dir / "sweep.csv",
          "sweep | t: time [1/J]; h: staggered field [J]; nx, ny, nz: Bloch vector [1]; "
          "fidelity: |<dn,up|psi>|^2 [1]",
          {"t", "h", "nx", "ny", "nz", "fidelity"});
  const std::size_t n = dimer_trajectory_size(traj);
  for (std::size_t i = 0; i < n; ++i) {
    double t, h;
    dimer_vec3 v;
    dimer_trajectory_sample(traj, i, &t, &v);
    dimer_schedule_eval(&c.schedule, t, &h);
    csv << t << h << v.x << v.y << v.z << 0.5 * (1.0 + v.z);
    csv.end();
  }
  dimer_trajectory_free(traj);
  Outcome o;
  o.outputs = {"sweep.csv"};
  o.summary["final_fidelity"] = fidelity;
  o.summary["noisy"] = c.noisy;
  return o;
}

Outcome run_fixed_points(const Context& ctx) {
  const auto& c = ctx.cfg;
  const dimer_flow flow = make_flow(c);
  dimer_fixed_points* fp = nullptr;
  check(dimer_find_fixed_points(&flow, ctx.workers, &fp), "fixed-points");
  std::ofstream out(ctx.out_dir / "fixed_points.ndjson");
  ojson counts = ojson::object();
  const std::size_t n = dimer_fixed_points_size(fp);
  for (std::size_t i = 0; i < n; ++i) {
    dimer_fixed_point p;
    dimer_fixed_points_get(fp, i, &p);
    const char* cls = dimer_fixed_point_class_name(p.classification);
    counts[cls] = counts.value(cls, 0) + 1;
    Record r;
    r.add("nx", p.location.x).add("ny", p.location.y).add("nz", p.location.z);
    if (p.w_infinite) r.add("w_re", INFINITY).add("w_im", INFINITY);
    else r.add("w_re", p.w.re).add("w_im", p.w.im);
    r.add("class", cls)
        .add("eig_re1", p.eigenvalues[0].re)
        .add("eig_im1", p.eigenvalues[0].im)
        .add("eig_re2", p.eigenvalues[1].re)
        .add("eig_im2", p.eigenvalues[1].im)
        .add("residual", p.residual)
        .flag("marginal", p.marginal != 0);
    out << r.str() << "\n";
  }
  Outcome o;
  o.outputs = {"fixed_points.ndjson"};
  o.summary["count"] = n;
  o.summary["classes"] = counts;
  o.summary["complete"] = dimer_fixed_points_complete(fp) != 0;
  dimer_fixed_points_free(fp);
  return o;
}

Outcome run_spectrum(const Context& ctx) {
  const auto& c = ctx.cfg;
  Csv csv(ctx.out_dir / "spectrum.csv",
          "spectrum | gamma: dephasing rate [J]; re*, im*: eigenvalues of the averaged-flow generator [J]; "
          "regime: underdamped, critical or overdamped",
          {"gamma", "re1", "im1", "re2", "im2", "re3", "im3", "regime"});
  static const char* regimes[] = {"underdamped", "critical", "overdamped"};
  std::size_t n = 0;
  for (double g : c.gamma_grid.points()) {
    dimer_spectrum s;
    check(dimer_linear_spectrum(c.J, g, &s), "spectrum");
    csv << g;
    for (const auto& ev : s.eigenvalues) csv << ev.re << ev.im;
    csv << std::string(regimes[s.regime]);
    csv.end();
    ++n;
  }
  Outcome o;
  o.outputs = {"spectrum.csv"};
  o.summary["rows"] = n;
  o.summary["critical_gamma"] = 2.0 * c.J;
  return o;
}

Outcome run_free_energy(const Context& ctx) {
  const auto& c = ctx.cfg;
  const std::vector<double> grid = c.s_grid.points();
  dimer_curve* curve = nullptr;
  check(dimer_phi_sweep(c.bias, c.J, grid.data(), grid.size(), &c.free_energy, ctx.workers, &curve), "free-energy");

  std::vector<std::string> marks(grid.size());
  ojson transitions = ojson::array();
  for (std::size_t k = 0; k < dimer_curve_transition_count(curve); ++k) {
    dimer_transition t;
    dimer_curve_transition(curve, k, &t);
    const char* type = t.type == DIMER_TRANSITION_KINK ? "kink" : "jump";
    marks[t.index] = type;
    transitions.push_back({{"type", type}, {"s", t.s}, {"index", t.index}, {"magnitude", t.magnitude}});
  }
  const bool variance = c.bias == DIMER_BIAS_VARIANCE;
  Csv csv(ctx.out_dir / "free_energy.csv",
          std::string("free-energy ") + (variance ? "variance" : "linear") +
              " bias | s: bias strength [J]; phi, phi_logz: dynamical free energy [J]; converged: 1/0; "
              "estimator: fixed_point or orbit_average; phi_other_basin: north-pole start [J]; transition: kink, "
              "jump (jump rows are the left end of the gap) or empty",
          {"s", "phi", "converged", "estimator", "phi_logz", "phi_other_basin", "transition"});
  std::size_t unconverged = 0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    dimer_free_energy_estimate e;
    dimer_curve_point(curve, i, &e);
    unconverged += e.converged ? 0 : 1;
    csv << e.s << e.phi << std::string(e.converged ? "1" : "0")
        << std::string(e.stationary ? "fixed_point" : "orbit_average") << e.phi_logz
        << (e.has_other_basin ? num(e.phi_other_basin) : std::string()) << marks[i];
    csv.end();
  }
  dimer_curve_free(curve);
  Outcome o;
  o.outputs = {"free_energy.csv"};
  o.summary["points"] = grid.size();
  o.summary["unconverged"] = unconverged;
  o.summary["transitions"] = transitions;
  if (unconverged > 0) {
    o.exit_code = kExitNonConvergence;
    o.message = std::to_string(unconverged) + " grid point(s) did not converge within the horizon";
  }
  return o;
}

Outcome run_calibrate(const Context& ctx) {
  const auto& c = ctx.cfg;
  char* text = nullptr;
  check(dimer_calibrate(c.calibration_samples, c.seed, c.J, c.calibration_threshold, &text), "calibrate");
  const ojson doc = ojson::parse(text);
  dimer_string_free(text);
  std::ofstream out(ctx.out_dir / "calibration.ndjson");
  Outcome o;
  for (const auto& f : doc["fits"]) {
    out << Record()
               .add("record", "fit")
               .add("bias", f["bias"].get<std::string>())
               .add("kappa_per_s", f["kappa_per_s"].get<double>())
               .add("max_residual", f["max_residual"].get<double>())
               .str()
        << "\n";
    o.summary["kappa_per_s_" + f["bias"].get<std::string>()] = f["kappa_per_s"];
  }
  for (const auto& n : doc["notes"]) {
    out << Record()
               .add("record", "note")
               .add("subject", n["subject"].get<std::string>())
               .add("description", n["description"].get<std::string>())
               .add("max_deviation", n["max_deviation"].get<double>())
               .str()
        << "\n";
  }
  o.outputs = {"calibration.ndjson"};
  o.summary["samples"] = doc["samples"];
  return o;
}

std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::optional<std::string> read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) return std::nullopt;
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int print_issues(const std::vector<cli::Issue>& issues, const std::string& file) {
  for (const auto& i : issues) std::cerr << i.render(file) << "\n";
  return kExitConfig;
}

struct Flags {
  std::string config;
  std::string out;
  std::optional<uint64_t> seed;
  std::optional<unsigned> workers;
};

int resolve_workers(const Flags& flags, unsigned& workers) {
  if (flags.workers) {
    workers = *flags.workers;
    return kExitOk;
  }
  if (const char* env = std::getenv("DIMER_DPT_WORKERS"); env && *env) {
    char* end = nullptr;
    const unsigned long v = std::strtoul(env, &end, 10);
    if (*end != '\0' || v > 4096) {
      std::cerr << "DIMER_DPT_WORKERS: expected a worker count, got \"" << env << "\"\n";
      return kExitConfig;
    }
    workers = static_cast<unsigned>(v);
  }
  return kExitOk;
}

int execute(const std::string& command, const Flags& flags) {
  const auto text = read_file(flags.config);
  if (!text) {
    std::cerr << flags.config << ": cannot read configuration\n";
    return kExitConfig;
  }
  cli::ParseResult parsed = cli::parse_config(*text, command);
  if (!parsed.ok()) return print_issues(parsed.issues, flags.config);

  Context ctx;
  ctx.cfg = parsed.config;
  if (flags.seed) ctx.cfg.seed = *flags.seed;
  if (int rc = resolve_workers(flags, ctx.workers); rc != kExitOk) return rc;
  ctx.out_dir = !flags.out.empty() ? fs::path(flags.out) : !ctx.cfg.output.empty() ? fs::path(ctx.cfg.output) : ".";
  std::error_code ec;
  fs::create_directories(ctx.out_dir, ec);
  if (ec) {
    std::cerr << ctx.out_dir.string() << ": " << ec.message() << "\n";
    return kExitFailure;
  }

  const auto t0 = std::chrono::steady_clock::now();
  Outcome outcome;
  try {
    if (command == "flowfield") outcome = run_flowfield(ctx);
    else if (command == "trajectory") outcome = run_trajectory(ctx);
    else if (command == "ensemble") outcome = run_ensemble(ctx);
    else if (command == "sweep") outcome = run_sweep(ctx);
    else if (command == "fixed-points") outcome = run_fixed_points(ctx);
    else if (command == "spectrum") outcome = run_spectrum(ctx);
    else if (command == "free-energy") outcome = run_free_energy(ctx);
    else if (command == "calibrate") outcome = run_calibrate(ctx);
  } catch (const CommandError& e) {
    outcome.exit_code = e.exit_code;
    outcome.message = e.what();
  } catch (const std::exception& e) {
    outcome.exit_code = kExitFailure;
    outcome.message = e.what();
  }
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  ojson manifest;
  manifest["schema"] = "dimer.manifest/1";
  manifest["command"] = command;
  manifest["version"] = dimer_version();
  manifest["seed"] = ctx.cfg.seed;
  manifest["workers"] = ctx.workers;
  manifest["config_path"] = flags.config;
  manifest["inputs"] = ojson::parse(*text);
  manifest["outputs"] = outcome.outputs;
  manifest["exit_code"] = outcome.exit_code;
  if (!outcome.message.empty()) manifest["error"] = outcome.message;
  manifest["summary"] = outcome.summary;
  manifest["wall_time_s"] = wall;
  manifest["timestamp"] = utc_timestamp();
  std::ofstream(ctx.out_dir / "manifest.json") << manifest.dump(2) << "\n";

  if (outcome.exit_code != kExitOk) std::cerr << "dimer " << command << ": " << outcome.message << "\n";
  return outcome.exit_code;
}

int validate(const Flags& flags) {
  const auto text = read_file(flags.config);
  if (!text) {
    std::cerr << flags.config << ": cannot read configuration\n";
    return kExitConfig;
  }
  const cli::ParseResult parsed = cli::parse_config(*text, std::nullopt);
  if (!parsed.ok()) return print_issues(parsed.issues, flags.config);
  std::cout << "OK\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Entangled-dimer dynamics: flows, ensembles, fixed points and dynamical free energies"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(dimer_version()));

  Flags flags;
  std::vector<std::pair<std::string, CLI::App*>> subs;
  const std::vector<std::pair<std::string, std::string>> commands = {
      {"flowfield", "sample a flow on the stereographic plane or a yz cut"},
      {"trajectory", "integrate one deterministic trajectory"},
      {"ensemble", "average stochastic trajectories"},
      {"sweep", "drive |up,dn> through a field ramp"},
      {"fixed-points", "find and classify the fixed points of a sphere flow"},
      {"spectrum", "eigenvalues of the averaged-flow generator over a gamma grid"},
      {"free-energy", "dynamical free energy over an s grid with transition detection"},
      {"calibrate", "fit the bias normalization against the exact oracle"},
      {"validate", "check a configuration without running it"}};
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", flags.config, "JSON configuration file")->required();
    if (name != "validate") {
      sub->add_option("--out", flags.out, "output directory (default: config \"output\" or .)");
      sub->add_option("--seed", flags.seed, "master seed, overrides the config");
      sub->add_option("--workers", flags.workers, "worker threads (0 = all; env DIMER_DPT_WORKERS)");
    }
    subs.emplace_back(name, sub);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  for (const auto& [name, sub] : subs) {
    if (!sub->parsed()) continue;
    if (name == "validate") return validate(flags);
    return execute(name, flags);
  }
  return kExitConfig;
}
