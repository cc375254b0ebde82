#include "run_config.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <sstream>

#include "json.hpp"

namespace cli {

using json = nlohmann::json;

const std::vector<std::string> kCommands = {"flowfield", "trajectory", "ensemble",    "sweep",
                                            "fixed-points", "spectrum", "free-energy", "calibrate"};

std::string Issue::render(const std::string& file) const {
  std::ostringstream os;
  os << file;
  if (line > 0) os << ":" << line;
  os << ": ";
  if (!path.empty()) os << path << ": ";
  os << message;
  return os.str();
}

std::vector<double> Range::points() const {
  std::vector<double> out;
  const double span = (max - min) / step;
  const auto n = static_cast<std::size_t>(std::floor(span + 1e-9));
  for (std::size_t i = 0; i <= n; ++i) {
    out.push_back(std::round((min + step * static_cast<double>(i)) * 1e12) / 1e12);
  }
  return out;
}

std::size_t edit_distance(const std::string& a, const std::string& b) {
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1)});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

std::optional<std::string> nearest(const std::string& key, const std::vector<std::string>& candidates) {
  std::optional<std::string> best;
  std::size_t best_d = std::max<std::size_t>(2, key.size() / 3) + 1;
  for (const auto& c : candidates) {
    const std::size_t d = edit_distance(key, c);
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  return best;
}

namespace {

// Maps dotted key paths to the line of their first occurrence.
std::map<std::string, int> key_lines(const std::string& text) {
  struct Frame {
    bool object;
    std::string path;     // dotted path of this container
    std::string current;  // last key seen inside it
  };
  std::map<std::string, int> lines;
  std::vector<Frame> stack;
  std::string pending;
  bool have_pending = false;
  int line = 1;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (c == '\n') ++line;
    if (c == '"') {
      std::string s;
      for (++i; i < text.size() && text[i] != '"'; ++i) {
        if (text[i] == '\\' && i + 1 < text.size()) ++i;
        s += text[i];
      }
      pending = s;
      have_pending = true;
      continue;
    }
    if (c == ':' && have_pending && !stack.empty() && stack.back().object) {
      Frame& f = stack.back();
      f.current = f.path.empty() ? pending : f.path + "." + pending;
      lines.emplace(f.current, line);
    } else if (c == '{' || c == '[') {
      std::string path = stack.empty() ? "" : stack.back().current;
      stack.push_back({c == '{', path, ""});
    } else if ((c == '}' || c == ']') && !stack.empty()) {
      stack.pop_back();
    }
    if (c != ' ' && c != '\t' && c != '\r' && c != '\n') have_pending = false;
  }
  return lines;
}

class Reader {
 public:
  Reader(const std::string& text, std::vector<Issue>& issues) : lines_(key_lines(text)), issues_(issues) {}

  void error(const std::string& path, const std::string& message) {
    auto it = lines_.find(path);
    issues_.push_back({path, it == lines_.end() ? 0 : it->second, message});
  }

  void check_keys(const json& obj, const std::string& prefix, const std::vector<std::string>& allowed) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
      if (std::find(allowed.begin(), allowed.end(), it.key()) != allowed.end()) continue;
      std::string msg = "unknown key \"" + it.key() + "\"";
      if (auto s = nearest(it.key(), allowed)) msg += "; did you mean \"" + *s + "\"?";
      error(prefix.empty() ? it.key() : prefix + "." + it.key(), msg);
    }
  }

  const json* object(const json& parent, const std::string& key, const std::string& path) {
    if (!parent.contains(key)) return nullptr;
    const json& v = parent.at(key);
    if (!v.is_object()) {
      error(path, "must be an object");
      return nullptr;
    }
    return &v;
  }

  void number(const json& obj, const std::string& key, const std::string& prefix, double& out,
              const std::function<bool(double)>& valid = {}, const char* requirement = nullptr) {
    if (!obj.contains(key)) return;
    const std::string path = prefix.empty() ? key : prefix + "." + key;
    const json& v = obj.at(key);
    if (!v.is_number()) {
      error(path, "must be a number");
      return;
    }
    const double x = v.get<double>();
    if (!std::isfinite(x)) {
      error(path, "must be finite");
      return;
    }
    if (valid && !valid(x)) {
      error(path, std::string("must be ") + (requirement ? requirement : "valid") + " (got " + v.dump() + ")");
      return;
    }
    out = x;
  }

  template <class Int>
  void integer(const json& obj, const std::string& key, const std::string& prefix, Int& out, Int min_value) {
    if (!obj.contains(key)) return;
    const std::string path = prefix.empty() ? key : prefix + "." + key;
    const json& v = obj.at(key);
    if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<long long>() < 0)) {
      error(path, "must be a non-negative integer");
      return;
    }
    const auto x = v.get<uint64_t>();
    if (x < static_cast<uint64_t>(min_value)) {
      error(path, "must be at least " + std::to_string(min_value));
      return;
    }
    out = static_cast<Int>(x);
  }

  void boolean(const json& obj, const std::string& key, const std::string& prefix, bool& out) {
    if (!obj.contains(key)) return;
    const json& v = obj.at(key);
    if (!v.is_boolean()) {
      error(prefix + "." + key, "must be true or false");
      return;
    }
    out = v.get<bool>();
  }

  template <class E>
  void choice(const json& obj, const std::string& key, const std::string& prefix,
              const std::vector<std::pair<std::string, E>>& options, E& out) {
    if (!obj.contains(key)) return;
    const std::string path = prefix.empty() ? key : prefix + "." + key;
    const json& v = obj.at(key);
    std::vector<std::string> names;
    for (const auto& o : options) names.push_back(o.first);
    if (!v.is_string()) {
      error(path, "must be a string");
      return;
    }
    for (const auto& o : options) {
      if (o.first == v.get<std::string>()) {
        out = o.second;
        return;
      }
    }
    std::string msg = "unknown value \"" + v.get<std::string>() + "\"";
    if (auto s = nearest(v.get<std::string>(), names)) msg += "; did you mean \"" + *s + "\"?";
    error(path, msg);
  }

 private:
  std::map<std::string, int> lines_;
  std::vector<Issue>& issues_;
};

const auto positive = [](double x) { return x > 0.0; };
const auto non_negative = [](double x) { return x >= 0.0; };

void read_range(Reader& r, const json& root, const std::string& key, Range& out, bool non_neg_min) {
  const json* g = r.object(root, key, key);
  if (!g) return;
  r.check_keys(*g, key, {"min", "max", "step"});
  if (non_neg_min) r.number(*g, "min", key, out.min, non_negative, ">= 0");
  else r.number(*g, "min", key, out.min);
  r.number(*g, "max", key, out.max);
  r.number(*g, "step", key, out.step, positive, "> 0");
  if (out.max < out.min) r.error(key + ".max", "must not be below " + key + ".min");
  else if ((out.max - out.min) / out.step > 1e6) r.error(key + ".step", "grid has more than 1e6 points");
}

}  // namespace

ParseResult parse_config(const std::string& text, const std::optional<std::string>& command) {
  ParseResult result;
  RunConfig& c = result.config;
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    std::string msg = e.what();
    int line = 1;
    const std::size_t upto = std::min(e.byte, text.size());
    for (std::size_t i = 0; i + 1 < upto; ++i) line += text[i] == '\n';
    result.issues.push_back({"", line, "invalid JSON: " + msg});
    return result;
  }
  Reader r(text, result.issues);
  if (!root.is_object()) {
    r.error("", "configuration must be a JSON object");
    return result;
  }
  r.check_keys(root, "", {"command", "seed", "output", "model", "flow", "bias", "schedule", "integrator", "sde",
                          "start", "time", "grid", "s_grid", "gamma_grid", "free_energy", "sweep", "calibration"});

  if (root.contains("command")) {
    const json& v = root.at("command");
    if (!v.is_string()) {
      r.error("command", "must be a string");
    } else {
      c.command = v.get<std::string>();
      if (std::find(kCommands.begin(), kCommands.end(), c.command) == kCommands.end()) {
        std::string msg = "unknown command \"" + c.command + "\"";
        if (auto s = nearest(c.command, kCommands)) msg += "; did you mean \"" + *s + "\"?";
        r.error("command", msg);
      } else if (command && *command != c.command) {
        r.error("command", "config is for \"" + c.command + "\" but \"" + *command + "\" was requested");
      }
    }
  } else if (command) {
    c.command = *command;
  } else {
    r.error("command", "missing; name one of the subcommands");
  }

  r.integer(root, "seed", "", c.seed, uint64_t{0});
  if (root.contains("output")) {
    if (root.at("output").is_string()) c.output = root.at("output").get<std::string>();
    else r.error("output", "must be a string");
  }

  if (const json* m = r.object(root, "model", "model")) {
    r.check_keys(*m, "model", {"J", "gamma", "h"});
    r.number(*m, "J", "model", c.J, positive, "> 0");
    r.number(*m, "gamma", "model", c.gamma, non_negative, ">= 0");
    r.number(*m, "h", "model", c.h);
  }

  if (const json* f = r.object(root, "flow", "flow")) {
    r.check_keys(*f, "flow", {"kind", "radial"});
    const std::vector<std::pair<std::string, dimer_flow_kind>> kinds = {{"unitary", DIMER_FLOW_UNITARY},
                                                                        {"lindblad", DIMER_FLOW_LINDBLAD},
                                                                        {"angular", DIMER_FLOW_ANGULAR},
                                                                        {"biased", DIMER_FLOW_BIASED_LINEAR}};
    r.choice(*f, "kind", "flow", kinds, c.flow);
    r.boolean(*f, "radial", "flow", c.radial);
  }

  if (const json* b = r.object(root, "bias", "bias")) {
    r.check_keys(*b, "bias", {"kind", "s"});
    r.choice<dimer_bias_kind>(*b, "kind", "bias", {{"linear", DIMER_BIAS_LINEAR}, {"variance", DIMER_BIAS_VARIANCE}},
                              c.bias);
    r.number(*b, "s", "bias", c.s, non_negative, ">= 0");
  }
  if (c.flow == DIMER_FLOW_BIASED_LINEAR && c.bias == DIMER_BIAS_VARIANCE) c.flow = DIMER_FLOW_BIASED_VARIANCE;

  if (const json* s = r.object(root, "schedule", "schedule")) {
    r.check_keys(*s, "schedule", {"kind", "h0", "h1", "T", "tanh_steepness"});
    r.choice<dimer_schedule_kind>(
        *s, "kind", "schedule",
        {{"constant", DIMER_SCHEDULE_CONSTANT}, {"linear", DIMER_SCHEDULE_LINEAR}, {"tanh", DIMER_SCHEDULE_TANH}},
        c.schedule.kind);
    r.number(*s, "h0", "schedule", c.schedule.h0);
    r.number(*s, "h1", "schedule", c.schedule.h1);
    r.number(*s, "T", "schedule", c.schedule.T, positive, "> 0");
    r.number(*s, "tanh_steepness", "schedule", c.schedule.tanh_steepness, positive, "> 0");
  }

  if (const json* g = r.object(root, "integrator", "integrator")) {
    r.check_keys(*g, "integrator", {"rel_tol", "abs_tol", "dt_init", "dt_max", "max_steps"});
    r.number(*g, "rel_tol", "integrator", c.integrator.rel_tol, positive, "> 0");
    r.number(*g, "abs_tol", "integrator", c.integrator.abs_tol, positive, "> 0");
    r.number(*g, "dt_init", "integrator", c.integrator.dt_init, positive, "> 0");
    r.number(*g, "dt_max", "integrator", c.integrator.dt_max, positive, "> 0");
    r.integer(*g, "max_steps", "integrator", c.integrator.max_steps, uint64_t{1});
  }

  if (const json* s = r.object(root, "sde", "sde")) {
    r.check_keys(*s, "sde", {"dt", "t1", "output_every", "scheme", "trajectories"});
    r.number(*s, "dt", "sde", c.sde.dt, positive, "> 0");
    r.number(*s, "t1", "sde", c.sde.t1, positive, "> 0");
    r.integer(*s, "output_every", "sde", c.sde.output_every, std::size_t{1});
    r.choice<dimer_sde_scheme>(*s, "scheme", "sde",
                               {{"heun", DIMER_SDE_HEUN}, {"euler_maruyama", DIMER_SDE_EULER_MARUYAMA}},
                               c.sde.scheme);
    r.integer(*s, "trajectories", "sde", c.trajectories, std::size_t{1});
  }

  if (const json* s = r.object(root, "start", "start")) {
    r.check_keys(*s, "start", {"nx", "ny", "nz"});
    dimer_vec3 v{0.0, 0.0, -1.0};
    r.number(*s, "nx", "start", v.x);
    r.number(*s, "ny", "start", v.y);
    r.number(*s, "nz", "start", v.z);
    if (std::abs(std::sqrt(v.x * v.x + v.y * v.y + v.z * v.z) - 1.0) > 1e-9) {
      r.error("start", "must be a unit vector (|n| = 1 within 1e-9)");
    }
    c.start = v;
  }

  if (const json* t = r.object(root, "time", "time")) {
    r.check_keys(*t, "time", {"t1", "points"});
    r.number(*t, "t1", "time", c.t1, positive, "> 0");
    r.integer(*t, "points", "time", c.points, std::size_t{2});
  }

  if (const json* g = r.object(root, "grid", "grid")) {
    r.check_keys(*g, "grid", {"chart", "resolution", "extent"});
    r.choice<dimer_chart>(*g, "chart", "grid",
                          {{"stereographic", DIMER_CHART_STEREOGRAPHIC}, {"yz_cut", DIMER_CHART_YZ_CUT}}, c.chart);
    r.integer(*g, "resolution", "grid", c.resolution, std::size_t{2});
    r.number(*g, "extent", "grid", c.extent, positive, "> 0");
  }

  read_range(r, root, "s_grid", c.s_grid, true);
  read_range(r, root, "gamma_grid", c.gamma_grid, true);

  if (const json* f = r.object(root, "free_energy", "free_energy")) {
    r.check_keys(*f, "free_energy", {"initial_time", "horizon", "tolerance"});
    r.number(*f, "initial_time", "free_energy", c.free_energy.initial_time, positive, "> 0");
    r.number(*f, "horizon", "free_energy", c.free_energy.horizon, positive, "> 0");
    r.number(*f, "tolerance", "free_energy", c.free_energy.tolerance, positive, "> 0");
    if (c.free_energy.horizon < c.free_energy.initial_time) {
      r.error("free_energy.horizon", "must not be below free_energy.initial_time");
    }
  }

  if (const json* s = r.object(root, "sweep", "sweep")) {
    r.check_keys(*s, "sweep", {"noisy", "sde_dt", "output_points", "trajectory_index"});
    r.boolean(*s, "noisy", "sweep", c.noisy);
    r.number(*s, "sde_dt", "sweep", c.sweep_dt, positive, "> 0");
    r.integer(*s, "output_points", "sweep", c.output_points, std::size_t{1});
    r.integer(*s, "trajectory_index", "sweep", c.trajectory_index, uint64_t{0});
  }

  if (const json* k = r.object(root, "calibration", "calibration")) {
    r.check_keys(*k, "calibration", {"samples", "threshold"});
    r.integer(*k, "samples", "calibration", c.calibration_samples, std::size_t{3});
    r.number(*k, "threshold", "calibration", c.calibration_threshold, positive, "> 0");
  }

  // cross-field physics checks
  if (c.flow == DIMER_FLOW_LINDBLAD && c.command == "fixed-points") {
    r.error("flow.kind", "fixed-point search needs a sphere flow; \"lindblad\" acts on the ball");
  }
  if (c.flow == DIMER_FLOW_LINDBLAD && c.command == "flowfield" && c.chart == DIMER_CHART_STEREOGRAPHIC) {
    r.error("grid.chart", "the ball flow \"lindblad\" is sampled on the \"yz_cut\" chart");
  }
  if (c.radial && c.flow != DIMER_FLOW_ANGULAR) r.error("flow.radial", "only the angular flow carries a radial coordinate");
  if (c.command == "ensemble" && c.sde.dt > c.sde.t1) r.error("sde.dt", "must not exceed sde.t1");
  return result;
}

}  // namespace cli
