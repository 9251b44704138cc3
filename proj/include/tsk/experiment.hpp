#pragma once

// Declarative experiment runs: a JSON config names one study, its
// parameters and an output directory; run() executes it and writes CSV/JSON
// artifacts plus summary.json.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "tsk/errors.hpp"
#include "tsk/io.hpp"
#include "tsk/studies.hpp"

namespace tsk {

using nlohmann::json;

enum class Experiment { heq_solve, heq_continue, ci_solve, ci_continue, ci_horizon_sweep, gmres_theorem };

inline const std::map<std::string, Experiment>& experiment_names() {
  static const std::map<std::string, Experiment> m{
      {"heq_solve", Experiment::heq_solve},
      {"heq_continue", Experiment::heq_continue},
      {"ci_solve", Experiment::ci_solve},
      {"ci_continue", Experiment::ci_continue},
      {"ci_horizon_sweep", Experiment::ci_horizon_sweep},
      {"gmres_theorem", Experiment::gmres_theorem},
  };
  return m;
}

inline std::string to_string(Experiment e) {
  for (const auto& [k, v] : experiment_names())
    if (v == e) return k;
  return "?";
}

inline bool is_ci(Experiment e) {
  return e == Experiment::ci_solve || e == Experiment::ci_continue || e == Experiment::ci_horizon_sweep;
}

struct InitialGuess {
  int mode = 1;              // sin(mode x) profile for Chafee-Infante
  double amplitude = 1.0;
  bool polish = true;        // replace the profile by the nearby steady state first
  std::optional<double> perturbation;  // added as perturbation * sin(x) (sin(mu) for the H-equation)

  double perturbation_or_default(Experiment e) const {
    if (perturbation) return *perturbation;
    return is_ci(e) ? 0.1 : 0.05;
  }
};

struct ExperimentConfig {
  Experiment experiment = Experiment::heq_solve;
  std::uint64_t seed = 1;
  std::string output_dir = "out";

  HEquationSpec heq{};
  ChafeeInfanteSpec ci{};
  InitialGuess guess{};

  StepperMethod method = StepperMethod::rk4;
  std::optional<double> horizon;
  std::optional<double> dt;  // empty: automatic
  double stepper_newton_tol = 1e-12;

  NewtonConfig solver{};
  BranchConfig branch{0.01, 400, 5, 1};
  double continue_start = 0.99;
  double continue_probe = 0.9999179;

  std::vector<double> sweep_horizons{4, 2, 1, 0.5, 0.3, 0.1, 0.07, 0.04, 0.02};
  TheoremStudyConfig theorem{};
  SpectrumRoute route = SpectrumRoute::exact_map;
};

struct Diagnostic {
  std::string field;
  std::string message;
};

inline std::string to_string(const Diagnostic& d) { return d.field + ": " + d.message; }

namespace detail {

class ConfigReader {
 public:
  ConfigReader(const json& root, std::vector<Diagnostic>& diags) : root_(root), diags_(diags) {}

  const json* find(const std::string& path) {
    known_.insert(path);
    const json* node = &root_;
    std::size_t start = 0;
    while (true) {
      const std::size_t dot = path.find('.', start);
      const std::string key = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
      if (!node->is_object() || !node->contains(key)) return nullptr;
      node = &(*node)[key];
      if (dot == std::string::npos) return node;
      start = dot + 1;
    }
  }

  void number(const std::string& path, double& out) {
    if (const json* v = find(path)) {
      if (v->is_number()) out = v->get<double>();
      else bad(path, "expected a number");
    }
  }
  void number(const std::string& path, std::optional<double>& out) {
    if (const json* v = find(path)) {
      if (v->is_number()) out = v->get<double>();
      else bad(path, "expected a number");
    }
  }
  template <class Int>
  void integer(const std::string& path, Int& out) {
    if (const json* v = find(path)) {
      if (v->is_number_integer() && (std::is_signed_v<Int> || v->get<std::int64_t>() >= 0)) out = v->get<Int>();
      else bad(path, std::is_signed_v<Int> ? "expected an integer" : "expected a non-negative integer");
    }
  }
  void boolean(const std::string& path, bool& out) {
    if (const json* v = find(path)) {
      if (v->is_boolean()) out = v->get<bool>();
      else bad(path, "expected true or false");
    }
  }
  void string(const std::string& path, std::string& out) {
    if (const json* v = find(path)) {
      if (v->is_string()) out = v->get<std::string>();
      else bad(path, "expected a string");
    }
  }
  template <class T>
  void list(const std::string& path, std::vector<T>& out) {
    if (const json* v = find(path)) {
      bool ok = v->is_array() && !v->empty();
      if (ok)
        for (const auto& e : *v) ok = ok && (std::is_floating_point_v<T> ? e.is_number() : e.is_number_unsigned());
      if (ok) out = v->get<std::vector<T>>();
      else bad(path, "expected a non-empty array of numbers");
    }
  }

  void bad(const std::string& path, const std::string& msg) { diags_.push_back({path, msg}); }

  /// Reports every leaf in the document that no reader asked for.
  void report_unknown() { walk(root_, ""); }

 private:
  void walk(const json& node, const std::string& prefix) {
    for (auto it = node.begin(); it != node.end(); ++it) {
      const std::string path = prefix.empty() ? it.key() : prefix + "." + it.key();
      if (it->is_object() && !known_.count(path)) walk(*it, path);
      else if (!known_.count(path)) bad(path, "unknown key");
    }
  }

  const json& root_;
  std::vector<Diagnostic>& diags_;
  std::set<std::string> known_;
};

}  // namespace detail

/// Builds a config from a JSON document. Every problem found is appended to
/// diags with its dotted field path; the returned config is only meaningful
/// when diags stays empty.
inline ExperimentConfig parse_config(const json& doc, std::vector<Diagnostic>& diags) {
  ExperimentConfig c;
  if (!doc.is_object()) {
    diags.push_back({"", "top level must be an object"});
    return c;
  }
  detail::ConfigReader r(doc, diags);

  std::string name;
  if (!r.find("experiment")) r.bad("experiment", "missing");
  r.string("experiment", name);
  if (!name.empty()) {
    const auto it = experiment_names().find(name);
    if (it == experiment_names().end()) r.bad("experiment", "unknown experiment '" + name + "'");
    else c.experiment = it->second;
  }
  r.integer("seed", c.seed);
  r.string("output_dir", c.output_dir);

  r.number("problem.c", c.heq.c);
  r.integer("problem.n_nodes", c.heq.n_nodes);
  r.number("problem.lambda", c.ci.lambda);
  r.integer("problem.n_points", c.ci.n_points);

  r.integer("initial_guess.mode", c.guess.mode);
  r.number("initial_guess.amplitude", c.guess.amplitude);
  r.boolean("initial_guess.polish", c.guess.polish);
  r.number("initial_guess.perturbation", c.guess.perturbation);

  std::string method = to_string(c.method);
  r.string("stepper.method", method);
  if (method == "rk4") c.method = StepperMethod::rk4;
  else if (method == "implicit_trapezoid") c.method = StepperMethod::implicit_trapezoid;
  else r.bad("stepper.method", "expected rk4 or implicit_trapezoid");
  r.number("stepper.T", c.horizon);
  if (const json* dt = r.find("stepper.dt")) {
    if (dt->is_number()) c.dt = dt->get<double>();
    else if (!(dt->is_string() && dt->get<std::string>() == "auto")) r.bad("stepper.dt", "expected a number or \"auto\"");
  }
  r.number("stepper.newton_tol", c.stepper_newton_tol);

  r.number("solver.atol", c.solver.atol);
  r.number("solver.rtol", c.solver.rtol);
  std::string forcing = "eisenstat_walker";
  r.string("solver.forcing.mode", forcing);
  if (forcing == "constant") c.solver.forcing.mode = ForcingMode::constant;
  else if (forcing != "eisenstat_walker") r.bad("solver.forcing.mode", "expected constant or eisenstat_walker");
  r.number("solver.forcing.eta", c.solver.forcing.eta_const);
  r.number("solver.forcing.gamma", c.solver.forcing.gamma);
  r.number("solver.forcing.eta_max", c.solver.forcing.eta_max);
  r.number("solver.forcing.eta_floor", c.solver.forcing.eta_floor);
  if (c.solver.forcing.mode == ForcingMode::constant) {
    c.solver.forcing.eta_floor = std::min(c.solver.forcing.eta_floor, c.solver.forcing.eta_const);
    c.solver.forcing.eta_max = std::max(c.solver.forcing.eta_max, c.solver.forcing.eta_const);
  }
  r.integer("solver.max_outer", c.solver.max_outer);
  r.integer("solver.max_inner", c.solver.max_inner);
  r.boolean("solver.damping", c.solver.damping);

  if (c.experiment == Experiment::ci_continue) {
    c.branch.ds = 0.1;
    c.branch.n_steps = 20;
  }
  r.number("continuation.ds", c.branch.ds);
  r.integer("continuation.n_steps", c.branch.n_steps);
  r.integer("continuation.max_retries", c.branch.max_retries);
  r.integer("continuation.direction", c.branch.direction);
  r.number("continuation.start", c.continue_start);
  r.number("continuation.probe", c.continue_probe);

  r.list("sweep.T_values", c.sweep_horizons);

  r.integer("gmres_theorem.N", c.theorem.dimension);
  r.list("gmres_theorem.p", c.theorem.slow_dims);
  r.list("gmres_theorem.e_norms", c.theorem.e_norms);
  r.integer("gmres_theorem.seeds", c.theorem.seeds);
  r.number("gmres_theorem.eta", c.theorem.eta);
  r.number("gmres_theorem.c_cap", c.theorem.c_cap);
  c.theorem.base_seed = c.seed;

  std::string route = "exact_map";
  r.string("spectrum.route", route);
  if (route == "fd_of_phi") c.route = SpectrumRoute::fd_of_phi;
  else if (route != "exact_map") r.bad("spectrum.route", "expected exact_map or fd_of_phi");

  r.report_unknown();
  return c;
}

/// Range and consistency checks for the experiment named in the config.
inline void check_config(const ExperimentConfig& c, std::vector<Diagnostic>& d) {
  auto need = [&](bool ok, const char* field, const char* msg) {
    if (!ok) d.push_back({field, msg});
  };
  need(!c.output_dir.empty(), "output_dir", "must not be empty");
  need(c.solver.atol > 0.0, "solver.atol", "must be positive");
  need(c.solver.rtol > 0.0, "solver.rtol", "must be positive");
  need(c.solver.max_outer >= 1, "solver.max_outer", "must be at least 1");
  const auto& f = c.solver.forcing;
  if (f.mode == ForcingMode::constant) need(f.eta_const > 0.0 && f.eta_const < 1.0, "solver.forcing.eta", "must lie in (0, 1)");
  else {
    need(f.gamma > 0.0 && f.gamma <= 1.0, "solver.forcing.gamma", "must lie in (0, 1]");
    need(f.eta_max > 0.0 && f.eta_max < 1.0, "solver.forcing.eta_max", "must lie in (0, 1)");
    need(f.eta_floor > 0.0 && f.eta_floor <= f.eta_max, "solver.forcing.eta_floor", "must lie in (0, eta_max]");
  }

  const Experiment e = c.experiment;
  if (e == Experiment::heq_solve || e == Experiment::heq_continue) {
    need(c.heq.n_nodes >= 1, "problem.n_nodes", "must be at least 1");
    if (e == Experiment::heq_solve) need(c.heq.c >= 0.0 && c.heq.c < 1.0, "problem.c", "must lie in [0, 1)");
  }
  if (is_ci(e)) {
    need(c.ci.n_points >= 3, "problem.n_points", "must be at least 3");
    need(c.ci.lambda > 0.0, "problem.lambda", "must be positive");
    need(c.guess.mode >= 1, "initial_guess.mode", "must be at least 1");
    need(std::isfinite(c.guess.amplitude), "initial_guess.amplitude", "must be finite");
    need(c.stepper_newton_tol > 0.0, "stepper.newton_tol", "must be positive");
    if (c.dt) need(*c.dt > 0.0, "stepper.dt", "must be positive");
  }
  if (e == Experiment::ci_solve || e == Experiment::ci_continue) {
    if (!c.horizon) d.push_back({"stepper.T", "required for " + to_string(e)});
    else need(*c.horizon > 0.0, "stepper.T", "must be positive");
  }
  if (e == Experiment::ci_horizon_sweep)
    for (double t : c.sweep_horizons) need(t > 0.0, "sweep.T_values", "entries must be positive");
  if (e == Experiment::heq_continue || e == Experiment::ci_continue) {
    need(c.branch.ds > 0.0, "continuation.ds", "must be positive");
    need(c.branch.n_steps >= 1, "continuation.n_steps", "must be at least 1");
    need(c.branch.direction == 1 || c.branch.direction == -1, "continuation.direction", "must be 1 or -1");
  }
  if (e == Experiment::heq_continue) {
    need(c.continue_start >= 0.0 && c.continue_start + 0.5 * c.branch.ds < 1.0, "continuation.start",
         "start and start + ds/2 must lie in [0, 1)");
    need(c.continue_probe > c.continue_start && c.continue_probe < 1.0, "continuation.probe",
         "must lie between start and 1");
  }
  if (e == Experiment::gmres_theorem) {
    const auto& t = c.theorem;
    need(t.dimension >= 2, "gmres_theorem.N", "must be at least 2");
    for (auto p : t.slow_dims) need(p < t.dimension, "gmres_theorem.p", "entries must be below N");
    for (double x : t.e_norms) need(x >= 0.0, "gmres_theorem.e_norms", "entries must be non-negative");
    need(t.seeds >= 1, "gmres_theorem.seeds", "must be at least 1");
    need(t.eta > 0.0 && t.eta < 1.0, "gmres_theorem.eta", "must lie in (0, 1)");
    need(t.c_cap > 0.0, "gmres_theorem.c_cap", "must be positive");
  }
}

/// Writes value (JSON text, or a bare string) at a dotted path.
inline void apply_override(json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + assignment + "' is not key=value");
  const std::string path = assignment.substr(0, eq), text = assignment.substr(eq + 1);
  json value = json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;
  json* node = &doc;
  std::size_t start = 0;
  while (true) {
    const std::size_t dot = path.find('.', start);
    const std::string key = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (key.empty()) throw ConfigError("override '" + assignment + "' has an empty key");
    if (!node->is_object()) *node = json::object();
    if (dot == std::string::npos) {
      (*node)[key] = value;
      return;
    }
    node = &(*node)[key];
    start = dot + 1;
  }
}

inline json load_config_document(const std::filesystem::path& path, const std::vector<std::string>& overrides = {}) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read " + path.string());
  json doc = json::parse(in, nullptr, false, true);
  if (doc.is_discarded()) throw ConfigError(path.string() + " is not valid JSON");
  for (const auto& o : overrides) apply_override(doc, o);
  return doc;
}

/// Empty result: the document describes a runnable experiment.
inline std::vector<Diagnostic> validate_document(const json& doc) {
  std::vector<Diagnostic> d;
  const ExperimentConfig c = parse_config(doc, d);
  if (d.empty()) check_config(c, d);
  return d;
}

inline std::vector<Diagnostic> validate(const std::filesystem::path& path) {
  return validate_document(load_config_document(path));
}

struct RunReport {
  bool ok = false;  // every required solve converged
  std::vector<std::string> files;
  json summary;
};

namespace detail {

inline json stats_json(const NewtonOutcome& o) {
  return {{"converged", o.converged},
          {"outer_steps", o.outer_steps()},
          {"total_inner", o.total_inner()},
          {"last_step_inner", o.last_step_inner()},
          {"total_fevals", o.total_fevals()},
          {"final_f_norm", o.f_norms.empty() ? 0.0 : o.f_norms.back()}};
}

inline json top_eigenvalues(const SpectrumReport& r, std::size_t k) {
  json a = json::array();
  for (std::size_t i = 0; i < std::min(k, r.eigenvalues.size()); ++i)
    a.push_back({r.eigenvalues[i].real(), r.eigenvalues[i].imag()});
  return a;
}

inline std::string join(const std::vector<std::size_t>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ";" : "") + std::to_string(v[i]);
  return s;
}

class Emitter {
 public:
  explicit Emitter(std::filesystem::path dir) : dir_(std::move(dir)) {}
  void csv(const std::string& name, const CsvTable& t) { put(name, t.str()); }
  void json_file(const std::string& name, const json& j) { put(name, j.dump(2) + "\n"); }
  const std::vector<std::string>& files() const { return files_; }
  const std::filesystem::path& dir() const { return dir_; }

 private:
  void put(const std::string& name, const std::string& body) {
    write_atomic(dir_ / name, body);
    files_.push_back(name);
  }
  std::filesystem::path dir_;
  std::vector<std::string> files_;
};

inline Vector ci_profile(const ExperimentConfig& c) {
  Vector u = ci_sine_profile(c.ci, c.guess.amplitude, c.guess.mode);
  if (c.guess.polish) u = ci_steady_state(c.ci, u);
  return u;
}

inline Vector with_sine(Vector u, const ChafeeInfanteSpec& spec, double amount) {
  if (amount != 0.0) axpy(amount, ci_sine_profile(spec, 1.0), u);
  return u;
}

inline bool run_heq_solve(const ExperimentConfig& c, Emitter& out, json& res) {
  const double pert = c.guess.perturbation_or_default(c.experiment);
  const auto sys = heq_system(c.heq);
  const auto ref = newton_gmres(sys, Vector(c.heq.n_nodes, 1.0), c.solver);
  out.csv("history.csv", history_table(ref));
  res["reference"] = stats_json(ref);
  bool ok = ref.converged;
  if (ok && pert != 0.0) {
    const auto st = heq_solve_study(c.heq, pert, c.solver);
    out.csv("history_perturbed.csv", history_table(st.perturbed));
    out.json_file("spectrum.json", spectrum_json(st.spectrum));
    res["perturbed"] = stats_json(st.perturbed);
    res["perturbed_offset"] = st.perturbed_offset;
    res["top_eigenvalues"] = top_eigenvalues(st.spectrum, 10);
    ok = st.perturbed.converged;
  } else if (ok) {
    const auto spec = make_spectrum_report(dense_eigenvalues(fd_jacobian(sys, ref.solution)));
    out.json_file("spectrum.json", spectrum_json(spec));
    res["top_eigenvalues"] = top_eigenvalues(spec, 10);
  }
  return ok;
}

inline bool run_heq_continue(const ExperimentConfig& c, Emitter& out, json& res) {
  const auto st = heq_fold_study(c.heq.n_nodes, c.continue_start, c.continue_probe, c.branch, c.solver);
  out.csv("branch.csv", branch_table(st.forward.points));
  if (!st.retrace.points.empty()) out.csv("branch_retrace.csv", branch_table(st.retrace.points));
  json folds = json::array();
  for (const auto& f : st.folds) folds.push_back({{"index", f.index}, {"lambda", f.lambda_star}});
  res["folds"] = folds;
  res["c_max"] = st.c_max;
  res["points"] = st.forward.points.size();
  res["truncated"] = st.forward.truncated || st.retrace.truncated;
  res["probe_found"] = st.probe_found;
  if (st.probe_found) {
    out.json_file("spectrum_standalone.json", spectrum_json(st.standalone));
    out.json_file("spectrum_augmented.json", spectrum_json(st.augmented));
    res["probe"] = {{"c", c.continue_probe},
                    {"tangent_lambda", st.probe_tangent.lambda},
                    {"standalone_top", top_eigenvalues(st.standalone, 3)},
                    {"augmented_top", top_eigenvalues(st.augmented, 3)}};
  }
  return !st.forward.truncated && !st.folds.empty() && st.probe_found;
}

inline bool run_ci_solve(const ExperimentConfig& c, Emitter& out, json& res) {
  const auto prob = ci_problem(c.ci.n_points);
  const StepperConfig stepper = make_stepper(prob, c.ci.lambda, c.method, *c.horizon, c.dt, c.stepper_newton_tol);
  const Vector guess = with_sine(ci_profile(c), c.ci, c.guess.perturbation_or_default(c.experiment));
  const auto st = ci_solve_study(c.ci, stepper, guess, c.solver, c.route);
  out.csv("history.csv", history_table(st.outcome));
  json spec = spectrum_json(st.spectrum);
  spec["sigma"] = st.sigma;
  out.json_file("spectrum.json", spec);
  res["solve"] = stats_json(st.outcome);
  res["dt"] = stepper.dt;
  res["sigma_max"] = st.sigma.empty() ? 0.0 : st.sigma.back();
  res["rhs_norm"] = st.rhs_norm;
  res["n_outside"] = st.spectrum.n_outside;
  res["norm_inf_u"] = norm_inf(st.outcome.solution);
  return st.outcome.converged;
}

inline bool run_ci_sweep(const ExperimentConfig& c, Emitter& out, json& res) {
  const Vector u_star = ci_steady_state(c.ci, ci_sine_profile(c.ci, c.guess.amplitude, c.guess.mode));
  const Vector guess = with_sine(u_star, c.ci, c.guess.perturbation_or_default(c.experiment));
  const auto rows = ci_horizon_sweep(c.ci, u_star, guess, c.sweep_horizons, c.method, c.dt, c.solver, c.route);
  CsvTable t({"T", "n_outside", "last_step_fevals", "total_fevals", "outer_steps", "converged"});
  bool ok = true;
  json spectra = json::array();
  for (const auto& r : rows) {
    t.row() << r.horizon << r.n_outside << r.last_step_fevals << r.total_fevals << r.outer
            << r.converged;
    spectra.push_back(spectrum_json(r.spectrum));
    ok = ok && r.converged;
  }
  out.csv("sweep.csv", t);
  out.json_file("spectra.json", spectra);
  json counts = json::array();
  for (const auto& r : rows) counts.push_back(r.n_outside);
  res["n_outside"] = counts;
  return ok;
}

inline bool run_ci_continue(const ExperimentConfig& c, Emitter& out, json& res) {
  const auto prob = ci_problem(c.ci.n_points);
  const StepperConfig stepper = make_stepper(prob, c.ci.lambda, c.method, *c.horizon, c.dt, c.stepper_newton_tol);
  const Vector u_star = ci_steady_state(c.ci, ci_sine_profile(c.ci, c.guess.amplitude, c.guess.mode));
  BranchConfig b = c.branch;
  const auto st = ci_continuation_study(c.ci, u_star, stepper, b, c.solver);
  out.csv("branch.csv", branch_table(st.branch.points));
  CsvTable t({"index", "lambda", "corrector_inner", "standalone_inner", "excess", "standalone_converged"});
  bool ok = !st.branch.truncated;
  for (const auto& s : st.steps) {
    t.row() << s.index << s.lambda << join(s.corrector.inner_per_step) << join(s.standalone.inner_per_step) << s.excess
            << s.standalone.converged;
    ok = ok && s.standalone.converged;
  }
  out.csv("overhead.csv", t);
  res["dt"] = stepper.dt;
  res["points"] = st.branch.points.size();
  res["truncated"] = st.branch.truncated;
  res["max_excess"] = st.max_excess;
  return ok;
}

inline bool run_gmres_theorem(const ExperimentConfig& c, Emitter& out, json& res) {
  const auto runs = gmres_theorem_study(c.theorem);
  CsvTable t({"p", "e_norm", "seed", "iterations", "terminated_by", "ratio_at_p_plus_1", "worst_bound_ratio", "pass"});
  bool all = true;
  double worst = 0.0;
  std::size_t max_iter = 0;
  for (const auto& r : runs) {
    t.row() << r.p << r.e_norm << static_cast<std::size_t>(r.seed) << r.iterations << to_string(r.terminated_by)
            << r.ratio_at_p1 << r.worst_ratio << r.pass();
    all = all && r.pass();
    worst = std::max(worst, r.worst_ratio);
    max_iter = std::max(max_iter, r.iterations);
  }
  out.csv("theorem.csv", t);
  res["runs"] = runs.size();
  res["pass"] = all;
  res["worst_bound_ratio"] = worst;
  res["max_iterations"] = max_iter;
  return true;
}

inline std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace detail

/// Executes a validated config. Solver failures are reported through ok and
/// summary.json; whatever was computed before the failure is still written.
inline RunReport run(const ExperimentConfig& c) {
  const auto t0 = std::chrono::steady_clock::now();
  detail::Emitter out(c.output_dir);
  json res = json::object();
  RunReport rep;
  try {
    switch (c.experiment) {
      case Experiment::heq_solve: rep.ok = detail::run_heq_solve(c, out, res); break;
      case Experiment::heq_continue: rep.ok = detail::run_heq_continue(c, out, res); break;
      case Experiment::ci_solve: rep.ok = detail::run_ci_solve(c, out, res); break;
      case Experiment::ci_continue: rep.ok = detail::run_ci_continue(c, out, res); break;
      case Experiment::ci_horizon_sweep: rep.ok = detail::run_ci_sweep(c, out, res); break;
      case Experiment::gmres_theorem: rep.ok = detail::run_gmres_theorem(c, out, res); break;
    }
  } catch (const ConvergenceError& e) {
    rep.ok = false;
    res["error"] = e.what();
  } catch (const NumericalError& e) {
    rep.ok = false;
    res["error"] = e.what();
  }
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  rep.files = out.files();
  rep.summary = {{"experiment", to_string(c.experiment)},
                 {"seed", c.seed},
                 {"converged", rep.ok},
                 {"results", res},
                 {"files", rep.files},
                 {"wall_time_s", wall},
                 {"timestamp", detail::utc_timestamp()}};
  write_atomic(out.dir() / "summary.json", rep.summary.dump(2) + "\n");
  return rep;
}

}  // namespace tsk
