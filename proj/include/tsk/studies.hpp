#pragma once

// The benchmark studies as plain functions returning their raw results. The
// CLI and the acceptance harness both sit on top of these.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <vector>

#include "tsk/continuation.hpp"
#include "tsk/krylov.hpp"
#include "tsk/newton.hpp"
#include "tsk/problems.hpp"
#include "tsk/spectrum.hpp"
#include "tsk/timestepper.hpp"

namespace tsk {

// ------------------------------------------------------------ GMRES theorem

struct TheoremStudyConfig {
  std::size_t dimension = 400;
  std::vector<std::size_t> slow_dims{3, 10};
  std::vector<double> e_norms{0.0, 1e-10, 1e-8};
  std::size_t seeds = 50;
  std::uint64_t base_seed = 1;
  double eta = 1e-6;
  double c_cap = 1e4;
};

struct TheoremRun {
  std::size_t p = 0;
  double e_norm = 0.0;
  std::uint64_t seed = 0;
  std::size_t iterations = 0;
  GmresTermination terminated_by = GmresTermination::tolerance;
  double ratio_at_p1 = 0.0;  // ||r_min(p+1, k)|| / ||r_0||
  double worst_ratio = 0.0;
  bool bound_pass = false;
  bool within_p1 = false;
  bool exact_floor = true;   // e_norm = 0 only: ratio_at_p1 <= 1e-12

  bool pass() const { return bound_pass && within_p1 && exact_floor; }
};

inline std::vector<TheoremRun> gmres_theorem_study(const TheoremStudyConfig& cfg) {
  std::vector<TheoremRun> runs;
  for (std::size_t p : cfg.slow_dims) {
    for (double e : cfg.e_norms) {
      for (std::size_t s = 0; s < cfg.seeds; ++s) {
        const std::uint64_t seed = cfg.base_seed + s;
        const auto syn = synthetic_compact({cfg.dimension, p, e, seed});
        std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
        std::uniform_real_distribution<double> dist(-1.0, 1.0);
        Vector b(cfg.dimension);
        for (double& v : b) v = dist(rng);
        const auto out = gmres(syn.op, b, Vector(cfg.dimension, 0.0), cfg.eta, cfg.dimension);
        const auto verdict = theorem_bound_check(out, p, e, cfg.c_cap);

        TheoremRun r;
        r.p = p;
        r.e_norm = e;
        r.seed = seed;
        r.iterations = out.iterations;
        r.terminated_by = out.terminated_by;
        r.ratio_at_p1 = out.residual_norms[std::min(p + 1, out.iterations)] / out.residual_norms[0];
        r.worst_ratio = verdict.worst_ratio;
        r.bound_pass = verdict.pass;
        r.within_p1 = e > 1e-8 || out.iterations <= p + 1;
        if (e == 0.0) {
          // the eta run may stop short of p + 1; measure the floor separately
          const auto deep = gmres(syn.op, b, Vector(cfg.dimension, 0.0), 1e-15, p + 1);
          r.ratio_at_p1 = deep.residual_norms.back() / deep.residual_norms[0];
          r.exact_floor = r.ratio_at_p1 <= 1e-12;
        }
        runs.push_back(r);
      }
    }
  }
  return runs;
}

// --------------------------------------------------------------- H-equation

struct HeqSolveStudy {
  NewtonOutcome reference;  // from the all-ones guess
  NewtonOutcome perturbed;  // from reference + perturbation * sin(mu_i)
  SpectrumReport spectrum;  // finite-difference Jacobian at the reference root
  double perturbed_offset = 0.0;  // max-norm distance between the two roots
};

inline HeqSolveStudy heq_solve_study(const HEquationSpec& spec, double perturbation, const NewtonConfig& solver) {
  const auto sys = heq_system(spec);
  HeqSolveStudy st;
  st.reference = newton_gmres(sys, Vector(spec.n_nodes, 1.0), solver);
  Vector guess = st.reference.solution;
  const Vector mu = spec.nodes();
  for (std::size_t i = 0; i < guess.size(); ++i) guess[i] += perturbation * std::sin(mu[i]);
  st.perturbed = newton_gmres(sys, guess, solver);
  st.perturbed_offset = norm_inf(subtract(st.perturbed.solution, st.reference.solution));
  st.spectrum = make_spectrum_report(dense_eigenvalues(fd_jacobian(sys, st.reference.solution)));
  return st;
}

struct HeqFoldStudy {
  Branch forward;             // from the start value over the fold
  Branch retrace;             // back over the fold from the far side
  std::vector<FoldRecord> folds;
  double c_max = 0.0;
  bool probe_found = false;
  Tangent probe_tangent;      // secant bracketing the probe value on the retrace
  NewtonOutcome probe_solve;  // stand-alone solve at the probe value
  SpectrumReport standalone;  // F_u at the probe
  SpectrumReport augmented;   // bordered Jacobian at the probe
};

/// Traces the H-equation branch in c from c_start over the fold at c = 1 and
/// back, then compares the stand-alone and augmented Jacobian spectra at
/// c_probe on the physical side. The tangent used there comes from the
/// retrace, so it points toward decreasing c.
inline HeqFoldStudy heq_fold_study(std::size_t n_nodes, double c_start, double c_probe, const BranchConfig& cfg,
                                   const NewtonConfig& solver) {
  const auto f = heq_parameterized(n_nodes);
  auto at = [&](double c) { return NonlinearSystem{n_nodes, [f, c](std::span<const double> x) { return f(x, c); }}; };
  const double c_seed = c_start + 0.5 * cfg.ds;
  const auto a = newton_gmres(at(c_start), Vector(n_nodes, 1.0), solver);
  if (!a.converged) throw ConvergenceError("heq_fold_study: no solution at the start value");
  const auto b = newton_gmres(at(c_seed), a.solution, solver);
  if (!b.converged) throw ConvergenceError("heq_fold_study: no solution at the second seed value");

  HeqFoldStudy st;
  const auto past_probe = [c_probe](const BranchPoint& p) { return p.tangent_lambda < 0.0 && p.lambda < c_probe; };
  BranchConfig fwd = cfg;
  fwd.direction = 1;
  st.forward = continue_branch(f, {a.solution, c_start}, {b.solution, c_seed}, fwd, solver, past_probe);
  const auto& pts = st.forward.points;
  if (pts.size() >= 3) st.folds = detect_folds(pts);
  for (const auto& p : pts) st.c_max = std::max(st.c_max, p.lambda);
  if (st.forward.truncated || st.folds.empty() || !past_probe(pts.back())) return st;

  const auto& last = pts[pts.size() - 1];
  const auto& prev = pts[pts.size() - 2];
  st.retrace = continue_branch(f, {last.u, last.lambda}, {prev.u, prev.lambda}, fwd, solver, past_probe);
  const auto& q = st.retrace.points;
  if (st.retrace.truncated || q.size() < 3 || !past_probe(q.back()) || q[q.size() - 2].lambda < c_probe) return st;

  const auto& above = q[q.size() - 2];
  const auto& below = q.back();
  st.probe_tangent = secant_tangent(above, below);
  const auto sys = at(c_probe);
  st.probe_solve = newton_gmres(sys, below.u, solver);
  if (!st.probe_solve.converged) return st;
  const Vector& u = st.probe_solve.solution;
  BranchPoint base;
  base.u = u;
  base.lambda = c_probe;
  base.tangent_u = st.probe_tangent.u;
  base.tangent_lambda = st.probe_tangent.lambda;
  st.standalone = make_spectrum_report(dense_eigenvalues(fd_jacobian(sys, u)));
  st.augmented = make_spectrum_report(dense_eigenvalues(fd_jacobian(augmented_system(f, base, 0.0), pack(u, c_probe))));
  st.probe_found = true;
  return st;
}

// ----------------------------------------------------------- Chafee-Infante

/// Step size for the time-stepper: the given dt, or for rk4 the stability
/// bound at lambda and for the implicit method min(T, 0.05).
inline StepperConfig make_stepper(const DynamicalProblem& prob, double lambda, StepperMethod method, double horizon,
                                  std::optional<double> dt = std::nullopt, double newton_tol = 1e-12) {
  StepperConfig s{method, horizon, 0.0, newton_tol};
  if (dt) s.dt = std::min(*dt, horizon);
  else s.dt = std::min(horizon, method == StepperMethod::rk4 ? stable_rk4_dt(prob, lambda) : 0.05);
  s.validate();
  return s;
}

struct CiSolveStudy {
  NewtonOutcome outcome;
  SpectrumReport spectrum;     // of u - Phi_T at the solution
  std::vector<double> sigma;   // right-hand-side linearization, ascending
  double rhs_norm = 0.0;       // ||f(u)|| at the solution
};

inline CiSolveStudy ci_solve_study(const ChafeeInfanteSpec& spec, const StepperConfig& stepper, const Vector& guess,
                                   const NewtonConfig& solver, SpectrumRoute route = SpectrumRoute::exact_map) {
  const auto prob = ci_problem(spec.n_points);
  CiSolveStudy st;
  st.outcome = newton_gmres(fixed_point_system(prob, spec.lambda, stepper), guess, solver);
  st.rhs_norm = norm2(ci_rhs(spec, st.outcome.solution));
  st.sigma = linearization_eigenvalues(prob, st.outcome.solution, spec.lambda);
  st.spectrum = timestepper_spectrum(prob, st.outcome.solution, spec.lambda, stepper, route);
  return st;
}

struct SweepRow {
  double horizon = 0.0;
  std::size_t n_outside = 0;
  std::size_t last_step_inner = 0;
  std::size_t last_step_fevals = 0;  // directional derivatives in the final GMRES solve
  std::size_t total_fevals = 0;
  std::size_t outer = 0;
  bool converged = false;
  SpectrumReport spectrum;
};

/// For each horizon: cluster statistics at u_star and a Newton-GMRES solve
/// of the fixed-point problem from guess.
inline std::vector<SweepRow> ci_horizon_sweep(const ChafeeInfanteSpec& spec, const Vector& u_star, const Vector& guess,
                                              const std::vector<double>& horizons, StepperMethod method,
                                              std::optional<double> dt, const NewtonConfig& solver,
                                              SpectrumRoute route = SpectrumRoute::exact_map) {
  const auto prob = ci_problem(spec.n_points);
  std::vector<SweepRow> rows;
  for (double t : horizons) {
    const StepperConfig stepper = make_stepper(prob, spec.lambda, method, t, dt);
    SweepRow r;
    r.horizon = t;
    r.spectrum = timestepper_spectrum(prob, u_star, spec.lambda, stepper, route);
    r.n_outside = r.spectrum.n_outside;
    const auto out = newton_gmres(fixed_point_system(prob, spec.lambda, stepper), guess, solver);
    r.converged = out.converged;
    r.outer = out.outer_steps();
    r.last_step_inner = out.last_step_inner();
    r.last_step_fevals = r.last_step_inner;
    r.total_fevals = out.total_fevals();
    rows.push_back(std::move(r));
  }
  return rows;
}

/// Largest corrector-minus-reference inner count over Newton steps. Steps past
/// the end of the reference compare against its last step.
inline int inner_surplus(const SolverStats& corrector, const SolverStats& reference) {
  const auto& a = corrector.inner_per_step;
  const auto& b = reference.inner_per_step;
  int worst = 0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    const std::size_t ref = b.empty() ? 0 : b[std::min(j, b.size() - 1)];
    worst = std::max(worst, static_cast<int>(a[j]) - static_cast<int>(ref));
  }
  return worst;
}

struct CiContinuationStep {
  std::size_t index = 0;  // position in the branch
  double lambda = 0.0;
  SolverStats corrector;
  SolverStats standalone;  // fixed-point solve at the accepted lambda from the predictor state
  int excess = 0;          // worst step-by-step surplus of corrector inner iterations
};

struct CiContinuationStudy {
  Branch branch;
  std::vector<CiContinuationStep> steps;
  int max_excess = 0;
};

/// Continuation of u - Phi_T(u; lambda) = 0 in lambda from u_star, with a
/// matched stand-alone solve at every accepted point.
inline CiContinuationStudy ci_continuation_study(const ChafeeInfanteSpec& spec, const Vector& u_star,
                                                 const StepperConfig& stepper, const BranchConfig& cfg,
                                                 const NewtonConfig& solver) {
  const auto prob = ci_problem(spec.n_points);
  const ParameterizedResidual f = [prob, stepper](std::span<const double> u, double lambda) {
    return fixed_point_residual(prob, u, lambda, stepper);
  };
  const double l0 = spec.lambda, l1 = spec.lambda + 0.5 * cfg.ds * cfg.direction;
  const auto a = newton_gmres(fixed_point_system(prob, l0, stepper), u_star, solver);
  if (!a.converged) throw ConvergenceError("ci_continuation_study: no fixed point at the start value");
  const auto b = newton_gmres(fixed_point_system(prob, l1, stepper), a.solution, solver);
  if (!b.converged) throw ConvergenceError("ci_continuation_study: no fixed point at the second seed value");

  CiContinuationStudy st;
  BranchConfig fwd = cfg;
  fwd.direction = 1;
  st.branch = continue_branch(f, {a.solution, l0}, {b.solution, l1}, fwd, solver);
  for (std::size_t i = 2; i < st.branch.points.size(); ++i) {
    const auto& p = st.branch.points[i];
    CiContinuationStep step;
    step.index = i;
    step.lambda = p.lambda;
    step.corrector = p.stats;
    step.standalone =
        SolverStats::from(newton_gmres(fixed_point_system(prob, p.lambda, stepper), p.predicted_u, solver));
    step.excess = inner_surplus(step.corrector, step.standalone);
    st.max_excess = std::max(st.max_excess, step.excess);
    st.steps.push_back(std::move(step));
  }
  return st;
}

}  // namespace tsk
