#pragma once

// Pseudo-arclength continuation with secant tangents. The corrector is the
// same matrix-free Newton-GMRES used for fixed points, applied to the
// bordered (N+1)-dimensional system.

#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "tsk/errors.hpp"
#include "tsk/linalg.hpp"
#include "tsk/newton.hpp"

namespace tsk {

/// F(u, lambda).
using ParameterizedResidual = std::function<Vector(std::span<const double>, double)>;

struct SolverStats {
  bool converged = true;
  std::size_t outer = 0;
  std::vector<std::size_t> inner_per_step;  // one entry per Newton step
  std::size_t fevals = 0;

  std::size_t total_inner() const {
    std::size_t s = 0;
    for (auto k : inner_per_step) s += k;
    return s;
  }
  std::size_t max_inner() const {
    std::size_t m = 0;
    for (auto k : inner_per_step) m = std::max(m, k);
    return m;
  }

  static SolverStats from(const NewtonOutcome& o) {
    SolverStats s;
    s.converged = o.converged;
    s.outer = o.outer_steps();
    s.inner_per_step.assign(o.inner_iterations.begin() + (o.inner_iterations.empty() ? 0 : 1), o.inner_iterations.end());
    s.fevals = o.total_fevals();
    return s;
  }
};

struct BranchPoint {
  Vector u;
  double lambda = 0.0;
  double s = 0.0;
  Vector tangent_u;  // empty until a tangent is known
  double tangent_lambda = 0.0;
  SolverStats stats;
  double ds_used = 0.0;  // arclength step that produced this point (0 for seeds)
  Vector predicted_u;    // linear predictor that started the corrector
  double predicted_lambda = 0.0;

  bool has_tangent() const { return !tangent_u.empty(); }
};

struct BranchConfig {
  double ds = 0.01;
  std::size_t n_steps = 100;
  std::size_t max_retries = 5;
  int direction = 1;

  void validate() const {
    if (!(ds > 0.0)) throw std::invalid_argument("BranchConfig: ds must be positive");
    if (direction != 1 && direction != -1) throw std::invalid_argument("BranchConfig: direction must be +1 or -1");
  }
};

struct Tangent {
  Vector u;
  double lambda = 0.0;
};

/// Unit chord from prev to curr in R^{N+1}, flipped if it opposes the tangent
/// already stored on curr.
inline Tangent secant_tangent(const BranchPoint& prev, const BranchPoint& curr) {
  if (prev.u.size() != curr.u.size()) throw std::invalid_argument("secant_tangent: dimension mismatch");
  Tangent t{subtract(curr.u, prev.u), curr.lambda - prev.lambda};
  const double nrm = std::hypot(norm2(t.u), t.lambda);
  if (nrm == 0.0) throw NumericalError("secant_tangent: the two branch points coincide");
  scale(1.0 / nrm, t.u);
  t.lambda /= nrm;
  if (curr.has_tangent() && dot(t.u, curr.tangent_u) + t.lambda * curr.tangent_lambda < 0.0) {
    scale(-1.0, t.u);
    t.lambda = -t.lambda;
  }
  return t;
}

/// (F(u, lambda); tu^T (u - u_b) + tl (lambda - lambda_b) - ds), with the
/// tangent (tu, tl) taken from base.
inline Vector augmented_residual(const ParameterizedResidual& f, std::span<const double> u, double lambda,
                                 const BranchPoint& base, double ds) {
  if (!base.has_tangent()) throw std::invalid_argument("augmented_residual: base point carries no tangent");
  Vector g = f(u, lambda);
  double arc = base.tangent_lambda * (lambda - base.lambda) - ds;
  for (std::size_t i = 0; i < u.size(); ++i) arc += base.tangent_u[i] * (u[i] - base.u[i]);
  g.push_back(arc);
  return g;
}

/// The augmented residual as a system on x = (u, lambda).
inline NonlinearSystem augmented_system(ParameterizedResidual f, const BranchPoint& base, double ds) {
  const std::size_t n = base.u.size();
  return {n + 1, [f = std::move(f), base, ds, n](std::span<const double> x) {
            return augmented_residual(f, x.first(n), x[n], base, ds);
          }};
}

inline Vector pack(std::span<const double> u, double lambda) {
  Vector x(u.begin(), u.end());
  x.push_back(lambda);
  return x;
}

struct Branch {
  std::vector<BranchPoint> points;
  bool truncated = false;  // a step failed after max_retries halvings
};

/// Seeds must be converged solutions at nearby parameter values. Each step
/// predicts along the secant tangent with the configured ds, corrects with
/// Newton-GMRES on the augmented system, and halves ds on failure. stop, when
/// given, ends the run after the first accepted point for which it is true.
inline Branch continue_branch(const ParameterizedResidual& f, std::pair<Vector, double> seed0,
                              std::pair<Vector, double> seed1, const BranchConfig& cfg, const NewtonConfig& solver,
                              const std::function<bool(const BranchPoint&)>& stop = {}) {
  cfg.validate();
  if (cfg.direction < 0) std::swap(seed0, seed1);
  Branch br;
  BranchPoint p0, p1;
  p0.u = std::move(seed0.first);
  p0.lambda = seed0.second;
  p1.u = std::move(seed1.first);
  p1.lambda = seed1.second;
  if (p0.u.size() != p1.u.size()) throw std::invalid_argument("continue_branch: seed dimensions differ");
  const Tangent t1 = secant_tangent(p0, p1);
  p1.s = std::hypot(norm2(subtract(p1.u, p0.u)), p1.lambda - p0.lambda);
  p0.tangent_u = t1.u;
  p0.tangent_lambda = t1.lambda;
  p1.tangent_u = t1.u;
  p1.tangent_lambda = t1.lambda;
  br.points.push_back(std::move(p0));
  br.points.push_back(std::move(p1));

  const std::size_t n = br.points.back().u.size();
  for (std::size_t step = 0; step < cfg.n_steps; ++step) {
    const BranchPoint& base = br.points.back();
    double ds = cfg.ds;
    bool accepted = false;
    for (std::size_t attempt = 0; attempt <= cfg.max_retries; ++attempt, ds *= 0.5) {
      Vector pred = pack(base.u, base.lambda);
      axpy(ds, base.tangent_u, std::span<double>(pred).first(n));
      pred[n] += ds * base.tangent_lambda;

      NewtonOutcome corr;
      try {
        corr = newton_gmres(augmented_system(f, base, ds), pred, solver);
      } catch (const NumericalError&) {
        continue;
      }
      if (!corr.converged) continue;

      BranchPoint next;
      next.u.assign(corr.solution.begin(), corr.solution.begin() + static_cast<std::ptrdiff_t>(n));
      next.lambda = corr.solution[n];
      next.s = base.s + ds;
      next.ds_used = ds;
      next.stats = SolverStats::from(corr);
      next.predicted_u.assign(pred.begin(), pred.begin() + static_cast<std::ptrdiff_t>(n));
      next.predicted_lambda = pred[n];
      next.tangent_u = base.tangent_u;  // orientation reference for the new secant
      next.tangent_lambda = base.tangent_lambda;
      const Tangent t = secant_tangent(base, next);
      next.tangent_u = t.u;
      next.tangent_lambda = t.lambda;
      br.points.push_back(std::move(next));
      accepted = true;
      break;
    }
    if (!accepted) {
      br.truncated = true;
      break;
    }
    if (stop && stop(br.points.back())) break;
  }
  return br;
}

struct FoldRecord {
  std::size_t index = 0;     // first point after the sign change of tangent_lambda
  double lambda_star = 0.0;  // linear interpolation of tangent_lambda through zero
};

inline std::vector<FoldRecord> detect_folds(const std::vector<BranchPoint>& branch) {
  if (branch.size() < 3) throw std::invalid_argument("detect_folds: need at least three branch points");
  std::vector<FoldRecord> folds;
  for (std::size_t i = 1; i < branch.size(); ++i) {
    const double a = branch[i - 1].tangent_lambda, b = branch[i].tangent_lambda;
    if ((a > 0.0 && b < 0.0) || (a < 0.0 && b > 0.0)) {
      const double t = a / (a - b);
      folds.push_back({i, branch[i - 1].lambda + t * (branch[i].lambda - branch[i - 1].lambda)});
    }
  }
  return folds;
}

}  // namespace tsk
