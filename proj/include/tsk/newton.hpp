#pragma once

// Jacobian-free Newton-GMRES. The Jacobian is never formed: each GMRES
// iteration costs one residual evaluation through a forward difference.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "tsk/errors.hpp"
#include "tsk/krylov.hpp"
#include "tsk/linalg.hpp"

namespace tsk {

struct NonlinearSystem {
  std::size_t dimension = 0;
  std::function<Vector(std::span<const double>)> residual;

  Vector operator()(std::span<const double> u) const { return residual(u); }
};

enum class ForcingMode { constant, eisenstat_walker };

struct ForcingConfig {
  ForcingMode mode = ForcingMode::eisenstat_walker;
  double eta_const = 1e-4;
  double gamma = 0.9;
  double eta_max = 0.9;
  double eta_floor = 1e-10;

  static ForcingConfig constant(double eta) {
    ForcingConfig c;
    c.mode = ForcingMode::constant;
    c.eta_const = eta;
    c.eta_floor = std::min(c.eta_floor, eta);
    c.eta_max = std::max(c.eta_max, eta);
    return c;
  }

  void validate() const {
    if (!(eta_floor > 0.0 && eta_floor <= eta_const && eta_const <= eta_max && eta_max < 1.0))
      throw std::invalid_argument("ForcingConfig: need 0 < eta_floor <= eta_const <= eta_max < 1");
    if (!(gamma > 0.0 && gamma <= 1.0)) throw std::invalid_argument("ForcingConfig: gamma must lie in (0, 1]");
  }
};

/// Difference increment for a directional derivative along v at u.
inline double dirder_increment(std::span<const double> u, std::span<const double> v) {
  static const double root_eps = std::sqrt(std::numeric_limits<double>::epsilon());
  return root_eps * (1.0 + norm2(u)) / norm2(v);
}

/// Forward-difference estimate of F'(u) v. f_of_u must equal F(u). Costs one
/// residual evaluation, none when v = 0.
inline Vector dirder(const NonlinearSystem& sys, std::span<const double> u, std::span<const double> v,
                     std::span<const double> f_of_u) {
  const std::size_t n = u.size();
  if (norm_inf(v) == 0.0) return Vector(n, 0.0);
  const double h = dirder_increment(u, v);
  Vector probe(u.begin(), u.end());
  axpy(h, v, probe);
  Vector fp = sys.residual(probe);
  if (fp.size() != f_of_u.size())
    throw std::invalid_argument("dirder: residual dimension changed between calls");
  if (!all_finite(fp))
    throw NumericalError("dirder: non-finite residual at probe u + h*v (h = " + std::to_string(h) + ")");
  for (std::size_t i = 0; i < fp.size(); ++i) fp[i] = (fp[i] - f_of_u[i]) / h;
  return fp;
}

/// Next inner tolerance. Eisenstat-Walker choice 2 with the usual safeguard.
inline double forcing_term(const ForcingConfig& cfg, double fnorm_new, double fnorm_old, double eta_prev) {
  if (cfg.mode == ForcingMode::constant) return cfg.eta_const;
  if (!(fnorm_old > 0.0)) throw std::invalid_argument("forcing_term: fnorm_old must be positive");
  const double ratio = fnorm_new / fnorm_old;
  double eta = cfg.gamma * ratio * ratio;
  const double safeguard = cfg.gamma * eta_prev * eta_prev;
  if (safeguard > 0.1) eta = std::max(eta, safeguard);
  return std::min(cfg.eta_max, std::max(cfg.eta_floor, eta));
}

struct NewtonConfig {
  double atol = 1e-12;
  double rtol = 1e-12;
  ForcingConfig forcing{};
  std::size_t max_outer = 40;
  std::size_t max_inner = 0;  // 0: the system dimension
  bool damping = false;       // step halving on residual increase
  std::size_t max_halvings = 10;
};

/// Per-outer-step history. Entry 0 is the initial iterate (no inner work,
/// one evaluation); entry k >= 1 is the state after the k-th Newton step.
struct NewtonOutcome {
  Vector solution;
  std::vector<double> f_norms;
  std::vector<std::size_t> inner_iterations;
  std::vector<std::size_t> cumulative_fevals;
  std::vector<double> etas;                        // forcing term used for step k (0 for entry 0)
  std::vector<GmresTermination> inner_termination; // tolerance for entry 0
  bool converged = false;
  std::size_t inner_breakdowns = 0;

  std::size_t outer_steps() const noexcept { return f_norms.empty() ? 0 : f_norms.size() - 1; }
  std::size_t total_inner() const {
    std::size_t s = 0;
    for (auto k : inner_iterations) s += k;
    return s;
  }
  std::size_t last_step_inner() const { return inner_iterations.empty() ? 0 : inner_iterations.back(); }
  std::size_t total_fevals() const { return cumulative_fevals.empty() ? 0 : cumulative_fevals.back(); }
};

inline NewtonOutcome newton_gmres(const NonlinearSystem& sys, std::span<const double> u0, const NewtonConfig& cfg) {
  const std::size_t n = sys.dimension;
  if (u0.size() != n) throw std::invalid_argument("newton_gmres: initial iterate has the wrong dimension");
  if (!all_finite(u0)) throw NumericalError("newton_gmres: non-finite initial iterate");
  if (!(cfg.atol > 0.0 && cfg.rtol > 0.0)) throw std::invalid_argument("newton_gmres: atol and rtol must be positive");
  cfg.forcing.validate();

  std::size_t fevals = 0;
  auto eval = [&](std::span<const double> x) {
    ++fevals;
    Vector f = sys.residual(x);
    if (f.size() != n) throw std::invalid_argument("newton_gmres: residual has the wrong dimension");
    return f;
  };

  NewtonOutcome out;
  Vector u(u0.begin(), u0.end());
  Vector f = eval(u);
  if (!all_finite(f)) throw NumericalError("newton_gmres: non-finite residual at the initial iterate");
  double fnorm = norm2(f);
  const double stop = cfg.atol + cfg.rtol * fnorm;

  auto record = [&](std::size_t inner, double eta, GmresTermination t) {
    out.f_norms.push_back(fnorm);
    out.inner_iterations.push_back(inner);
    out.cumulative_fevals.push_back(fevals);
    out.etas.push_back(eta);
    out.inner_termination.push_back(t);
  };
  record(0, 0.0, GmresTermination::tolerance);

  const std::size_t max_inner = std::min(cfg.max_inner == 0 ? n : cfg.max_inner, n);
  double eta = cfg.forcing.mode == ForcingMode::constant ? cfg.forcing.eta_const : cfg.forcing.eta_max;

  for (std::size_t k = 0; k < cfg.max_outer && fnorm > stop; ++k) {
    const Vector fc = f;
    LinearOperator jac{n, [&](std::span<const double> v) {
                         if (norm_inf(v) != 0.0) ++fevals;
                         return dirder(sys, u, v, fc);
                       }};
    Vector rhs(fc);
    scale(-1.0, rhs);
    const Vector zero(n, 0.0);
    GmresOutcome lin = gmres(jac, rhs, zero, eta, max_inner, GmresOptions{.verify_residual = false});
    if (lin.terminated_by == GmresTermination::breakdown) ++out.inner_breakdowns;

    Vector trial = u;
    axpy(1.0, lin.solution, trial);
    Vector ftrial = eval(trial);
    double ftrial_norm = all_finite(ftrial) ? norm2(ftrial) : std::numeric_limits<double>::infinity();

    if (cfg.damping) {
      double step = 1.0;
      for (std::size_t h = 0; h < cfg.max_halvings && !(ftrial_norm < fnorm); ++h) {
        step *= 0.5;
        trial = u;
        axpy(step, lin.solution, trial);
        ftrial = eval(trial);
        ftrial_norm = all_finite(ftrial) ? norm2(ftrial) : std::numeric_limits<double>::infinity();
      }
    }
    if (!std::isfinite(ftrial_norm)) throw NumericalError("newton_gmres: non-finite residual after Newton step");

    const double fnorm_old = fnorm;
    const double eta_used = eta;
    u = std::move(trial);
    f = std::move(ftrial);
    fnorm = ftrial_norm;
    record(lin.iterations, eta_used, lin.terminated_by);
    eta = forcing_term(cfg.forcing, fnorm, fnorm_old, eta);
  }

  out.converged = fnorm <= stop;
  out.solution = std::move(u);
  return out;
}

}  // namespace tsk
