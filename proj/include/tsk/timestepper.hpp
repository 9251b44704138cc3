#pragma once

// The "legacy simulator" side: fixed-step integrators for du/dt = f(u; lambda)
// and the time-T map built on them. Every integration is deterministic, so
// repeated calls with the same input return bit-identical output.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>

#include "tsk/errors.hpp"
#include "tsk/linalg.hpp"
#include "tsk/newton.hpp"

namespace tsk {

/// Right-hand side f(u; lambda), optionally with its tridiagonal Jacobian.
struct DynamicalProblem {
  std::size_t dimension = 0;
  /// Writes f(u; lambda) into out (out.size() == dimension).
  std::function<void(std::span<const double> u, double lambda, std::span<double> out)> rhs;
  /// Optional; required by the implicit integrator.
  std::function<Tridiagonal(std::span<const double> u, double lambda)> jac_tridiag;

  Vector eval(std::span<const double> u, double lambda) const {
    Vector out(dimension);
    rhs(u, lambda, out);
    return out;
  }
};

enum class StepperMethod { rk4, implicit_trapezoid };

inline const char* to_string(StepperMethod m) {
  return m == StepperMethod::rk4 ? "rk4" : "implicit_trapezoid";
}

struct StepperConfig {
  StepperMethod method = StepperMethod::rk4;
  double horizon = 1.0;      // reporting horizon T
  double dt = 1e-3;          // fixed step (rk4) or nominal step (implicit)
  double newton_tol = 1e-12; // implicit inner Newton, relative to 1 + ||u||

  void validate() const {
    if (!(horizon > 0.0)) throw std::invalid_argument("StepperConfig: horizon must be positive");
    if (!(dt > 0.0)) throw std::invalid_argument("StepperConfig: dt must be positive");
    if (dt > horizon * (1.0 + 1e-12)) throw std::invalid_argument("StepperConfig: dt must not exceed the horizon");
    if (!(newton_tol > 0.0)) throw std::invalid_argument("StepperConfig: newton_tol must be positive");
  }

  /// Number of fixed steps covering the horizon; dt is shrunk to fit.
  std::size_t step_count() const {
    return static_cast<std::size_t>(std::max(1.0, std::ceil(horizon / dt - 1e-9)));
  }
};

/// Classical RK4 step bound from the Gershgorin radius of the Jacobian at
/// u = 0: dt <= safety / |sigma_max|. RK4's real stability interval ends
/// near -2.785, the default safety 1.8 keeps stiff modes strongly damped.
inline double stable_rk4_dt(const DynamicalProblem& prob, double lambda, double safety = 1.8) {
  if (!prob.jac_tridiag) throw std::invalid_argument("stable_rk4_dt: problem has no Jacobian");
  const Vector zero(prob.dimension, 0.0);
  const Tridiagonal j = prob.jac_tridiag(zero, lambda);
  double radius = 0.0;
  for (std::size_t i = 0; i < j.size(); ++i) {
    double r = std::abs(j.diag[i]);
    if (i > 0) r += std::abs(j.sub[i - 1]);
    if (i + 1 < j.size()) r += std::abs(j.super[i]);
    radius = std::max(radius, r);
  }
  return radius > 0.0 ? safety / radius : std::numeric_limits<double>::infinity();
}

inline Vector rk4_integrate(const DynamicalProblem& prob, std::span<const double> u0, double lambda,
                            const StepperConfig& cfg) {
  cfg.validate();
  const std::size_t n = prob.dimension;
  if (u0.size() != n) throw std::invalid_argument("rk4_integrate: state has the wrong dimension");
  const std::size_t steps = cfg.step_count();
  const double h = cfg.horizon / static_cast<double>(steps);

  Vector u(u0.begin(), u0.end()), stage(n), k1(n), k2(n), k3(n), k4(n);
  for (std::size_t s = 0; s < steps; ++s) {
    prob.rhs(u, lambda, k1);
    for (std::size_t i = 0; i < n; ++i) stage[i] = u[i] + 0.5 * h * k1[i];
    prob.rhs(stage, lambda, k2);
    for (std::size_t i = 0; i < n; ++i) stage[i] = u[i] + 0.5 * h * k2[i];
    prob.rhs(stage, lambda, k3);
    for (std::size_t i = 0; i < n; ++i) stage[i] = u[i] + h * k3[i];
    prob.rhs(stage, lambda, k4);
    for (std::size_t i = 0; i < n; ++i) u[i] += (h / 6.0) * (k1[i] + 2.0 * (k2[i] + k3[i]) + k4[i]);
    if (!all_finite(u))
      throw NumericalError("rk4_integrate: non-finite state at step " + std::to_string(s + 1) + " of " +
                           std::to_string(steps) + " (dt = " + std::to_string(h) + ")");
  }
  return u;
}

namespace detail {

// One trapezoidal step of size h; false if the inner Newton iteration stalls.
inline bool trapezoid_step(const DynamicalProblem& prob, std::span<const double> u, double lambda, double h,
                           double tol, Vector& w) {
  constexpr int kMaxNewton = 20;
  const std::size_t n = prob.dimension;
  const Vector fu = prob.eval(u, lambda);
  w.assign(u.begin(), u.end());
  Vector fw(n), g(n);
  for (int it = 0; it < kMaxNewton; ++it) {
    prob.rhs(w, lambda, fw);
    for (std::size_t i = 0; i < n; ++i) g[i] = -(w[i] - u[i] - 0.5 * h * (fu[i] + fw[i]));
    Tridiagonal jg = prob.jac_tridiag(w, lambda);
    for (auto& v : jg.sub) v *= -0.5 * h;
    for (auto& v : jg.super) v *= -0.5 * h;
    for (auto& v : jg.diag) v = 1.0 - 0.5 * h * v;
    Vector delta;
    try {
      delta = tridiag_solve(jg, g);
    } catch (const NumericalError&) {
      return false;
    }
    axpy(1.0, delta, w);
    if (!all_finite(w)) return false;
    if (norm2(delta) <= tol * (1.0 + norm2(w))) return true;
  }
  return false;
}

inline void trapezoid_advance(const DynamicalProblem& prob, Vector& u, double lambda, double h, double tol,
                              int halvings) {
  Vector w;
  if (detail::trapezoid_step(prob, u, lambda, h, tol, w)) {
    u = std::move(w);
    return;
  }
  if (halvings >= 20)
    throw ConvergenceError("implicit_trapezoid_integrate: inner Newton failed after 20 step halvings");
  trapezoid_advance(prob, u, lambda, 0.5 * h, tol, halvings + 1);
  trapezoid_advance(prob, u, lambda, 0.5 * h, tol, halvings + 1);
}

}  // namespace detail

/// Trapezoidal rule with a tridiagonal Newton solve per step. A step whose
/// inner iteration does not converge in 20 iterations is retried as two
/// half steps, down to 2^-20 of the nominal dt.
inline Vector implicit_trapezoid_integrate(const DynamicalProblem& prob, std::span<const double> u0, double lambda,
                                           const StepperConfig& cfg) {
  cfg.validate();
  if (!prob.jac_tridiag) throw std::invalid_argument("implicit_trapezoid_integrate: problem has no Jacobian");
  if (u0.size() != prob.dimension) throw std::invalid_argument("implicit_trapezoid_integrate: wrong dimension");
  const std::size_t steps = cfg.step_count();
  const double h = cfg.horizon / static_cast<double>(steps);
  Vector u(u0.begin(), u0.end());
  for (std::size_t s = 0; s < steps; ++s) detail::trapezoid_advance(prob, u, lambda, h, cfg.newton_tol, 0);
  return u;
}

/// Phi_T(u; lambda).
inline Vector phi_map(const DynamicalProblem& prob, std::span<const double> u, double lambda,
                      const StepperConfig& cfg) {
  switch (cfg.method) {
    case StepperMethod::rk4: return rk4_integrate(prob, u, lambda, cfg);
    case StepperMethod::implicit_trapezoid: return implicit_trapezoid_integrate(prob, u, lambda, cfg);
  }
  throw std::invalid_argument("phi_map: unknown method");
}

/// u - Phi_T(u; lambda). One call is one function evaluation.
inline Vector fixed_point_residual(const DynamicalProblem& prob, std::span<const double> u, double lambda,
                                   const StepperConfig& cfg) {
  Vector r = phi_map(prob, u, lambda, cfg);
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = u[i] - r[i];
  return r;
}

/// The fixed-point residual at fixed lambda, as a Newton system.
inline NonlinearSystem fixed_point_system(DynamicalProblem prob, double lambda, StepperConfig cfg) {
  const std::size_t n = prob.dimension;
  return {n, [prob = std::move(prob), lambda, cfg](std::span<const double> u) {
            return fixed_point_residual(prob, u, lambda, cfg);
          }};
}

}  // namespace tsk
