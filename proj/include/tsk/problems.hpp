#pragma once

// Benchmark systems: the discretized Chandrasekhar H-equation, the
// Chafee-Infante reaction-diffusion equation, and synthetic operators of the
// form I - K + E with K supported on a p-dimensional subspace.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <mutex>
#include <numbers>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "tsk/eigensolvers.hpp"
#include "tsk/errors.hpp"
#include "tsk/krylov.hpp"
#include "tsk/linalg.hpp"
#include "tsk/newton.hpp"
#include "tsk/timestepper.hpp"

namespace tsk {

// ---------------------------------------------------------------- H-equation

struct HEquationSpec {
  std::size_t n_nodes = 100;
  double c = 0.9999179;

  /// Midpoint-rule nodes (i - 1/2)/N.
  Vector nodes() const {
    Vector mu(n_nodes);
    for (std::size_t i = 0; i < n_nodes; ++i) mu[i] = (static_cast<double>(i) + 0.5) / static_cast<double>(n_nodes);
    return mu;
  }
};

namespace detail {

struct HEquationKernel {
  std::size_t n = 0;
  DenseMatrix weights;  // mu_i / (mu_i + mu_j)

  explicit HEquationKernel(std::size_t nodes) : n(nodes), weights(nodes, nodes) {
    const Vector mu = HEquationSpec{nodes, 0.0}.nodes();
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) weights(i, j) = mu[i] / (mu[i] + mu[j]);
  }

  Vector residual(std::span<const double> x, double c) const {
    if (x.size() != n) throw std::invalid_argument("heq_residual: state has the wrong dimension");
    const double factor = c / (2.0 * static_cast<double>(n));
    Vector f(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double denom = 1.0 - factor * dot(weights.row(i), x);
      if (!(std::abs(denom) > 1e-13))
        throw NumericalError("heq_residual: vanishing denominator in component " + std::to_string(i));
      f[i] = x[i] - 1.0 / denom;
    }
    return f;
  }
};

}  // namespace detail

/// F(x)_i = x_i - (1 - c/(2N) sum_j mu_i x_j / (mu_i + mu_j))^{-1}
inline Vector heq_residual(const HEquationSpec& spec, std::span<const double> x) {
  return detail::HEquationKernel(spec.n_nodes).residual(x, spec.c);
}

/// Residual as a function of (x, c), sharing one precomputed kernel.
inline std::function<Vector(std::span<const double>, double)> heq_parameterized(std::size_t n_nodes) {
  auto kernel = std::make_shared<const detail::HEquationKernel>(n_nodes);
  return [kernel](std::span<const double> x, double c) { return kernel->residual(x, c); };
}

inline NonlinearSystem heq_system(const HEquationSpec& spec) {
  auto f = heq_parameterized(spec.n_nodes);
  return {spec.n_nodes, [f, c = spec.c](std::span<const double> x) { return f(x, c); }};
}

// ----------------------------------------------------------- Chafee-Infante

/// u_t = (1/lambda) u_xx + u - u^3 on [0, pi], u = 0 at both ends, centred
/// differences on n_points equispaced points (boundaries included).
struct ChafeeInfanteSpec {
  std::size_t n_points = 201;
  double lambda = 2.1386697;

  std::size_t interior() const { return n_points - 2; }
  double mesh_width() const { return std::numbers::pi / static_cast<double>(n_points - 1); }

  /// Interior grid coordinates x_1 .. x_{n-2}.
  Vector grid() const {
    Vector x(interior());
    const double h = mesh_width();
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = static_cast<double>(i + 1) * h;
    return x;
  }

  void validate() const {
    if (n_points < 3) throw std::invalid_argument("ChafeeInfanteSpec: need at least 3 points");
    if (!(lambda > 0.0)) throw std::invalid_argument("ChafeeInfanteSpec: lambda must be positive");
  }
};

namespace detail {

inline void ci_rhs_into(std::size_t m, double h, double lambda, std::span<const double> u, std::span<double> f) {
  const double k = 1.0 / (lambda * h * h);
  for (std::size_t i = 0; i < m; ++i) {
    const double left = i > 0 ? u[i - 1] : 0.0;
    const double right = i + 1 < m ? u[i + 1] : 0.0;
    const double ui = u[i];
    f[i] = k * (left - 2.0 * ui + right) + ui - ui * ui * ui;
  }
}

inline Tridiagonal ci_jacobian(std::size_t m, double h, double lambda, std::span<const double> u) {
  const double k = 1.0 / (lambda * h * h);
  Tridiagonal t;
  t.sub.assign(m - 1, k);
  t.super.assign(m - 1, k);
  t.diag.resize(m);
  for (std::size_t i = 0; i < m; ++i) t.diag[i] = -2.0 * k + 1.0 - 3.0 * u[i] * u[i];
  return t;
}

}  // namespace detail

inline Vector ci_rhs(const ChafeeInfanteSpec& spec, std::span<const double> u) {
  spec.validate();
  if (u.size() != spec.interior()) throw std::invalid_argument("ci_rhs: state must hold the interior unknowns");
  Vector f(u.size());
  detail::ci_rhs_into(u.size(), spec.mesh_width(), spec.lambda, u, f);
  return f;
}

inline Tridiagonal ci_jacobian_tridiag(const ChafeeInfanteSpec& spec, std::span<const double> u) {
  spec.validate();
  if (u.size() != spec.interior()) throw std::invalid_argument("ci_jacobian_tridiag: wrong state dimension");
  return detail::ci_jacobian(u.size(), spec.mesh_width(), spec.lambda, u);
}

/// The Chafee-Infante semi-discretization as a time-stepper input; lambda is
/// supplied per call.
inline DynamicalProblem ci_problem(std::size_t n_points) {
  const ChafeeInfanteSpec shape{n_points, 1.0};
  shape.validate();
  const std::size_t m = shape.interior();
  const double h = shape.mesh_width();
  DynamicalProblem p;
  p.dimension = m;
  p.rhs = [m, h](std::span<const double> u, double lambda, std::span<double> out) {
    detail::ci_rhs_into(m, h, lambda, u, out);
  };
  p.jac_tridiag = [m, h](std::span<const double> u, double lambda) { return detail::ci_jacobian(m, h, lambda, u); };
  return p;
}

/// Steady state of ci_rhs by Newton's method with the analytic tridiagonal
/// Jacobian. Independent of the time-stepper; used for reference states.
inline Vector ci_steady_state(const ChafeeInfanteSpec& spec, std::span<const double> guess, double tol = 1e-13,
                              int max_iter = 60) {
  Vector u(guess.begin(), guess.end());
  for (int it = 0; it < max_iter; ++it) {
    Vector f = ci_rhs(spec, u);
    scale(-1.0, f);
    const Vector du = tridiag_solve(ci_jacobian_tridiag(spec, u), f);
    axpy(1.0, du, u);
    if (norm2(du) <= tol * (1.0 + norm2(u))) return u;
  }
  throw ConvergenceError("ci_steady_state: Newton did not converge");
}

/// amplitude * sin(mode * x) sampled on the interior grid.
inline Vector ci_sine_profile(const ChafeeInfanteSpec& spec, double amplitude, int mode = 1) {
  Vector x = spec.grid();
  for (double& v : x) v = amplitude * std::sin(static_cast<double>(mode) * v);
  return x;
}

// --------------------------------------------------------- synthetic I-K+E

struct SyntheticCompactSpec {
  std::size_t dimension = 400;
  std::size_t slow_dim = 10;
  double e_norm = 1e-10;
  std::uint64_t seed = 1;

  void validate() const {
    if (slow_dim >= dimension) throw std::invalid_argument("SyntheticCompactSpec: need p < N");
    if (!(e_norm >= 0.0)) throw std::invalid_argument("SyntheticCompactSpec: e_norm must be non-negative");
  }
};

/// A = I - Q B Q^T + E. Q is an N x p orthonormal basis, B has spectral
/// radius <= 0.9 (Frobenius scaling), E is Gaussian scaled to e_norm in the
/// 2-norm.
struct SyntheticCompact {
  SyntheticCompactSpec spec;
  std::vector<Vector> basis;  // columns of Q
  DenseMatrix coupling;       // B, p x p
  DenseMatrix perturbation;   // E, N x N (all zero when e_norm == 0)
  double e_norm_estimate = 0.0;
  LinearOperator op;
  /// Dense LU solve of A x = b; factorized on first use.
  std::function<Vector(std::span<const double>)> true_solve;

  /// K = Q B Q^T applied to x.
  Vector apply_k(std::span<const double> x) const {
    const std::size_t p = basis.size();
    Vector qx(p), bqx(p, 0.0), out(spec.dimension, 0.0);
    for (std::size_t i = 0; i < p; ++i) qx[i] = dot(basis[i], x);
    for (std::size_t i = 0; i < p; ++i) bqx[i] = dot(coupling.row(i), qx);
    for (std::size_t i = 0; i < p; ++i) axpy(bqx[i], basis[i], out);
    return out;
  }

  DenseMatrix dense() const {
    const std::size_t n = spec.dimension;
    DenseMatrix a = spec.e_norm > 0.0 ? perturbation : DenseMatrix(n, n);
    for (std::size_t j = 0; j < n; ++j) {
      Vector ej(n, 0.0);
      ej[j] = 1.0;
      const Vector kj = apply_k(ej);
      for (std::size_t i = 0; i < n; ++i) a(i, j) += (i == j ? 1.0 : 0.0) - kj[i];
    }
    return a;
  }
};

/// Largest singular value by 30 Lanczos steps on E^T E (full
/// reorthogonalization); plain power iteration stalls on the clustered top of
/// a Gaussian spectrum.
inline double spectral_norm_estimate(const DenseMatrix& e, std::mt19937_64& rng, std::size_t steps = 30) {
  const std::size_t n = e.cols();
  steps = std::min(steps, n);
  std::normal_distribution<double> normal;
  Vector q(n);
  for (double& v : q) v = normal(rng);
  scale(1.0 / norm2(q), q);
  std::vector<Vector> lanczos{q};
  Vector alpha, beta;
  for (std::size_t k = 0; k < steps; ++k) {
    const Vector eq = e.multiply(lanczos.back());
    Vector w(n, 0.0);
    for (std::size_t i = 0; i < e.rows(); ++i) axpy(eq[i], e.row(i), w);  // E^T (E q)
    alpha.push_back(dot(w, lanczos.back()));
    MgsResult m = mgs_step(w, lanczos);
    if (m.breakdown || k + 1 == steps) break;
    beta.push_back(m.norm);
    scale(1.0 / m.norm, m.v_next);
    lanczos.push_back(std::move(m.v_next));
  }
  const Tridiagonal t{beta, alpha, beta};
  return std::sqrt(std::max(0.0, symtridiag_eigenvalues(t).back()));
}

inline SyntheticCompact synthetic_compact(const SyntheticCompactSpec& spec) {
  spec.validate();
  const std::size_t n = spec.dimension, p = spec.slow_dim;
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> uniform(-1.0, 1.0);

  SyntheticCompact s;
  s.spec = spec;
  while (s.basis.size() < p) {
    Vector v(n);
    for (double& x : v) x = normal(rng);
    MgsResult m = mgs_step(v, s.basis);
    if (m.breakdown) continue;
    scale(1.0 / m.norm, m.v_next);
    s.basis.push_back(std::move(m.v_next));
  }

  s.coupling = DenseMatrix(p, p);
  for (double& x : s.coupling.data()) x = uniform(rng);
  if (p > 0) {
    const double fro = s.coupling.frobenius();
    if (fro > 0.0) scale(0.9 / fro, s.coupling.data());
  }

  if (spec.e_norm > 0.0) {
    s.perturbation = DenseMatrix(n, n);
    for (double& x : s.perturbation.data()) x = normal(rng);
    const double est = spectral_norm_estimate(s.perturbation, rng);
    scale(spec.e_norm / est, s.perturbation.data());
    s.e_norm_estimate = spec.e_norm;
  }

  auto shared = std::make_shared<const SyntheticCompact>(s);
  s.op = LinearOperator{n, [shared](std::span<const double> x) {
                          Vector y(x.begin(), x.end());
                          axpy(-1.0, shared->apply_k(x), y);
                          if (shared->spec.e_norm > 0.0) axpy(1.0, shared->perturbation.multiply(x), y);
                          return y;
                        }};

  struct LazyLu {
    std::once_flag once;
    std::unique_ptr<LuDecomposition> lu;
  };
  auto lazy = std::make_shared<LazyLu>();
  s.true_solve = [shared, lazy](std::span<const double> b) {
    std::call_once(lazy->once, [&] { lazy->lu = std::make_unique<LuDecomposition>(shared->dense()); });
    return lazy->lu->solve(b);
  };
  return s;
}

}  // namespace tsk
