#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "tsk/errors.hpp"
#include "tsk/linalg.hpp"

namespace tsk {

/// Matrix-free linear map R^n -> R^n.
struct LinearOperator {
  std::size_t dimension = 0;
  std::function<Vector(std::span<const double>)> apply;

  Vector operator()(std::span<const double> x) const { return apply(x); }
};

/// Wraps a dense matrix as an operator (copies the matrix).
inline LinearOperator dense_operator(DenseMatrix a) {
  const std::size_t n = a.rows();
  return {n, [a = std::move(a)](std::span<const double> x) { return a.multiply(x); }};
}

enum class GmresTermination { tolerance, breakdown, max_iterations };

inline const char* to_string(GmresTermination t) {
  switch (t) {
    case GmresTermination::tolerance: return "tolerance";
    case GmresTermination::breakdown: return "breakdown";
    case GmresTermination::max_iterations: return "max_iterations";
  }
  return "?";
}

struct GmresOutcome {
  Vector solution;
  /// residual_norms[k] is ||b - A x_k|| for the k-th iterate, from the
  /// Givens-updated least-squares problem. Index 0 is the initial residual.
  std::vector<double> residual_norms;
  std::size_t iterations = 0;
  GmresTermination terminated_by = GmresTermination::max_iterations;
  /// Explicitly recomputed ||b - A x|| for the returned solution; negative
  /// when verification was switched off.
  double true_residual = -1.0;
  /// |true_residual - residual_norms.back()| > 1e-8 * residual_norms[0].
  bool residual_mismatch = false;
};

struct GmresOptions {
  /// Recompute b - A x at the end (costs one extra operator application).
  bool verify_residual = true;
};

/// Full (non-restarted) GMRES. Stops when ||r_k|| <= eta ||r_0||, on lucky
/// breakdown, or after max_k iterations.
inline GmresOutcome gmres(const LinearOperator& op, std::span<const double> b, std::span<const double> x0, double eta,
                          std::size_t max_k, GmresOptions opts = {}) {
  const std::size_t n = op.dimension;
  if (b.size() != n || x0.size() != n) throw std::invalid_argument("gmres: vector size does not match operator");
  if (!(eta > 0.0 && eta < 1.0)) throw std::invalid_argument("gmres: eta must lie in (0, 1)");
  if (max_k > n) throw std::invalid_argument("gmres: max_k exceeds the operator dimension");
  if (!all_finite(b) || !all_finite(x0)) throw NumericalError("gmres: non-finite right-hand side or initial iterate");

  auto checked_apply = [&](std::span<const double> x) {
    Vector y = op.apply(x);
    if (y.size() != n) throw std::invalid_argument("gmres: operator returned a vector of the wrong size");
    if (!all_finite(y)) throw NumericalError("gmres: operator produced a non-finite value");
    return y;
  };

  GmresOutcome out;
  out.solution.assign(x0.begin(), x0.end());

  Vector r(b.begin(), b.end());
  if (norm_inf(x0) != 0.0) {
    const Vector ax = checked_apply(x0);
    for (std::size_t i = 0; i < n; ++i) r[i] -= ax[i];
  }
  const double beta = norm2(r);
  out.residual_norms.push_back(beta);
  if (beta == 0.0) {
    out.terminated_by = GmresTermination::tolerance;
    out.true_residual = 0.0;
    return out;
  }

  const double target = eta * beta;
  std::vector<Vector> basis;
  basis.reserve(max_k + 1);
  scale(1.0 / beta, r);
  basis.push_back(std::move(r));
  GivensLeastSquares lsq(beta);

  for (std::size_t k = 0; k < max_k; ++k) {
    const Vector w = checked_apply(basis[k]);
    MgsResult m = mgs_step(w, basis);
    Vector h = std::move(m.coeffs);
    h.push_back(m.norm);
    const double res = lsq.add_column(h);
    out.residual_norms.push_back(res);
    out.iterations = k + 1;

    if (res <= target) {
      out.terminated_by = GmresTermination::tolerance;
      break;
    }
    if (m.breakdown) {
      out.terminated_by = GmresTermination::breakdown;
      break;
    }
    scale(1.0 / m.norm, m.v_next);
    basis.push_back(std::move(m.v_next));
  }

  if (out.iterations > 0) {
    const Vector y = lsq.solve();
    for (std::size_t j = 0; j < y.size(); ++j) axpy(y[j], basis[j], out.solution);
  }

  if (opts.verify_residual) {
    const Vector ax = checked_apply(out.solution);
    out.true_residual = norm2(subtract(b, ax));
    out.residual_mismatch = std::abs(out.true_residual - out.residual_norms.back()) > 1e-8 * beta;
  }
  return out;
}

struct BoundVerdict {
  bool pass = true;
  /// max over checked m of (||r_{m(p+1)}|| / ||r_0||) / bound_m; <= 1 means pass.
  double worst_ratio = 0.0;
  std::size_t cycles_checked = 0;
};

/// Checks ||r_{m(p+1)}|| <= (c_cap * e_norm)^m ||r_0|| for every m with
/// m(p+1) <= iterations. The per-cycle bound is floored at rounding_floor so
/// that an exact E = 0 compares against machine-level residuals.
inline BoundVerdict theorem_bound_check(const GmresOutcome& outcome, std::size_t p, double e_norm, double c_cap,
                                        double rounding_floor = 1e-13) {
  BoundVerdict v;
  if (outcome.residual_norms.empty()) return v;
  const double r0 = outcome.residual_norms.front();
  if (r0 == 0.0) return v;
  const std::size_t period = p + 1;
  for (std::size_t m = 1; m * period <= outcome.iterations; ++m) {
    const double ratio = outcome.residual_norms[m * period] / r0;
    const double bound = std::max(std::pow(c_cap * e_norm, static_cast<double>(m)), rounding_floor);
    v.worst_ratio = std::max(v.worst_ratio, ratio / bound);
    ++v.cycles_checked;
  }
  v.pass = v.worst_ratio <= 1.0;
  return v;
}

}  // namespace tsk
