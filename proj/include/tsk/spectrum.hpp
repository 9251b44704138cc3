#pragma once

// Linearization diagnostics: finite-difference Jacobians, eigenvalues of the
// time-stepper fixed-point Jacobian, and counting against the cluster [lo, hi].

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "tsk/eigensolvers.hpp"
#include "tsk/linalg.hpp"
#include "tsk/newton.hpp"
#include "tsk/timestepper.hpp"

namespace tsk {

using Complex = std::complex<double>;

/// Dense forward-difference Jacobian; column j is dirder along e_j. Costs
/// dimension + 1 evaluations.
inline DenseMatrix fd_jacobian(const NonlinearSystem& sys, std::span<const double> u) {
  const std::size_t n = u.size();
  if (n > 2000) throw std::invalid_argument("fd_jacobian: dimension above 2000");
  const Vector f0 = sys.residual(u);
  if (!all_finite(f0)) throw NumericalError("fd_jacobian: non-finite residual at the base point");
  DenseMatrix jac(f0.size(), n);
  Vector ej(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    ej[j] = 1.0;
    const Vector col = dirder(sys, u, ej, f0);
    for (std::size_t i = 0; i < col.size(); ++i) jac(i, j) = col[i];
    ej[j] = 0.0;
  }
  return jac;
}

/// Eigenvalues with real part outside [lo, hi] or imaginary part above 1e-8
/// in magnitude. Endpoints count as inside.
inline std::size_t cluster_count(std::span<const Complex> eigenvalues, double lo = 0.84, double hi = 1.0) {
  return static_cast<std::size_t>(std::count_if(eigenvalues.begin(), eigenvalues.end(), [&](const Complex& z) {
    return z.real() < lo || z.real() > hi || std::abs(z.imag()) > 1e-8;
  }));
}

/// Sorts by |z - 1| descending (farthest from one first).
inline void sort_by_distance_from_one(std::vector<Complex>& eig) {
  std::stable_sort(eig.begin(), eig.end(),
                   [](const Complex& a, const Complex& b) { return std::abs(a - 1.0) > std::abs(b - 1.0); });
}

struct SpectrumReport {
  std::vector<Complex> eigenvalues;  // farthest from 1 first
  double cluster_lo = 0.84;
  double cluster_hi = 1.0;
  std::size_t n_outside = 0;
  std::optional<std::vector<double>> multipliers;  // e^{sigma T}, ascending sigma order
  std::optional<double> horizon;
  std::optional<double> lambda;
};

/// Builds a report: flattens |imag| < 1e-8 to real, sorts, counts.
inline SpectrumReport make_spectrum_report(std::vector<Complex> eig, double lo = 0.84, double hi = 1.0) {
  for (auto& z : eig)
    if (std::abs(z.imag()) < 1e-8) z = {z.real(), 0.0};
  sort_by_distance_from_one(eig);
  SpectrumReport r;
  r.cluster_lo = lo;
  r.cluster_hi = hi;
  r.n_outside = cluster_count(eig, lo, hi);
  r.eigenvalues = std::move(eig);
  return r;
}

enum class SpectrumRoute { exact_map, fd_of_phi };

/// Spectrum of u -> u - Phi_T(u; lambda) at a steady state u_star.
/// exact_map: sigma_i from the analytic tridiagonal Jacobian of the right-hand
/// side, reported as 1 - e^{sigma_i T}. fd_of_phi: eigenvalues of the
/// finite-difference Jacobian of the fixed-point residual.
inline SpectrumReport timestepper_spectrum(const DynamicalProblem& prob, std::span<const double> u_star,
                                           double lambda, const StepperConfig& cfg, SpectrumRoute via,
                                           double lo = 0.84, double hi = 1.0) {
  SpectrumReport r;
  if (via == SpectrumRoute::exact_map) {
    if (!prob.jac_tridiag) throw std::invalid_argument("timestepper_spectrum: exact_map needs a tridiagonal Jacobian");
    const std::vector<double> sigma = symtridiag_eigenvalues(prob.jac_tridiag(u_star, lambda));
    std::vector<double> mult(sigma.size());
    std::vector<Complex> eig(sigma.size());
    for (std::size_t i = 0; i < sigma.size(); ++i) {
      mult[i] = std::exp(sigma[i] * cfg.horizon);
      eig[i] = {1.0 - mult[i], 0.0};
    }
    r = make_spectrum_report(std::move(eig), lo, hi);
    r.multipliers = std::move(mult);
  } else {
    const DenseMatrix jac = fd_jacobian(fixed_point_system(prob, lambda, cfg), u_star);
    r = make_spectrum_report(dense_eigenvalues(jac), lo, hi);
  }
  r.horizon = cfg.horizon;
  r.lambda = lambda;
  return r;
}

/// Eigenvalues sigma of the right-hand-side linearization, ascending.
inline std::vector<double> linearization_eigenvalues(const DynamicalProblem& prob, std::span<const double> u,
                                                     double lambda) {
  if (!prob.jac_tridiag) throw std::invalid_argument("linearization_eigenvalues: problem has no Jacobian");
  return symtridiag_eigenvalues(prob.jac_tridiag(u, lambda));
}

}  // namespace tsk
