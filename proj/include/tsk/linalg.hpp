#pragma once

// Dense and tridiagonal kernels backing GMRES, the implicit integrator and
// the eigensolvers. Vectors are plain std::vector<double>; read-only access
// goes through std::span.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "tsk/errors.hpp"

namespace tsk {

using Vector = std::vector<double>;

inline double dot(std::span<const double> x, std::span<const double> y) {
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
  return s;
}

inline double norm2(std::span<const double> x) {
  // scaled accumulation, avoids overflow for huge entries
  double scale = 0.0, ssq = 1.0;
  for (double v : x) {
    if (v == 0.0) continue;
    const double a = std::abs(v);
    if (scale < a) {
      ssq = 1.0 + ssq * (scale / a) * (scale / a);
      scale = a;
    } else {
      ssq += (a / scale) * (a / scale);
    }
  }
  return scale * std::sqrt(ssq);
}

inline double norm_inf(std::span<const double> x) {
  double m = 0.0;
  for (double v : x) m = std::max(m, std::abs(v));
  return m;
}

inline bool all_finite(std::span<const double> x) {
  return std::all_of(x.begin(), x.end(), [](double v) { return std::isfinite(v); });
}

/// y += a*x
inline void axpy(double a, std::span<const double> x, std::span<double> y) {
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += a * x[i];
}

inline void scale(double a, std::span<double> x) {
  for (double& v : x) v *= a;
}

inline Vector subtract(std::span<const double> x, std::span<const double> y) {
  Vector r(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) r[i] = x[i] - y[i];
  return r;
}

/// Row-major dense matrix.
class DenseMatrix {
public:
  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static DenseMatrix identity(std::size_t n) {
    DenseMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
  std::span<const double> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }

  std::span<const double> data() const noexcept { return data_; }
  std::span<double> data() noexcept { return data_; }

  Vector column(std::size_t j) const {
    Vector c(rows_);
    for (std::size_t i = 0; i < rows_; ++i) c[i] = (*this)(i, j);
    return c;
  }

  Vector multiply(std::span<const double> x) const {
    if (x.size() != cols_) throw std::invalid_argument("DenseMatrix::multiply: size mismatch");
    Vector y(rows_);
    for (std::size_t i = 0; i < rows_; ++i) y[i] = dot(row(i), x);
    return y;
  }

  /// Frobenius norm.
  double frobenius() const { return norm2(data_); }

private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  Vector data_;
};

/// General tridiagonal matrix stored by diagonals.
struct Tridiagonal {
  Vector sub;    // length n-1, entries (i+1, i)
  Vector diag;   // length n
  Vector super;  // length n-1, entries (i, i+1)

  std::size_t size() const noexcept { return diag.size(); }

  void validate() const {
    const std::size_t n = diag.size();
    if (n == 0 || sub.size() != n - 1 || super.size() != n - 1)
      throw std::invalid_argument("Tridiagonal: inconsistent diagonal lengths");
  }

  bool symmetric() const { return sub == super; }

  Vector multiply(std::span<const double> x) const {
    const std::size_t n = size();
    Vector y(n);
    for (std::size_t i = 0; i < n; ++i) {
      double s = diag[i] * x[i];
      if (i > 0) s += sub[i - 1] * x[i - 1];
      if (i + 1 < n) s += super[i] * x[i + 1];
      y[i] = s;
    }
    return y;
  }

  DenseMatrix to_dense() const {
    const std::size_t n = size();
    DenseMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) {
      m(i, i) = diag[i];
      if (i + 1 < n) {
        m(i + 1, i) = sub[i];
        m(i, i + 1) = super[i];
      }
    }
    return m;
  }
};

struct MgsResult {
  Vector coeffs;     // projections onto each basis vector
  Vector v_next;     // orthogonal remainder, not normalized
  double norm = 0.0; // ||v_next||
  bool breakdown = false;
};

/// One Arnoldi orthogonalization step: modified Gram-Schmidt against an
/// orthonormal basis, with a second pass when more than 90% of the norm was
/// cancelled. breakdown is set when the remainder falls below 1e-14*||v||.
inline MgsResult mgs_step(std::span<const double> v, const std::vector<Vector>& basis) {
  MgsResult out;
  out.v_next.assign(v.begin(), v.end());
  out.coeffs.assign(basis.size(), 0.0);
  const double vnorm = norm2(v);

  auto pass = [&] {
    for (std::size_t i = 0; i < basis.size(); ++i) {
      const double c = dot(basis[i], out.v_next);
      out.coeffs[i] += c;
      axpy(-c, basis[i], out.v_next);
    }
  };

  pass();
  out.norm = norm2(out.v_next);
  if (out.norm < 0.1 * vnorm) {
    pass();
    out.norm = norm2(out.v_next);
  }
  out.breakdown = out.norm <= 1e-14 * vnorm;
  return out;
}

/// Incremental QR of an upper-Hessenberg matrix by Givens rotations. Each
/// added column yields the least-squares residual min ||beta e1 - H y|| for
/// the columns seen so far.
class GivensLeastSquares {
public:
  explicit GivensLeastSquares(double beta) : g_{beta} {}

  std::size_t columns() const noexcept { return cs_.size(); }

  /// h holds column k of H: entries 0..k+1. Returns the updated residual.
  double add_column(std::span<const double> h) {
    const std::size_t k = cs_.size();
    if (h.size() != k + 2) throw std::invalid_argument("GivensLeastSquares: column length must be k+2");
    Vector r(h.begin(), h.begin() + static_cast<std::ptrdiff_t>(k + 1));
    for (std::size_t i = 0; i < k; ++i) {
      const double a = r[i], b = r[i + 1];
      r[i] = cs_[i] * a + sn_[i] * b;
      r[i + 1] = -sn_[i] * a + cs_[i] * b;
    }
    const double a = r[k], b = h[k + 1];
    const double rho = std::hypot(a, b);
    double c = 1.0, s = 0.0;
    if (rho != 0.0) {
      c = a / rho;
      s = b / rho;
    } else {
      singular_ = true;
    }
    r[k] = rho;
    cs_.push_back(c);
    sn_.push_back(s);
    R_.push_back(std::move(r));
    g_.push_back(-s * g_[k]);
    g_[k] = c * g_[k];
    return std::abs(g_[k + 1]);
  }

  double residual() const noexcept { return std::abs(g_.back()); }

  /// True once a column with zero remainder after rotation was added.
  bool singular() const noexcept { return singular_; }

  /// Back substitution for the first m columns (all by default).
  Vector solve(std::size_t m = static_cast<std::size_t>(-1)) const {
    m = std::min(m, cs_.size());
    Vector y(m, 0.0);
    for (std::size_t ii = m; ii-- > 0;) {
      double s = g_[ii];
      for (std::size_t j = ii + 1; j < m; ++j) s -= R_[j][ii] * y[j];
      if (R_[ii][ii] == 0.0) throw NumericalError("GivensLeastSquares: singular triangular factor");
      y[ii] = s / R_[ii][ii];
    }
    return y;
  }

private:
  Vector g_;
  Vector cs_, sn_;
  std::vector<Vector> R_;  // R_[j] = column j of the triangular factor
  bool singular_ = false;
};

struct HessenbergLsqResult {
  Vector y;
  double resnorm = 0.0;
  bool breakdown = false;  // an exactly singular column was met; y covers the columns before it
};

/// Solves min ||beta e1 - H y|| for a (k+1) x k upper-Hessenberg H.
inline HessenbergLsqResult hessenberg_lsq(const DenseMatrix& H, double beta) {
  const std::size_t k = H.cols();
  if (H.rows() != k + 1) throw std::invalid_argument("hessenberg_lsq: H must be (k+1) x k");
  for (std::size_t i = 0; i < H.rows(); ++i)
    for (std::size_t j = 0; j + 1 < i && j < k; ++j)
      if (H(i, j) != 0.0) throw std::invalid_argument("hessenberg_lsq: H is not upper Hessenberg");

  GivensLeastSquares lsq(beta);
  HessenbergLsqResult out;
  std::size_t usable = 0;
  for (std::size_t j = 0; j < k; ++j) {
    Vector col(j + 2);
    for (std::size_t i = 0; i < j + 2; ++i) col[i] = H(i, j);
    out.resnorm = lsq.add_column(col);
    if (lsq.singular()) {
      out.breakdown = true;
      break;
    }
    usable = j + 1;
  }
  if (k == 0) out.resnorm = std::abs(beta);
  out.y = lsq.solve(usable);
  out.y.resize(k, 0.0);
  return out;
}

/// Gaussian elimination with partial pivoting on a general tridiagonal
/// system (the LAPACK gtsv scheme, one fill-in superdiagonal).
inline Vector tridiag_solve(const Tridiagonal& t, std::span<const double> d) {
  t.validate();
  const std::size_t n = t.size();
  if (d.size() != n) throw std::invalid_argument("tridiag_solve: rhs size mismatch");

  Vector dl = t.sub, dg = t.diag, du = t.super;
  Vector b(d.begin(), d.end());
  auto singular = [](std::size_t i) {
    return NumericalError("tridiag_solve: zero pivot at row " + std::to_string(i));
  };

  for (std::size_t i = 0; i + 1 < n; ++i) {
    if (std::abs(dg[i]) >= std::abs(dl[i])) {
      if (dg[i] == 0.0) throw singular(i);
      const double fact = dl[i] / dg[i];
      dg[i + 1] -= fact * du[i];
      b[i + 1] -= fact * b[i];
      dl[i] = 0.0;
    } else {
      // swap rows i and i+1; dl[i] becomes the fill-in at (i, i+2)
      const double fact = dg[i] / dl[i];
      dg[i] = dl[i];
      const double tmp = dg[i + 1];
      dg[i + 1] = du[i] - fact * tmp;
      if (i + 2 < n) {
        dl[i] = du[i + 1];
        du[i + 1] = -fact * dl[i];
      } else {
        dl[i] = 0.0;
      }
      du[i] = tmp;
      const double bt = b[i];
      b[i] = b[i + 1];
      b[i + 1] = bt - fact * b[i + 1];
    }
  }
  if (dg[n - 1] == 0.0) throw singular(n - 1);

  b[n - 1] /= dg[n - 1];
  if (n > 1) b[n - 2] = (b[n - 2] - du[n - 2] * b[n - 1]) / dg[n - 2];
  for (std::size_t i = n < 2 ? 0 : n - 2; i-- > 0;) b[i] = (b[i] - du[i] * b[i + 1] - dl[i] * b[i + 2]) / dg[i];
  if (!all_finite(b)) throw NumericalError("tridiag_solve: non-finite solution");
  return b;
}

/// Dense LU with partial pivoting.
class LuDecomposition {
public:
  explicit LuDecomposition(DenseMatrix a) : lu_(std::move(a)), piv_(lu_.rows()) {
    const std::size_t n = lu_.rows();
    if (lu_.cols() != n) throw std::invalid_argument("LuDecomposition: matrix must be square");
    for (std::size_t k = 0; k < n; ++k) {
      std::size_t p = k;
      for (std::size_t i = k + 1; i < n; ++i)
        if (std::abs(lu_(i, k)) > std::abs(lu_(p, k))) p = i;
      piv_[k] = p;
      if (lu_(p, k) == 0.0) throw NumericalError("LuDecomposition: singular matrix at column " + std::to_string(k));
      if (p != k) std::swap_ranges(lu_.row(k).begin(), lu_.row(k).end(), lu_.row(p).begin());
      const double inv = 1.0 / lu_(k, k);
      for (std::size_t i = k + 1; i < n; ++i) {
        const double f = (lu_(i, k) *= inv);
        if (f == 0.0) continue;
        auto ri = lu_.row(i);
        auto rk = lu_.row(k);
        for (std::size_t j = k + 1; j < n; ++j) ri[j] -= f * rk[j];
      }
    }
  }

  std::size_t size() const noexcept { return lu_.rows(); }

  Vector solve(std::span<const double> b) const {
    const std::size_t n = size();
    if (b.size() != n) throw std::invalid_argument("LuDecomposition::solve: size mismatch");
    Vector x(b.begin(), b.end());
    for (std::size_t k = 0; k < n; ++k) std::swap(x[k], x[piv_[k]]);
    for (std::size_t i = 1; i < n; ++i) x[i] -= dot(lu_.row(i).first(i), std::span<const double>(x).first(i));
    for (std::size_t i = n; i-- > 0;) {
      double s = x[i];
      for (std::size_t j = i + 1; j < n; ++j) s -= lu_(i, j) * x[j];
      x[i] = s / lu_(i, i);
    }
    return x;
  }

private:
  DenseMatrix lu_;
  std::vector<std::size_t> piv_;
};

}  // namespace tsk
