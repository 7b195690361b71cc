#pragma once

// Small dense vector/matrix helpers. Problem sizes here are tiny, so plain
// loops over std::vector are all that is needed.

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "ascent/core.hpp"

namespace ascent::linalg {

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

inline double norm_inf(std::span<const double> a) {
  double m = 0.0;
  for (double v : a) m = std::max(m, std::abs(v));
  return m;
}

/// y += alpha * x
inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

inline Vector add_scaled(std::span<const double> x, double alpha, std::span<const double> d) {
  Vector out(x.begin(), x.end());
  axpy(alpha, d, out);
  return out;
}

/// Square matrix stored row-major.
struct Matrix {
  std::size_t n = 0;
  Vector a;

  Matrix() = default;
  explicit Matrix(std::size_t size) : n(size), a(size * size, 0.0) {}

  double& operator()(std::size_t i, std::size_t j) { return a[i * n + j]; }
  double operator()(std::size_t i, std::size_t j) const { return a[i * n + j]; }
};

/// LU factorization with partial pivoting. `singular()` reports a pivot that
/// is negligible relative to the largest matrix entry.
class LU {
 public:
  explicit LU(Matrix m, double rel_pivot_tol = 1e-13) : lu_(std::move(m)), perm_(lu_.n) {
    const std::size_t n = lu_.n;
    double scale = 0.0;
    for (double v : lu_.a) scale = std::max(scale, std::abs(v));
    for (std::size_t i = 0; i < n; ++i) perm_[i] = i;
    if (scale == 0.0) {
      singular_ = n > 0;
      return;
    }
    for (std::size_t k = 0; k < n; ++k) {
      std::size_t piv = k;
      for (std::size_t i = k + 1; i < n; ++i) {
        if (std::abs(lu_(i, k)) > std::abs(lu_(piv, k))) piv = i;
      }
      if (std::abs(lu_(piv, k)) <= rel_pivot_tol * scale) {
        singular_ = true;
        return;
      }
      if (piv != k) {
        for (std::size_t j = 0; j < n; ++j) std::swap(lu_(k, j), lu_(piv, j));
        std::swap(perm_[k], perm_[piv]);
      }
      for (std::size_t i = k + 1; i < n; ++i) {
        double f = lu_(i, k) / lu_(k, k);
        lu_(i, k) = f;
        for (std::size_t j = k + 1; j < n; ++j) lu_(i, j) -= f * lu_(k, j);
      }
    }
  }

  bool singular() const { return singular_; }

  /// Solves A x = b.
  Vector solve(std::span<const double> b) const {
    const std::size_t n = lu_.n;
    Vector x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = b[perm_[i]];
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < i; ++j) x[i] -= lu_(i, j) * x[j];
    }
    for (std::size_t i = n; i-- > 0;) {
      for (std::size_t j = i + 1; j < n; ++j) x[i] -= lu_(i, j) * x[j];
      x[i] /= lu_(i, i);
    }
    return x;
  }

  /// Solves A^T x = b.
  Vector solve_transpose(std::span<const double> b) const {
    const std::size_t n = lu_.n;
    // A = P^T L U, so A^T x = b  <=>  U^T L^T (P x) = b.
    Vector y(b.begin(), b.end());
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < i; ++j) y[i] -= lu_(j, i) * y[j];
      y[i] /= lu_(i, i);
    }
    for (std::size_t i = n; i-- > 0;) {
      for (std::size_t j = i + 1; j < n; ++j) y[i] -= lu_(j, i) * y[j];
    }
    Vector x(n);
    for (std::size_t i = 0; i < n; ++i) x[perm_[i]] = y[i];
    return x;
  }

  Matrix inverse() const {
    const std::size_t n = lu_.n;
    Matrix inv(n);
    Vector e(n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
      e.assign(n, 0.0);
      e[j] = 1.0;
      Vector col = solve(e);
      for (std::size_t i = 0; i < n; ++i) inv(i, j) = col[i];
    }
    return inv;
  }

 private:
  Matrix lu_;
  std::vector<std::size_t> perm_;
  bool singular_ = false;
};

}  // namespace ascent::linalg
