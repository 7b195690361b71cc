#pragma once

// Dense two-phase simplex for the small linear programs that arise as
// trust-region subproblems:  minimize c.z  subject to  A z <= b,  z >= 0.

#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "ascent/core.hpp"

namespace ascent::lp {

enum class LpStatus { optimal, infeasible, unbounded, iteration_limit };

struct LpResult {
  LpStatus status = LpStatus::infeasible;
  Vector z;
  double objective = 0.0;
};

namespace detail {

class Tableau {
 public:
  Tableau(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), t_((rows + 1) * (cols + 1), 0.0) {}

  double& at(std::size_t i, std::size_t j) { return t_[i * (cols_ + 1) + j]; }
  double at(std::size_t i, std::size_t j) const { return t_[i * (cols_ + 1) + j]; }
  double& rhs(std::size_t i) { return at(i, cols_); }
  double& cost(std::size_t j) { return at(rows_, j); }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  void pivot(std::size_t r, std::size_t c) {
    const double p = at(r, c);
    for (std::size_t j = 0; j <= cols_; ++j) at(r, j) /= p;
    for (std::size_t i = 0; i <= rows_; ++i) {
      if (i == r) continue;
      const double f = at(i, c);
      if (f == 0.0) continue;
      for (std::size_t j = 0; j <= cols_; ++j) at(i, j) -= f * at(r, j);
      at(i, c) = 0.0;
    }
  }

 private:
  std::size_t rows_, cols_;
  std::vector<double> t_;
};

inline constexpr double kEps = 1e-12;

/// Runs Bland's-rule simplex iterations on the cost row. Columns at or beyond
/// `enter_limit` may not enter the basis.
inline LpStatus iterate(Tableau& t, std::vector<std::size_t>& basis, std::size_t enter_limit) {
  const std::size_t max_iter = 100 * (t.rows() + t.cols() + 1);
  for (std::size_t it = 0; it < max_iter; ++it) {
    std::size_t enter = enter_limit;
    for (std::size_t j = 0; j < enter_limit; ++j) {
      if (t.cost(j) < -kEps) {
        enter = j;
        break;
      }
    }
    if (enter == enter_limit) return LpStatus::optimal;
    std::size_t leave = t.rows();
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < t.rows(); ++i) {
      double a = t.at(i, enter);
      if (a <= kEps) continue;
      double ratio = t.rhs(i) / a;
      if (leave == t.rows() || ratio < best - kEps) {
        best = ratio;
        leave = i;
      } else if (ratio <= best + kEps && basis[i] < basis[leave]) {
        leave = i;
      }
    }
    if (leave == t.rows()) return LpStatus::unbounded;
    t.pivot(leave, enter);
    basis[leave] = enter;
  }
  return LpStatus::iteration_limit;
}

}  // namespace detail

/// Solves min c.z s.t. rows[i].z <= b[i], z >= 0. Rows are rescaled to unit
/// max-norm internally so the pivot tolerance is scale-free.
inline LpResult solve(std::span<const double> c, const std::vector<Vector>& rows, std::span<const double> b) {
  const std::size_t nv = c.size();
  std::vector<Vector> a;
  Vector rhs;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    double scale = 0.0;
    for (double v : rows[i]) scale = std::max(scale, std::abs(v));
    if (scale == 0.0) {
      if (b[i] < -detail::kEps) return {LpStatus::infeasible, {}, 0.0};
      continue;
    }
    Vector r(rows[i]);
    for (double& v : r) v /= scale;
    a.push_back(std::move(r));
    rhs.push_back(b[i] / scale);
  }
  const std::size_t m = a.size();
  std::size_t n_art = 0;
  for (double v : rhs) n_art += v < 0.0 ? 1 : 0;

  const std::size_t n_cols = nv + m + n_art;
  detail::Tableau t(m, n_cols);
  std::vector<std::size_t> basis(m);
  std::size_t art = nv + m;
  for (std::size_t i = 0; i < m; ++i) {
    const double sign = rhs[i] < 0.0 ? -1.0 : 1.0;
    for (std::size_t j = 0; j < nv; ++j) t.at(i, j) = sign * a[i][j];
    t.at(i, nv + i) = sign;
    t.rhs(i) = sign * rhs[i];
    if (sign < 0.0) {
      t.at(i, art) = 1.0;
      basis[i] = art++;
    } else {
      basis[i] = nv + i;
    }
  }

  if (n_art > 0) {
    for (std::size_t j = 0; j <= n_cols; ++j) t.cost(j) = 0.0;
    for (std::size_t j = nv + m; j < n_cols; ++j) t.cost(j) = 1.0;
    for (std::size_t i = 0; i < m; ++i) {
      if (basis[i] < nv + m) continue;
      for (std::size_t j = 0; j <= n_cols; ++j) t.cost(j) -= t.at(i, j);
    }
    LpStatus s = detail::iterate(t, basis, n_cols);
    if (s != LpStatus::optimal) return {s, {}, 0.0};
    if (-t.cost(n_cols) > 1e-9) return {LpStatus::infeasible, {}, 0.0};
    // Drive zero-level artificials out of the basis where possible.
    for (std::size_t i = 0; i < m; ++i) {
      if (basis[i] < nv + m) continue;
      for (std::size_t j = 0; j < nv + m; ++j) {
        if (std::abs(t.at(i, j)) > 1e-9) {
          t.pivot(i, j);
          basis[i] = j;
          break;
        }
      }
    }
  }

  for (std::size_t j = 0; j <= n_cols; ++j) t.cost(j) = 0.0;
  double cscale = 0.0;
  for (double v : c) cscale = std::max(cscale, std::abs(v));
  if (cscale == 0.0) cscale = 1.0;
  for (std::size_t j = 0; j < nv; ++j) t.cost(j) = c[j] / cscale;
  for (std::size_t i = 0; i < m; ++i) {
    const double cb = basis[i] < nv ? c[basis[i]] / cscale : 0.0;
    if (cb == 0.0) continue;
    for (std::size_t j = 0; j <= n_cols; ++j) t.cost(j) -= cb * t.at(i, j);
  }
  LpStatus s = detail::iterate(t, basis, nv + m);
  if (s != LpStatus::optimal) return {s, {}, 0.0};

  LpResult r;
  r.status = LpStatus::optimal;
  r.z.assign(nv, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    if (basis[i] < nv) r.z[basis[i]] = std::max(0.0, t.rhs(i));
  }
  for (std::size_t j = 0; j < nv; ++j) r.objective += c[j] * r.z[j];
  return r;
}

}  // namespace ascent::lp
