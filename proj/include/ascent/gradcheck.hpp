#pragma once

// Central-difference verification of analytic gradients and Jacobians.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <utility>
#include <vector>

#include "ascent/core.hpp"

namespace ascent {

inline constexpr double kDefaultDiffStep = 1e-6;

/// [f(x + h_i e_i) - f(x - h_i e_i)] / (2 h_i) with h_i = h max(1, |x_i|).
inline Vector central_diff_gradient(const std::function<double(std::span<const double>)>& f,
                                    std::span<const double> x, double h = kDefaultDiffStep) {
  Vector probe(x.begin(), x.end());
  Vector g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double step = h * std::max(1.0, std::abs(x[i]));
    probe[i] = x[i] + step;
    const double up = f(probe);
    probe[i] = x[i] - step;
    const double down = f(probe);
    probe[i] = x[i];
    if (!std::isfinite(up) || !std::isfinite(down))
      throw SolverError(Status::callback_failure, "non-finite value while differencing");
    g[i] = (up - down) / (2.0 * step);
  }
  return g;
}

struct DerivativeReport {
  double max_abs_error = 0.0;
  double max_rel_error = 0.0;
  // Row 0 is the objective; row 1 + i is inequality i, then the equalities.
  std::pair<std::size_t, std::size_t> worst_component{0, 0};
  bool passed = true;
};

namespace detail {

// Below this row scale errors are judged absolutely.
inline constexpr double kGradcheckScaleFloor = 1e-8;

/// Each component's error is divided by the larger infinity norm of the
/// analytic and numeric row, so near-zero components of a large gradient do
/// not produce spurious relative errors.
inline void compare_row(DerivativeReport& r, std::size_t row, std::span<const double> analytic,
                        std::span<const double> numeric) {
  double scale = 0.0;
  for (std::size_t j = 0; j < analytic.size(); ++j)
    scale = std::max({scale, std::abs(analytic[j]), std::abs(numeric[j])});
  const double denom = std::max(scale, kGradcheckScaleFloor);
  for (std::size_t j = 0; j < analytic.size(); ++j) {
    const double abs_err = std::abs(analytic[j] - numeric[j]);
    const double rel_err = scale < kGradcheckScaleFloor ? abs_err : abs_err / denom;
    r.max_abs_error = std::max(r.max_abs_error, abs_err);
    if (rel_err > r.max_rel_error) {
      r.max_rel_error = rel_err;
      r.worst_component = {row, j};
    }
  }
}

}  // namespace detail

/// Compares every analytic derivative the problem declares against central
/// differences at each point. The report does not depend on point order except
/// for which of several equal worst components is named.
inline DerivativeReport check_derivatives(const Problem& p, const std::vector<Vector>& points, double tol,
                                          double h = kDefaultDiffStep) {
  DerivativeReport r;
  for (const Vector& x : points) {
    if (x.size() != p.n) throw SolverError(Status::invalid_args, "point has wrong dimension");
    if (p.has_gradient) {
      Vector g(p.n, 0.0);
      p.objective(x, &g);
      const Vector num = central_diff_gradient([&](std::span<const double> z) { return p.objective(z, nullptr); }, x, h);
      detail::compare_row(r, 0, g, num);
    }
    auto check_constraints = [&](const ConstraintFn& fn, bool has_jac, std::size_t offset) {
      if (!fn || !has_jac) return;
      const std::size_t m = fn(x, nullptr).size();
      Jacobian jac;
      jac.resize(m, p.n);
      fn(x, &jac);
      for (std::size_t i = 0; i < m; ++i) {
        const Vector num =
            central_diff_gradient([&](std::span<const double> z) { return fn(z, nullptr)[i]; }, x, h);
        detail::compare_row(r, offset + i, jac.row(i), num);
      }
    };
    const std::size_t m_ineq = p.inequality ? p.inequality(x, nullptr).size() : 0;
    check_constraints(p.inequality, p.inequality_has_jacobian, 1);
    check_constraints(p.equality, p.equality_has_jacobian, 1 + m_ineq);
  }
  r.passed = r.max_rel_error <= tol;
  return r;
}

}  // namespace ascent
