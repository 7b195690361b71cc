#pragma once

// Derivative-free constrained optimization by linear approximations.
//
// The method keeps n+1 interpolation points (a simplex), fits linear models of
// the objective and of every inequality constraint through them, and takes
// trust-region steps that minimize the objective model subject to the
// linearized constraints. The trust region is the infinity-norm box of radius
// rho intersected with the variable bounds, so each step is a small linear
// program. When the linearized constraints cannot be met inside the box the
// step first minimizes the largest linearized violation, then the objective
// model subject to that violation level. Steps are judged with the merit
// function f + sigma * max(0, max_k c_k); sigma grows whenever the predicted
// merit change would otherwise be negative.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "ascent/core.hpp"
#include "ascent/linalg.hpp"
#include "ascent/lp.hpp"

namespace ascent {

/// Interpolation set: vertex 0 is the base point.
struct Simplex {
  std::vector<Vector> vertices;
  Vector values;                   // objective at each vertex
  std::vector<Vector> constraints;  // inequality values at each vertex
  double rho = 1.0;
  double rho_end = 1e-12;
};

struct LinearModel {
  Vector gradient;
  double constant = 0.0;  // model value at the base vertex

  double operator()(std::span<const double> d) const { return constant + linalg::dot(gradient, d); }
};

struct LinearModels {
  LinearModel objective;
  std::vector<LinearModel> constraints;
};

class DegenerateSimplex : public std::runtime_error {
 public:
  DegenerateSimplex() : std::runtime_error("degenerate simplex: interpolation system is singular") {}
};

namespace detail {

inline linalg::Matrix simplex_differences(const Simplex& s) {
  const std::size_t n = s.vertices.front().size();
  linalg::Matrix d(n);
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t i = 0; i < n; ++i) d(j, i) = s.vertices[j + 1][i] - s.vertices[0][i];
  }
  return d;
}

inline LinearModel fit_model(const linalg::LU& lu, std::size_t n, double base,
                             const auto& value_at) {
  Vector rhs(n);
  for (std::size_t j = 0; j < n; ++j) rhs[j] = value_at(j + 1) - base;
  return {lu.solve(rhs), base};
}

inline LinearModels build_models(const Simplex& s, const linalg::LU& lu) {
  const std::size_t n = s.vertices.front().size();
  LinearModels out;
  out.objective = fit_model(lu, n, s.values[0], [&](std::size_t j) { return s.values[j]; });
  const std::size_t m = s.constraints.empty() ? 0 : s.constraints[0].size();
  for (std::size_t k = 0; k < m; ++k) {
    out.constraints.push_back(
        fit_model(lu, n, s.constraints[0][k], [&](std::size_t j) { return s.constraints[j][k]; }));
  }
  return out;
}

}  // namespace detail

/// Linear models c + b.(x - x_base) interpolating the stored values at every
/// vertex. Throws DegenerateSimplex when the vertices are affinely dependent.
inline LinearModels build_linear_models(const Simplex& simplex) {
  if (simplex.vertices.size() < 2) throw DegenerateSimplex();
  linalg::LU lu(detail::simplex_differences(simplex));
  if (lu.singular()) throw DegenerateSimplex();
  return detail::build_models(simplex, lu);
}

namespace detail {

struct CobylaPoint {
  Vector x;
  double f = 0.0;
  Vector c;
  double maxv = 0.0;  // max(0, max_k c_k)
};

inline double max_violation(std::span<const double> c) {
  double v = 0.0;
  for (double ck : c) v = std::max(v, ck);
  return v;
}

/// Trust-region step: a linear program in the scaled step d = rho * (dp - dm).
inline Vector cobyla_step(const LinearModels& models, std::span<const double> x,
                          std::span<const double> lower, std::span<const double> upper,
                          double rho) {
  const std::size_t n = x.size();
  const std::size_t m = models.constraints.size();

  Vector cap_plus(n), cap_minus(n);
  for (std::size_t i = 0; i < n; ++i) {
    cap_plus[i] = std::max(0.0, std::min(1.0, (upper[i] - x[i]) / rho));
    cap_minus[i] = std::max(0.0, std::min(1.0, (x[i] - lower[i]) / rho));
  }

  auto bound_rows = [&](std::size_t nv, std::vector<Vector>& rows, Vector& b) {
    for (std::size_t i = 0; i < n; ++i) {
      Vector r(nv, 0.0);
      r[i] = 1.0;
      rows.push_back(std::move(r));
      b.push_back(cap_plus[i]);
      Vector q(nv, 0.0);
      q[n + i] = 1.0;
      rows.push_back(std::move(q));
      b.push_back(cap_minus[i]);
    }
  };

  auto unpack = [&](const Vector& z) {
    Vector d(n);
    for (std::size_t i = 0; i < n; ++i) d[i] = rho * (z[i] - z[n + i]);
    // Land exactly on the bounds when the step reaches them.
    for (std::size_t i = 0; i < n; ++i) {
      if (x[i] + d[i] > upper[i]) d[i] = upper[i] - x[i];
      if (x[i] + d[i] < lower[i]) d[i] = lower[i] - x[i];
    }
    return d;
  };

  double t_allow = 0.0;
  Vector phase1;
  if (m > 0) {
    double need = 0.0;
    double a_scale = 0.0;
    for (const auto& mk : models.constraints) {
      need = std::max(need, mk.constant);
      a_scale = std::max(a_scale, rho * linalg::norm_inf(mk.gradient));
    }
    // Does the zero step (or any step) satisfy all linearized constraints?
    const std::size_t nv = 2 * n + 1;
    std::vector<Vector> rows;
    Vector b;
    for (const auto& mk : models.constraints) {
      Vector r(nv, 0.0);
      for (std::size_t i = 0; i < n; ++i) {
        r[i] = rho * mk.gradient[i];
        r[n + i] = -rho * mk.gradient[i];
      }
      r[2 * n] = -1.0;
      rows.push_back(std::move(r));
      b.push_back(-mk.constant);
    }
    bound_rows(nv, rows, b);
    Vector cost(nv, 1e-9 * std::max(a_scale, 1e-300));
    cost[2 * n] = 1.0;
    lp::LpResult r = lp::solve(cost, rows, b);
    if (r.status == lp::LpStatus::optimal) {
      double t_star = r.z[2 * n];
      t_allow = std::max(0.0, t_star) * (1.0 + 1e-9) + 1e-14 * std::max(need, a_scale);
      phase1 = unpack(r.z);
    } else {
      t_allow = need;
    }
  }

  const std::size_t nv = 2 * n;
  std::vector<Vector> rows;
  Vector b;
  for (const auto& mk : models.constraints) {
    Vector r(nv, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      r[i] = rho * mk.gradient[i];
      r[n + i] = -rho * mk.gradient[i];
    }
    rows.push_back(std::move(r));
    b.push_back(t_allow - mk.constant);
  }
  bound_rows(nv, rows, b);
  const Vector& g = models.objective.gradient;
  const double reg = 1e-9 * rho * std::max(linalg::norm_inf(g), 1e-300);
  Vector cost(nv);
  for (std::size_t i = 0; i < n; ++i) {
    cost[i] = rho * g[i] + reg;
    cost[n + i] = -rho * g[i] + reg;
  }
  lp::LpResult r = lp::solve(cost, rows, b);
  if (r.status == lp::LpStatus::optimal) return unpack(r.z);
  if (!phase1.empty()) return phase1;
  return Vector(n, 0.0);
}

}  // namespace detail

inline SolveResult minimize_cobyla(const Validated& v) {
  const Problem& p = v.problem;
  const SolverOptions& opts = v.options;
  const std::size_t n = p.n;
  EvaluationLedger ledger(opts.maxeval, NanPolicy::fail);

  double rho_begin = kInf;
  for (std::size_t i = 0; i < n; ++i) {
    double w = p.upper[i] - p.lower[i];
    if (std::isfinite(w) && w > 0.0) rho_begin = std::min(rho_begin, 0.5 * w);
  }
  if (!std::isfinite(rho_begin)) rho_begin = 1.0;
  double rho_end = std::max({opts.xtol_rel * linalg::norm2(p.x0), opts.xtol_abs, 1e-12});
  rho_end = std::min(rho_end, rho_begin);
  double rho = rho_begin;

  std::vector<detail::CobylaPoint> pts;  // pts[0] is the base after selection
  detail::CobylaPoint best_feasible;
  bool have_feasible = false;
  std::size_t iter = 0;
  double sigma = 0.0;

  auto feasible = [&](const detail::CobylaPoint& q) {
    for (std::size_t k = 0; k < q.c.size(); ++k) {
      if (q.c[k] > opts.tol_constraints_ineq[k]) return false;
    }
    return true;
  };

  auto evaluate = [&](Vector x) {
    clamp_to_bounds(x, p.lower, p.upper);
    detail::CobylaPoint q;
    q.f = ledger.objective(p, x);
    if (!std::isfinite(q.f)) throw SolverError(Status::callback_failure, "objective is not finite");
    q.c = ledger.inequality(p, x);
    q.maxv = detail::max_violation(q.c);
    q.x = std::move(x);
    if (feasible(q) && (!have_feasible || q.f < best_feasible.f)) {
      best_feasible = q;
      have_feasible = true;
    }
    return q;
  };

  auto merit = [&](const detail::CobylaPoint& q) { return q.f + sigma * q.maxv; };

  // Offset along coordinate i that stays inside the box.
  auto coordinate_step = [&](const Vector& base, std::size_t i, double len) {
    Vector x = base;
    x[i] = base[i] + len <= p.upper[i] ? base[i] + len : base[i] - len;
    return x;
  };

  auto respan = [&]() {
    for (std::size_t j = 1; j <= n; ++j) pts[j] = evaluate(coordinate_step(pts[0].x, j - 1, rho));
  };

  auto finish = [&](Status status) {
    // Prefer the best-merit vertex, unless it is infeasible and some feasible
    // point was seen.
    std::size_t ib = 0;
    for (std::size_t j = 1; j < pts.size(); ++j) {
      if (merit(pts[j]) < merit(pts[ib]) ||
          (merit(pts[j]) == merit(pts[ib]) && pts[j].maxv < pts[ib].maxv))
        ib = j;
    }
    const detail::CobylaPoint* out = pts.empty() ? nullptr : &pts[ib];
    if (have_feasible && (!out || !feasible(*out))) out = &best_feasible;
    if (!out) return detail::make_result(v, status, p.x0, kInf, iter, ledger);
    return detail::make_result(v, status, out->x, out->f, iter, ledger);
  };

  try {
    pts.push_back(evaluate(p.x0));
    for (std::size_t j = 1; j <= n; ++j) pts.push_back(evaluate(coordinate_step(p.x0, j - 1, rho)));

    bool check_geometry = false;
    for (;;) {
      // Base = lowest merit, ties broken by smaller violation.
      std::size_t ib = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (merit(pts[j]) < merit(pts[ib]) ||
            (merit(pts[j]) == merit(pts[ib]) && pts[j].maxv < pts[ib].maxv))
          ib = j;
      }
      std::swap(pts[0], pts[ib]);

      Simplex s;
      s.rho = rho;
      s.rho_end = rho_end;
      for (const auto& q : pts) {
        s.vertices.push_back(q.x);
        s.values.push_back(q.f);
        s.constraints.push_back(q.c);
      }
      linalg::LU lu(detail::simplex_differences(s));
      if (lu.singular()) {
        respan();
        continue;
      }
      LinearModels models = detail::build_models(s, lu);
      linalg::Matrix w = lu.inverse();

      // Poisedness: distance of each vertex from the opposite face, and from
      // the base.
      bool acceptable = true;
      std::size_t worst = 0;
      double worst_far = 0.0;
      double worst_sig = kInf;
      std::size_t far_j = 0, sig_j = 0;
      for (std::size_t j = 0; j < n; ++j) {
        double col = 0.0;
        for (std::size_t i = 0; i < n; ++i) col += w(i, j) * w(i, j);
        double vsig = 1.0 / std::sqrt(col);
        double veta = 0.0;
        for (std::size_t i = 0; i < n; ++i)
          veta = std::max(veta, std::abs(pts[j + 1].x[i] - pts[0].x[i]));
        if (veta > worst_far) {
          worst_far = veta;
          far_j = j;
        }
        if (vsig < worst_sig) {
          worst_sig = vsig;
          sig_j = j;
        }
      }
      if (worst_far > 2.1 * rho) {
        acceptable = false;
        worst = far_j;
      } else if (worst_sig < 0.25 * rho) {
        acceptable = false;
        worst = sig_j;
      }

      auto geometry_step = [&]() {
        Vector dir(n);
        for (std::size_t i = 0; i < n; ++i) dir[i] = w(i, worst);
        double scale = 0.5 * rho / linalg::norm_inf(dir);
        for (double& d : dir) d *= scale;
        auto predicted = [&](double sign) {
          Vector d(dir);
          for (double& di : d) di *= sign;
          double cv = 0.0;
          for (const auto& mk : models.constraints) cv = std::max(cv, mk(d));
          return models.objective(d) + sigma * cv;
        };
        auto inside = [&](double sign) {
          for (std::size_t i = 0; i < n; ++i) {
            double xi = pts[0].x[i] + sign * dir[i];
            if (xi < p.lower[i] || xi > p.upper[i]) return false;
          }
          return true;
        };
        double first = predicted(1.0) <= predicted(-1.0) ? 1.0 : -1.0;
        Vector x;
        if (inside(first) || inside(-first)) {
          double sign = inside(first) ? first : -first;
          x = linalg::add_scaled(pts[0].x, sign, dir);
        } else {
          std::size_t k = 0;
          for (std::size_t i = 1; i < n; ++i) {
            if (std::abs(dir[i]) > std::abs(dir[k])) k = i;
          }
          x = coordinate_step(pts[0].x, k, 0.5 * rho);
        }
        pts[worst + 1] = evaluate(std::move(x));
      };

      auto shrink = [&]() -> bool {
        if (rho <= rho_end) return false;
        rho *= 0.5;
        if (rho <= 1.5 * rho_end) rho = rho_end;
        detail::trace(opts, "cobyla", iter, pts[0].f, pts[0].x);
        return true;
      };

      if (check_geometry) {
        check_geometry = false;
        if (!acceptable) {
          geometry_step();
        } else if (!shrink()) {
          return finish(Status::xtol_reached);
        }
        continue;
      }

      Vector d = detail::cobyla_step(models, pts[0].x, p.lower, p.upper, rho);
      if (linalg::norm_inf(d) < 0.5 * rho) {
        if (!acceptable) {
          geometry_step();
        } else if (!shrink()) {
          return finish(Status::xtol_reached);
        }
        continue;
      }

      double pred_f = -linalg::dot(models.objective.gradient, d);
      double v_pred = 0.0;
      for (const auto& mk : models.constraints) v_pred = std::max(v_pred, mk(d));
      double pred_v = pts[0].maxv - v_pred;
      if (pred_v > 0.0 && pred_f < 0.0) {
        double barmu = -pred_f / pred_v;
        if (sigma < 1.5 * barmu) {
          sigma = 2.0 * barmu;
          // The base choice depends on sigma; reselect before stepping.
          bool changed = false;
          for (std::size_t j = 1; j <= n; ++j) {
            if (merit(pts[j]) < merit(pts[0])) changed = true;
          }
          if (changed) continue;
        }
      }
      double pred = pred_f + sigma * pred_v;
      if (!(pred > 0.0)) {
        check_geometry = true;
        continue;
      }

      detail::CobylaPoint trial = evaluate(linalg::add_scaled(pts[0].x, 1.0, d));
      ++iter;
      double actual = merit(pts[0]) - merit(trial);
      double ratio = actual / pred;

      // Barycentric weights of the trial point in the current simplex.
      Vector t(n + 1, 0.0);
      double tsum = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        double tj = 0.0;
        for (std::size_t i = 0; i < n; ++i) tj += w(i, j) * d[i];
        t[j + 1] = tj;
        tsum += tj;
      }
      t[0] = 1.0 - tsum;
      auto score = [&](std::size_t j) {
        double dist = 0.0;
        for (std::size_t i = 0; i < n; ++i) dist = std::max(dist, std::abs(pts[j].x[i] - trial.x[i]));
        double far = std::max(1.0, dist / rho);
        return std::abs(t[j]) * far * far;
      };
      const bool improved = merit(trial) < merit(pts[0]);
      std::size_t replace = improved ? 0 : 1;
      double best_score = score(replace);
      for (std::size_t j = replace + 1; j <= n; ++j) {
        double sj = score(j);
        if (sj > best_score) {
          best_score = sj;
          replace = j;
        }
      }
      if (improved || best_score > 1.0) pts[replace] = std::move(trial);
      if (ratio < 0.1) check_geometry = true;
    }
  } catch (const BudgetExhausted&) {
    return finish(Status::maxeval_reached);
  }
}

}  // namespace ascent
