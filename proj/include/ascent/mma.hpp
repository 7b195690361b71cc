#pragma once

// Method of moving asymptotes, globally convergent variant.
//
// Each outer iteration replaces the objective and every inequality
// constraint by a convex separable approximation
//
//   f~_i(x) = r_i + sum_j p_ij / (U_j - x_j) + q_ij / (x_j - L_j)
//
// around the current iterate, with poles L < x < U that move according to
// whether each coordinate oscillates. The subproblem is solved through its
// concave dual. A candidate is only accepted once every approximation is
// conservative there (f~_i >= f_i); otherwise the offending approximations are
// stiffened by raising rho_i and the subproblem is re-solved.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "ascent/core.hpp"
#include "ascent/linalg.hpp"

namespace ascent {

struct AsymptoteState {
  Vector lower_asym;
  Vector upper_asym;
  Vector x_prev1;  // x_{k-1}
  Vector x_prev2;  // x_{k-2}
  std::size_t iteration = 0;
};

inline constexpr double kMmaInfiniteBound = 1e6;

/// Advances the asymptotes to iterate x_new. The first two iterations place
/// them half the box width away; afterwards each interval shrinks by 0.7 on an
/// oscillating coordinate and grows by 1.2 otherwise, clipped to
/// [0.01, 10] times the box width on each side.
inline AsymptoteState mma_update_asymptotes(AsymptoteState state, std::span<const double> x_new,
                                            std::span<const double> lower,
                                            std::span<const double> upper) {
  const std::size_t n = x_new.size();
  ++state.iteration;
  state.lower_asym.resize(n);
  state.upper_asym.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double w = upper[i] - lower[i];
    if (state.iteration <= 2) {
      state.lower_asym[i] = x_new[i] - 0.5 * w;
      state.upper_asym[i] = x_new[i] + 0.5 * w;
      continue;
    }
    const double trend = (x_new[i] - state.x_prev1[i]) * (state.x_prev1[i] - state.x_prev2[i]);
    const double gamma = trend < 0.0 ? 0.7 : 1.2;
    double below = gamma * (state.x_prev1[i] - state.lower_asym[i]);
    double above = gamma * (state.upper_asym[i] - state.x_prev1[i]);
    below = std::clamp(below, 0.01 * w, 10.0 * w);
    above = std::clamp(above, 0.01 * w, 10.0 * w);
    state.lower_asym[i] = x_new[i] - below;
    state.upper_asym[i] = x_new[i] + above;
  }
  state.x_prev2 = state.x_prev1.empty() ? Vector(x_new.begin(), x_new.end()) : state.x_prev1;
  state.x_prev1.assign(x_new.begin(), x_new.end());
  return state;
}

namespace detail {

/// Convex separable approximation of one function, expanded around x_ref
/// where it equals `value`. Evaluation works with differences from x_ref:
/// the individual pole terms can be many orders of magnitude larger than the
/// function when the asymptotes are far away.
struct MmaApprox {
  Vector p, q;
  Vector x_ref;
  double value = 0.0;

  double operator()(std::span<const double> x, std::span<const double> L,
                    std::span<const double> U) const {
    double v = value;
    for (std::size_t j = 0; j < x.size(); ++j) {
      const double dx = x[j] - x_ref[j];
      v += p[j] * dx / ((U[j] - x[j]) * (U[j] - x_ref[j])) - q[j] * dx / ((x[j] - L[j]) * (x_ref[j] - L[j]));
    }
    return v;
  }
};

inline MmaApprox mma_approx(double value, std::span<const double> grad, double rho,
                            std::span<const double> x, std::span<const double> L,
                            std::span<const double> U, std::span<const double> width) {
  const std::size_t n = x.size();
  MmaApprox a;
  a.p.resize(n);
  a.q.resize(n);
  a.x_ref.assign(x.begin(), x.end());
  a.value = value;
  for (std::size_t j = 0; j < n; ++j) {
    const double gp = std::max(grad[j], 0.0);
    const double gm = std::max(-grad[j], 0.0);
    const double ux = U[j] - x[j];
    const double xl = x[j] - L[j];
    const double reg = rho / width[j];
    a.p[j] = ux * ux * (1.001 * gp + 0.001 * gm + reg);
    a.q[j] = xl * xl * (0.001 * gp + 1.001 * gm + reg);
  }
  return a;
}

/// Scaled squared distance whose rho-multiple is the regularizing part of the
/// approximation.
inline double mma_distance(std::span<const double> x_hat, std::span<const double> x,
                           std::span<const double> L, std::span<const double> U,
                           std::span<const double> width) {
  double d = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j) {
    const double dx = x_hat[j] - x[j];
    d += (U[j] - L[j]) * dx * dx / ((U[j] - x_hat[j]) * (x_hat[j] - L[j]) * width[j]);
  }
  return d;
}

inline constexpr double kArtificialCost = 1000.0;

/// Solves  min f~_0 + sum_i (c z_i + z_i^2 / 2)  s.t.  f~_i <= z_i, z >= 0,
/// alpha <= x <= beta  through its separable concave dual. Coordinate ascent
/// with per-multiplier bisection gives a starting point; projected Newton
/// steps then finish the job, since far-away asymptotes make the dual nearly
/// piecewise linear and coordinate ascent crawls there.
inline Vector mma_subproblem(const std::vector<MmaApprox>& approx, std::span<const double> L,
                             std::span<const double> U, std::span<const double> alpha,
                             std::span<const double> beta) {
  const std::size_t n = L.size();
  const std::size_t m = approx.size() - 1;
  Vector y(m, 0.0);
  Vector x(n);

  auto primal = [&](std::span<const double> yy) {
    for (std::size_t j = 0; j < n; ++j) {
      double P = approx[0].p[j];
      double Q = approx[0].q[j];
      for (std::size_t i = 0; i < m; ++i) {
        P += yy[i] * approx[i + 1].p[j];
        Q += yy[i] * approx[i + 1].q[j];
      }
      const double sp = std::sqrt(P);
      const double sq = std::sqrt(Q);
      double xj = sp + sq > 0.0 ? (sp * L[j] + sq * U[j]) / (sp + sq) : 0.5 * (alpha[j] + beta[j]);
      x[j] = std::clamp(xj, alpha[j], beta[j]);
    }
  };
  if (m == 0) {
    primal(y);
    return x;
  }

  auto slack = [](double t) { return std::max(0.0, t - kArtificialCost); };
  auto slope = [&](std::size_t i, double t) {
    y[i] = t;
    primal(y);
    return approx[i + 1](x, L, U) - slack(t);
  };

  for (int sweep = 0; sweep < 50; ++sweep) {
    double change = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      const double old = y[i];
      double t = 0.0;
      if (slope(i, 0.0) > 0.0) {
        double lo = 0.0;
        double hi = std::max(1.0, 2.0 * old);
        while (slope(i, hi) > 0.0) {
          lo = hi;
          hi *= 2.0;
        }
        for (int it = 0; it < 200 && hi - lo > 1e-12 * hi; ++it) {
          const double mid = 0.5 * (lo + hi);
          (slope(i, mid) > 0.0 ? lo : hi) = mid;
        }
        t = 0.5 * (lo + hi);
      }
      y[i] = t;
      if (t != old) change = std::max(change, std::abs(t - old) / std::max(t, old));
    }
    if (change <= 1e-12) break;
  }

  // Dual value and gradient at y; x is left at the minimizer for y.
  auto dual = [&](std::span<const double> yy, Vector* grad) {
    primal(yy);
    double w = approx[0](x, L, U);
    for (std::size_t i = 0; i < m; ++i) {
      const double fi = approx[i + 1](x, L, U);
      const double z = slack(yy[i]);
      w += yy[i] * fi + kArtificialCost * z + 0.5 * z * z - yy[i] * z;
      if (grad) (*grad)[i] = fi - z;
    }
    return w;
  };

  Vector g(m);
  double w = dual(y, &g);
  for (int it = 0; it < 100; ++it) {
    std::vector<std::size_t> free;
    double pg = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      if (y[i] > 0.0 || g[i] > 0.0) {
        free.push_back(i);
        pg = std::max(pg, std::abs(g[i]));
      }
    }
    if (free.empty() || pg <= 1e-12) break;

    // Negated dual Hessian on the free set: sum over unclamped x_j of
    // a_ij a_kj / (d2 Lagrangian / dx_j^2), plus 1 where z_i > 0.
    const std::size_t k = free.size();
    linalg::Matrix h(k);
    for (std::size_t j = 0; j < n; ++j) {
      if (x[j] <= alpha[j] || x[j] >= beta[j]) continue;
      const double ux = U[j] - x[j];
      const double xl = x[j] - L[j];
      double P = approx[0].p[j];
      double Q = approx[0].q[j];
      for (std::size_t i = 0; i < m; ++i) {
        P += y[i] * approx[i + 1].p[j];
        Q += y[i] * approx[i + 1].q[j];
      }
      const double curv = 2.0 * P / (ux * ux * ux) + 2.0 * Q / (xl * xl * xl);
      if (!(curv > 0.0)) continue;
      for (std::size_t a = 0; a < k; ++a) {
        const auto& fa = approx[free[a] + 1];
        const double da = fa.p[j] / (ux * ux) - fa.q[j] / (xl * xl);
        for (std::size_t b = 0; b < k; ++b) {
          const auto& fb = approx[free[b] + 1];
          const double db = fb.p[j] / (ux * ux) - fb.q[j] / (xl * xl);
          h(a, b) += da * db / curv;
        }
      }
    }
    double diag = 0.0;
    for (std::size_t a = 0; a < k; ++a) {
      if (y[free[a]] > kArtificialCost) h(a, a) += 1.0;
      diag = std::max(diag, h(a, a));
    }
    for (std::size_t a = 0; a < k; ++a) h(a, a) += 1e-14 * diag;

    Vector gf(k), d(k);
    for (std::size_t a = 0; a < k; ++a) gf[a] = g[free[a]];
    linalg::LU lu(h);
    if (diag > 0.0 && !lu.singular()) {
      d = lu.solve(gf);
    } else {
      d = gf;
    }

    bool improved = false;
    Vector y_new(m), g_new(m);
    for (double step = 1.0; step > 1e-20; step *= 0.5) {
      y_new = y;
      for (std::size_t a = 0; a < k; ++a) y_new[free[a]] = std::max(0.0, y[free[a]] + step * d[a]);
      const double w_new = dual(y_new, &g_new);
      if (w_new > w) {
        y = y_new;
        g = g_new;
        w = w_new;
        improved = true;
        break;
      }
    }
    if (!improved) break;
  }
  primal(y);
  return x;
}

}  // namespace detail

inline SolveResult minimize_mma(const Validated& v) {
  const Problem& p = v.problem;
  const SolverOptions& opts = v.options;
  const std::size_t n = p.n;
  const std::size_t m = p.m_ineq;
  EvaluationLedger ledger(opts.maxeval, NanPolicy::fail);

  Vector lb(n), ub(n), width(n);
  for (std::size_t j = 0; j < n; ++j) {
    lb[j] = std::isfinite(p.lower[j]) ? p.lower[j] : -kMmaInfiniteBound;
    ub[j] = std::isfinite(p.upper[j]) ? p.upper[j] : kMmaInfiniteBound;
    width[j] = std::max(ub[j] - lb[j], 1e-12);
  }

  struct Iterate {
    Vector x;
    double f = kInf;
    Vector grad;
    Vector c;
    Jacobian jac;
  };
  auto evaluate = [&](Vector x) {
    Iterate it;
    it.f = ledger.objective(p, x, &it.grad);
    if (!std::isfinite(it.f)) throw SolverError(Status::callback_failure, "objective is not finite");
    if (m > 0) it.c = ledger.inequality(p, x, &it.jac);
    it.x = std::move(x);
    return it;
  };
  auto is_feasible = [&](const Iterate& it) {
    for (std::size_t i = 0; i < m; ++i) {
      if (it.c[i] > opts.tol_constraints_ineq[i]) return false;
    }
    return true;
  };

  Iterate cur;
  Iterate best;
  bool best_feasible = false;
  std::size_t iter = 0;
  auto remember = [&](const Iterate& it) {
    const bool feas = is_feasible(it);
    if (best.x.empty() || (feas && (!best_feasible || it.f < best.f)) || (!feas && !best_feasible)) {
      best = it;
      best_feasible = feas;
    }
  };
  auto finish = [&](Status s) {
    const Iterate& out = best.x.empty() ? cur : best;
    if (out.x.empty()) return detail::make_result(v, s, p.x0, kInf, iter, ledger);
    return detail::make_result(v, s, out.x, out.f, iter, ledger);
  };

  try {
    Vector x0 = p.x0;
    clamp_to_bounds(x0, lb, ub);
    cur = evaluate(std::move(x0));
    remember(cur);

    auto initial_rho = [&](std::span<const double> grad) {
      double s = 0.0;
      for (std::size_t j = 0; j < n; ++j) s += std::abs(grad[j]) * width[j];
      return std::max(1e-5, 0.1 * s / static_cast<double>(n));
    };
    std::vector<double> rho(m + 1);
    rho[0] = initial_rho(cur.grad);
    for (std::size_t i = 0; i < m; ++i) rho[i + 1] = initial_rho(cur.jac.row(i));

    AsymptoteState asym;
    for (;;) {
      asym = mma_update_asymptotes(std::move(asym), cur.x, lb, ub);
      const Vector& L = asym.lower_asym;
      const Vector& U = asym.upper_asym;
      Vector alpha(n), beta(n);
      for (std::size_t j = 0; j < n; ++j) {
        alpha[j] = std::max({lb[j], L[j] + 0.1 * (cur.x[j] - L[j]), cur.x[j] - 0.5 * width[j]});
        beta[j] = std::min({ub[j], U[j] - 0.1 * (U[j] - cur.x[j]), cur.x[j] + 0.5 * width[j]});
      }

      Iterate trial;
      for (int inner = 0; inner < 20; ++inner) {
        std::vector<detail::MmaApprox> approx;
        approx.push_back(detail::mma_approx(cur.f, cur.grad, rho[0], cur.x, L, U, width));
        for (std::size_t i = 0; i < m; ++i)
          approx.push_back(detail::mma_approx(cur.c[i], cur.jac.row(i), rho[i + 1], cur.x, L, U, width));
        Vector x_hat = detail::mma_subproblem(approx, L, U, alpha, beta);
        trial = evaluate(std::move(x_hat));

        bool conservative = true;
        const double dist = detail::mma_distance(trial.x, cur.x, L, U, width);
        for (std::size_t i = 0; i <= m; ++i) {
          const double actual = i == 0 ? trial.f : trial.c[i - 1];
          const double before = i == 0 ? cur.f : cur.c[i - 1];
          const double model = approx[i](trial.x, L, U);
          // Near convergence a fixed slack would accept steps whose whole
          // predicted change is below it, so the slack shrinks with that change.
          const double slack =
              std::min(1e-10, std::max(1e-14 * std::abs(before), 1e-2 * std::abs(model - before)));
          if (actual <= model + slack) continue;
          conservative = false;
          const double delta = dist > 0.0 ? (actual - model) / dist : 0.0;
          rho[i] = std::min(10.0 * rho[i], std::max(2.0 * rho[i], 1.1 * (rho[i] + delta)));
        }
        if (conservative) break;
      }

      ++iter;
      Vector x_prev = cur.x;
      cur = std::move(trial);
      remember(cur);
      for (double& r : rho) r = std::max(0.1 * r, 1e-5);
      detail::trace(opts, "mma", iter, cur.f, cur.x);
      if (auto stop = should_stop(x_prev, cur.x, opts, ledger)) return finish(*stop);
    }
  } catch (const BudgetExhausted&) {
    return finish(Status::maxeval_reached);
  }
}

}  // namespace ascent
