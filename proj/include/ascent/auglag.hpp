#pragma once

// Augmented Lagrangian outer loop. Equality constraints always enter the
// penalty; inequality constraints are handed to the local solver when it can
// take them (cobyla, mma) and folded into the penalty otherwise.

#include <algorithm>
#include <cmath>
#include <cstddef>

#include "ascent/cobyla.hpp"
#include "ascent/core.hpp"
#include "ascent/lbfgs.hpp"
#include "ascent/mma.hpp"

namespace ascent {

struct MultiplierState {
  Vector lambda;  // equality multipliers
  Vector mu;      // folded inequality multipliers, nonnegative
  double rho = 1.0;
  double last_violation = kInf;
};

/// f + sum_j [lambda_j h_j + rho/2 h_j^2]
///   + 1/(2 rho) sum_i [max(0, mu_i + rho g_i)^2 - mu_i^2].
/// Inequalities contribute only when `fold_inequalities` is set. The gradient
/// needs the objective gradient and the Jacobians of every included term.
inline double augmented_value(const Problem& p, std::span<const double> x, const MultiplierState& s,
                              Vector* grad = nullptr, bool fold_inequalities = true,
                              EvaluationLedger* ledger = nullptr) {
  EvaluationLedger scratch;
  EvaluationLedger& led = ledger ? *ledger : scratch;
  double v = led.objective(p, x, grad);
  const double rho = s.rho;

  if (p.m_eq > 0) {
    Jacobian jac;
    const Vector h = led.equality(p, x, grad ? &jac : nullptr);
    for (std::size_t j = 0; j < h.size(); ++j) {
      const double lam = j < s.lambda.size() ? s.lambda[j] : 0.0;
      v += lam * h[j] + 0.5 * rho * h[j] * h[j];
      if (grad) linalg::axpy(lam + rho * h[j], jac.row(j), *grad);
    }
  }
  if (fold_inequalities && p.m_ineq > 0) {
    Jacobian jac;
    const Vector g = led.inequality(p, x, grad ? &jac : nullptr);
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double mu = i < s.mu.size() ? s.mu[i] : 0.0;
      const double t = std::max(0.0, mu + rho * g[i]);
      v += (t * t - mu * mu) / (2.0 * rho);
      if (grad && t > 0.0) linalg::axpy(t, jac.row(i), *grad);
    }
  }
  return v;
}

inline constexpr double kMaxPenalty = 1e12;

/// First-order multiplier step. rho doubles when the violation norm of
/// (h, max(0, g)) did not shrink below a quarter of the previous one.
inline MultiplierState update_multipliers(MultiplierState s, std::span<const double> h_values,
                                          std::span<const double> g_values) {
  double norm2 = 0.0;
  s.lambda.resize(h_values.size(), 0.0);
  for (std::size_t j = 0; j < h_values.size(); ++j) {
    s.lambda[j] += s.rho * h_values[j];
    norm2 += h_values[j] * h_values[j];
  }
  s.mu.resize(g_values.size(), 0.0);
  for (std::size_t i = 0; i < g_values.size(); ++i) {
    s.mu[i] = std::max(0.0, s.mu[i] + s.rho * g_values[i]);
    const double excess = std::max(0.0, g_values[i]);
    norm2 += excess * excess;
  }
  const double violation = std::sqrt(norm2);
  if (violation > 0.25 * s.last_violation) s.rho = std::min(2.0 * s.rho, kMaxPenalty);
  s.last_violation = violation;
  return s;
}

struct AuglagResult {
  SolveResult result;
  MultiplierState multipliers;
};

namespace detail {

inline SolveResult run_local(const Validated& v) {
  switch (v.options.algorithm) {
    case Algorithm::lbfgs:
      return minimize_lbfgs(v);
    case Algorithm::cobyla:
      return minimize_cobyla(v);
    case Algorithm::mma:
      return minimize_mma(v);
    default:
      throw SolverError(Status::invalid_args, "unsupported local algorithm");
  }
}

inline bool passes_inequalities(Algorithm a) { return a == Algorithm::cobyla || a == Algorithm::mma; }

}  // namespace detail

inline AuglagResult minimize_auglag_detailed(const Validated& v) {
  const Problem& p = v.problem;
  const SolverOptions& opts = v.options;
  const SolverOptions& local = *opts.local_opts;

  if (p.m_eq == 0 && p.m_ineq == 0) {
    SolverOptions direct = local;
    if (opts.maxeval) direct.maxeval = std::min(*opts.maxeval, direct.maxeval.value_or(*opts.maxeval));
    Problem plain = p;
    return {detail::run_local(validate_problem(plain, direct)), {}};
  }

  const bool fold = !detail::passes_inequalities(local.algorithm);
  const bool use_gradient = needs_gradient(local.algorithm);
  EvaluationLedger ledger(opts.maxeval, NanPolicy::fail);

  MultiplierState state;
  state.lambda.assign(p.m_eq, 0.0);
  state.mu.assign(fold ? p.m_ineq : 0, 0.0);

  Vector x = p.x0;
  double f = kInf;
  Vector h, g;
  Vector best_x;
  double best_f = kInf;
  bool best_feasible = false;
  double best_violation = kInf;
  std::size_t iter = 0;

  auto violation = [&] {
    return constraint_violation(g, h, opts.tol_constraints_ineq, opts.tol_constraints_eq);
  };
  auto remember = [&] {
    const double phi = violation();
    const bool feas = phi == 0.0;
    const bool better = feas ? (!best_feasible || f < best_f) : (!best_feasible && phi < best_violation);
    if (best_x.empty() || better) {
      best_x = x;
      best_f = f;
      best_feasible = feas;
      best_violation = phi;
    }
    return feas;
  };
  auto finish = [&](Status s) {
    AuglagResult out;
    out.result = detail::make_result(v, s, best_x.empty() ? x : best_x, best_x.empty() ? f : best_f, iter,
                                     ledger);
    out.multipliers = state;
    return out;
  };

  try {
    f = ledger.objective(p, x);
    if (!std::isfinite(f)) throw SolverError(Status::callback_failure, "objective is not finite at x0");
    if (p.m_eq > 0) h = ledger.equality(p, x);
    if (p.m_ineq > 0) g = ledger.inequality(p, x);
    remember();

    double penalty = 0.0;
    for (double hv : h) penalty += hv * hv;
    for (double gv : g) penalty += std::max(0.0, gv) * std::max(0.0, gv);
    state.rho = std::max(1.0, 10.0 * std::abs(f) / std::max(1.0, penalty));

    double inner_tol = std::max(1e-3, opts.xtol_rel);
    const double tol_floor = local.xtol_rel;
    inner_tol = std::max(inner_tol, tol_floor);

    for (;;) {
      Problem sub;
      sub.n = p.n;
      sub.lower = p.lower;
      sub.upper = p.upper;
      sub.x0 = x;
      sub.has_gradient = use_gradient;
      sub.objective = [&p, &state, &ledger, fold](std::span<const double> xx, Vector* grad) {
        return augmented_value(p, xx, state, grad, fold, &ledger);
      };
      if (!fold && p.m_ineq > 0) {
        sub.inequality = [&p, &ledger](std::span<const double> xx, Jacobian* jac) {
          return ledger.inequality(p, xx, jac);
        };
        sub.inequality_has_jacobian = p.inequality_has_jacobian;
      }
      SolverOptions sub_opts = local;
      sub_opts.xtol_rel = inner_tol;
      sub_opts.tol_constraints_ineq = fold ? Vector{} : opts.tol_constraints_ineq;
      sub_opts.print_level = std::max(0, local.print_level);

      const SolveResult inner = detail::run_local(validate_problem(sub, sub_opts));
      if (code(inner.status) < 0)
        throw SolverError(inner.status, "local " + std::string(to_string(local.algorithm)) +
                                            " solve failed: " + inner.message);

      Vector x_prev = x;
      x = inner.x_opt;
      ++iter;
      f = ledger.objective(p, x);
      if (p.m_eq > 0) h = ledger.equality(p, x);
      if (p.m_ineq > 0) g = ledger.inequality(p, x);
      const bool feasible = remember();
      state = update_multipliers(std::move(state), h, fold ? std::span<const double>(g) : std::span<const double>());
      detail::trace(opts, "auglag", iter, f, x);

      auto stop = should_stop(x_prev, x, opts, ledger);
      if (stop == Status::maxeval_reached) return finish(*stop);
      if (stop && feasible && inner_tol <= tol_floor) return finish(*stop);
      inner_tol = std::max(inner_tol / 10.0, tol_floor);
    }
  } catch (const BudgetExhausted&) {
    return finish(Status::maxeval_reached);
  }
}

inline SolveResult minimize_auglag(const Validated& v) { return minimize_auglag_detailed(v).result; }

}  // namespace ascent
