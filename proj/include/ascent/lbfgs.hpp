#pragma once

// Limited-memory BFGS for unconstrained problems with analytic gradients.

#include <cstddef>
#include <deque>

#include "ascent/core.hpp"
#include "ascent/linalg.hpp"

namespace ascent {

/// Curvature pairs (s, y) of the limited-memory inverse Hessian.
class LbfgsState {
 public:
  explicit LbfgsState(std::size_t capacity = 10) : capacity_(capacity) {}

  struct Pair {
    Vector s;
    Vector y;
    double rho;  // 1 / (s.y)
  };

  /// Stores the pair if it satisfies s.y > 0; returns whether it was kept.
  bool push(Vector s, Vector y) {
    double sy = linalg::dot(s, y);
    if (!(sy > 0.0)) return false;
    double yy = linalg::dot(y, y);
    gamma_ = sy / yy;
    if (history_.size() == capacity_) history_.pop_front();
    history_.push_back({std::move(s), std::move(y), 1.0 / sy});
    return true;
  }

  void clear() {
    history_.clear();
    gamma_ = 1.0;
  }

  const std::deque<Pair>& history() const { return history_; }
  std::size_t capacity() const { return capacity_; }
  double gamma() const { return gamma_; }

 private:
  std::size_t capacity_;
  std::deque<Pair> history_;
  double gamma_ = 1.0;
};

/// Two-loop recursion: returns -H grad for the implicit inverse Hessian H.
inline Vector lbfgs_direction(const LbfgsState& state, std::span<const double> grad) {
  Vector q(grad.begin(), grad.end());
  const auto& hist = state.history();
  std::vector<double> alpha(hist.size());
  for (std::size_t k = hist.size(); k-- > 0;) {
    alpha[k] = hist[k].rho * linalg::dot(hist[k].s, q);
    linalg::axpy(-alpha[k], hist[k].y, q);
  }
  double gamma = hist.empty() ? 1.0 : state.gamma();
  for (double& v : q) v *= gamma;
  for (std::size_t k = 0; k < hist.size(); ++k) {
    double beta = hist[k].rho * linalg::dot(hist[k].y, q);
    linalg::axpy(alpha[k] - beta, hist[k].s, q);
  }
  for (double& v : q) v = -v;
  return q;
}

struct LineSearchResult {
  double alpha = 0.0;
  Vector x;
  double f = 0.0;
  Vector grad;
};

inline constexpr double kArmijoC1 = 1e-4;
inline constexpr int kMaxBacktracks = 60;

/// Backtracking Armijo search from alpha = 1, halving on rejection. Each trial
/// evaluates value and gradient so the accepted point needs no re-evaluation.
inline LineSearchResult line_search(const Problem& problem, std::span<const double> x,
                                    std::span<const double> direction, double f_x,
                                    std::span<const double> grad_x, EvaluationLedger& ledger) {
  const double slope = linalg::dot(direction, grad_x);
  if (!(slope < 0.0)) throw SolverError(Status::invalid_args, "line search needs a descent direction");
  LineSearchResult r;
  r.alpha = 1.0;
  for (int k = 0; k <= kMaxBacktracks; ++k) {
    r.x = linalg::add_scaled(x, r.alpha, direction);
    r.f = ledger.objective(problem, r.x, &r.grad);
    if (r.f <= f_x + kArmijoC1 * r.alpha * slope) return r;
    r.alpha *= 0.5;
  }
  throw SolverError(Status::callback_failure, "line search failed to find sufficient decrease");
}

/// Secant step on the directional derivative between 0 and the accepted alpha.
/// Exact along quadratics, so the outer loop terminates like conjugate
/// gradients there. The refined point is kept only when it lowers f.
inline void refine_step(const Problem& problem, std::span<const double> x,
                        std::span<const double> direction, std::span<const double> grad_x,
                        LineSearchResult& ls, EvaluationLedger& ledger) {
  const double d0 = linalg::dot(direction, grad_x);
  const double d1 = linalg::dot(direction, ls.grad);
  if (!(d1 - d0 > 0.0) || d1 == 0.0) return;
  const double alpha = ls.alpha * -d0 / (d1 - d0);
  if (!std::isfinite(alpha) || std::abs(alpha - ls.alpha) <= 1e-12 * ls.alpha) return;
  LineSearchResult t;
  t.alpha = alpha;
  t.x = linalg::add_scaled(x, alpha, direction);
  try {
    t.f = ledger.objective(problem, t.x, &t.grad);
  } catch (const SolverError&) {
    return;
  } catch (const BudgetExhausted&) {
    return;  // the next evaluation reports the budget with the Armijo point kept
  }
  if (t.f < ls.f) ls = std::move(t);
}

inline SolveResult minimize_lbfgs(const Validated& v, std::size_t memory = 10) {
  const Problem& p = v.problem;
  const SolverOptions& opts = v.options;
  EvaluationLedger ledger(opts.maxeval, NanPolicy::fail);

  Vector x = p.x0;
  Vector g;
  double f = kInf;
  std::size_t iter = 0;
  LbfgsState state(memory);

  try {
    f = ledger.objective(p, x, &g);
    if (!std::isfinite(f)) throw SolverError(Status::callback_failure, "objective is not finite at x0");
    for (;;) {
      if (linalg::norm2(g) <= 1e-14 * std::max(1.0, std::abs(f)))
        return detail::make_result(v, Status::success, x, f, iter, ledger);

      Vector d = lbfgs_direction(state, g);
      if (!(linalg::dot(d, g) < 0.0)) {
        state.clear();
        d = lbfgs_direction(state, g);
      }

      LineSearchResult ls;
      try {
        ls = line_search(p, x, d, f, g, ledger);
      } catch (const SolverError& e) {
        // Backtracking collapsed below the step tolerance: x is converged as
        // far as the x-tolerance can resolve.
        Vector tiny = linalg::add_scaled(x, std::ldexp(1.0, -kMaxBacktracks), d);
        if (e.status() == Status::callback_failure && should_stop(x, tiny, opts, ledger))
          return detail::make_result(v, Status::xtol_reached, x, f, iter, ledger);
        throw;
      }
      refine_step(p, x, d, g, ls, ledger);

      Vector s(p.n), y(p.n);
      for (std::size_t i = 0; i < p.n; ++i) {
        s[i] = ls.x[i] - x[i];
        y[i] = ls.grad[i] - g[i];
      }
      // A pair with s.y <= 0 is dropped; the stale scaling it would have
      // corrected is discarded with it.
      if (!state.push(std::move(s), std::move(y))) state.clear();
      ++iter;
      auto stop = should_stop(x, ls.x, opts, ledger);
      x = std::move(ls.x);
      f = ls.f;
      g = std::move(ls.grad);
      detail::trace(opts, "lbfgs", iter, f, x);
      if (stop) return detail::make_result(v, *stop, x, f, iter, ledger);
    }
  } catch (const BudgetExhausted&) {
    return detail::make_result(v, Status::maxeval_reached, x, f, iter, ledger);
  }
}

}  // namespace ascent
