#pragma once

// Single entry point: validates, dispatches on the configured algorithm and
// turns solver errors into a result with a negative status.

#include "ascent/auglag.hpp"
#include "ascent/cobyla.hpp"
#include "ascent/core.hpp"
#include "ascent/isres.hpp"
#include "ascent/lbfgs.hpp"
#include "ascent/mma.hpp"

namespace ascent {

inline SolveResult minimize(const Problem& problem, const SolverOptions& opts) {
  try {
    const Validated v = validate_problem(problem, opts);
    switch (v.options.algorithm) {
      case Algorithm::lbfgs:
        return minimize_lbfgs(v);
      case Algorithm::cobyla:
        return minimize_cobyla(v);
      case Algorithm::mma:
        return minimize_mma(v);
      case Algorithm::auglag:
        return minimize_auglag(v);
      case Algorithm::isres:
        return minimize_isres(v);
    }
    throw SolverError(Status::invalid_args, "unknown algorithm");
  } catch (const std::exception& e) {
    const auto* se = dynamic_cast<const SolverError*>(&e);
    SolveResult r;
    r.status = se ? se->status() : Status::callback_failure;
    r.message = e.what();
    r.x_opt = problem.x0;
    r.termination = termination_text(opts);
    r.m_ineq = problem.m_ineq;
    r.m_eq = problem.m_eq;
    return r;
  }
}

}  // namespace ascent
