#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "ascent/ascent.hpp"

using namespace ascent;

namespace {

SolverOptions lbfgs_opts() {
  SolverOptions o;
  o.algorithm = Algorithm::lbfgs;
  o.xtol_rel = 1e-8;
  return o;
}

SolverOptions hs071_opts() {
  SolverOptions o;
  o.algorithm = Algorithm::auglag;
  o.xtol_rel = 1e-7;
  o.maxeval = 1000;
  SolverOptions local;
  local.algorithm = Algorithm::mma;
  local.xtol_rel = 1e-7;
  o.local_opts = std::make_shared<SolverOptions>(local);
  return o;
}

Problem box_quadratic() {
  Problem p;
  p.n = 2;
  p.objective = [](std::span<const double> x, Vector* g) {
    if (g) *g = {2.0 * x[0], 2.0 * x[1]};
    return x[0] * x[0] + x[1] * x[1];
  };
  p.has_gradient = true;
  p.lower = {1.0, 1.0};
  p.upper = {5.0, 5.0};
  p.x0 = {0.0, 0.0};
  return p;
}

}  // namespace

TEST(Validate, ClampsStartIntoBox) {
  SolverOptions o;
  o.algorithm = Algorithm::mma;
  o.xtol_rel = 1e-6;
  const Validated v = validate_problem(box_quadratic(), o);
  EXPECT_EQ(v.problem.x0, (Vector{1.0, 1.0}));
}

TEST(Validate, Hs071AcceptedUnchanged) {
  const Problem hs = problems::hs071();
  const Validated v = validate_problem(hs, hs071_opts());
  EXPECT_EQ(v.problem.x0, hs.x0);
  EXPECT_EQ(v.problem.lower, hs.lower);
  EXPECT_EQ(v.problem.upper, hs.upper);
  EXPECT_EQ(v.problem.m_ineq, 1u);
  EXPECT_EQ(v.problem.m_eq, 1u);
  EXPECT_EQ(v.options.tol_constraints_ineq, (Vector{kDefaultConstraintTol}));
  EXPECT_EQ(v.options.tol_constraints_eq, (Vector{kDefaultConstraintTol}));
}

TEST(Validate, LbfgsRejectsEqualityConstraints) {
  Problem p = problems::rosenbrock();
  p.equality = [](std::span<const double> x, Jacobian*) { return Vector{x[0] - 1.0}; };
  try {
    validate_problem(p, lbfgs_opts());
    FAIL() << "expected rejection";
  } catch (const SolverError& e) {
    EXPECT_EQ(e.status(), Status::invalid_args);
  }
}

TEST(Validate, RejectsInvertedBoundsAndBadDimensions) {
  Problem p = box_quadratic();
  p.lower = {6.0, 1.0};
  SolverOptions o;
  o.algorithm = Algorithm::cobyla;
  o.xtol_rel = 1e-6;
  EXPECT_THROW(validate_problem(p, o), SolverError);

  p = box_quadratic();
  p.x0 = {1.0};
  EXPECT_THROW(validate_problem(p, o), SolverError);
}

TEST(Validate, GradientSolverNeedsGradient) {
  Problem p = problems::multi_ineq_2d();
  SolverOptions o;
  o.algorithm = Algorithm::mma;
  o.xtol_rel = 1e-6;
  EXPECT_THROW(validate_problem(p, o), SolverError);
}

TEST(Validate, LocalOptionsOnlyWithAuglag) {
  SolverOptions o = lbfgs_opts();
  o.local_opts = std::make_shared<SolverOptions>(lbfgs_opts());
  EXPECT_THROW(validate_problem(problems::rosenbrock(), o), SolverError);

  SolverOptions a = hs071_opts();
  a.local_opts = nullptr;
  EXPECT_THROW(validate_problem(problems::hs071(), a), SolverError);
}

TEST(Validate, NeedsSomeStoppingRule) {
  SolverOptions o;
  o.algorithm = Algorithm::cobyla;
  EXPECT_THROW(validate_problem(problems::tutorial_sqrt(), o), SolverError);
  o.maxeval = 10;
  EXPECT_NO_THROW(validate_problem(problems::tutorial_sqrt(), o));
}

TEST(Validate, Idempotent) {
  SolverOptions o;
  o.algorithm = Algorithm::mma;
  o.xtol_rel = 1e-7;
  const Validated once = validate_problem(box_quadratic(), o);
  const Validated twice = validate_problem(once.problem, once.options);
  EXPECT_EQ(twice.problem.x0, once.problem.x0);
  EXPECT_EQ(twice.problem.lower, once.problem.lower);
  EXPECT_EQ(twice.problem.upper, once.problem.upper);
  EXPECT_EQ(twice.problem.m_ineq, once.problem.m_ineq);
  EXPECT_EQ(twice.problem.m_eq, once.problem.m_eq);
  EXPECT_EQ(twice.options.tol_constraints_ineq, once.options.tol_constraints_ineq);
  EXPECT_EQ(twice.options.tol_constraints_eq, once.options.tol_constraints_eq);

  const Validated h1 = validate_problem(problems::hs071(), hs071_opts());
  const Validated h2 = validate_problem(h1.problem, h1.options);
  EXPECT_EQ(h2.problem.x0, h1.problem.x0);
  EXPECT_EQ(h2.options.tol_constraints_eq, h1.options.tol_constraints_eq);
}

TEST(Ledger, CountsObjectiveCalls) {
  Problem p = problems::rosenbrock();
  p = validate_problem(p, lbfgs_opts()).problem;
  EvaluationLedger ledger;
  const Vector x = {1.0, 1.0};
  EXPECT_EQ(ledger.objective(p, x), 0.0);
  EXPECT_EQ(ledger.n_obj(), 1u);
  EXPECT_EQ(ledger.n_grad(), 0u);
  Vector g;
  ledger.objective(p, x, &g);
  EXPECT_EQ(ledger.n_obj(), 2u);
  EXPECT_EQ(ledger.n_grad(), 1u);
}

TEST(Ledger, BudgetExhausted) {
  Problem p = validate_problem(problems::rosenbrock(), lbfgs_opts()).problem;
  EvaluationLedger ledger(1000);
  const Vector x = {0.5, 0.5};
  for (int i = 0; i < 1000; ++i) ledger.objective(p, x);
  EXPECT_TRUE(ledger.exhausted());
  EXPECT_THROW(ledger.objective(p, x), BudgetExhausted);
  EXPECT_EQ(ledger.n_obj(), 1000u);
}

TEST(Ledger, Hs071AtStart) {
  Problem p = validate_problem(problems::hs071(), hs071_opts()).problem;
  EvaluationLedger ledger;
  EXPECT_DOUBLE_EQ(ledger.objective(p, p.x0), 16.0);
  EXPECT_EQ(ledger.inequality(p, p.x0), (Vector{0.0}));
  EXPECT_EQ(ledger.equality(p, p.x0), (Vector{12.0}));
  EXPECT_EQ(ledger.n_ineq(), 1u);
  EXPECT_EQ(ledger.n_eq(), 1u);
}

TEST(Ledger, NanPolicy) {
  Problem p;
  p.n = 1;
  p.objective = [](std::span<const double>, Vector*) { return std::nan(""); };
  p.x0 = {0.0};
  const Vector x = {0.0};
  EvaluationLedger strict;
  try {
    strict.objective(p, x);
    FAIL() << "NaN should fail";
  } catch (const SolverError& e) {
    EXPECT_EQ(e.status(), Status::callback_failure);
  }
  EvaluationLedger ranking(std::nullopt, NanPolicy::as_infinity);
  EXPECT_EQ(ranking.objective(p, x), kInf);
}

TEST(Ledger, WrongConstraintLength) {
  Problem p = validate_problem(problems::hs071(), hs071_opts()).problem;
  p.equality = [](std::span<const double>, Jacobian*) { return Vector{1.0, 2.0}; };
  EvaluationLedger ledger;
  EXPECT_THROW(ledger.equality(p, p.x0), SolverError);
}

TEST(Ledger, CountersNeverDecrease) {
  Problem p = validate_problem(problems::hs071(), hs071_opts()).problem;
  EvaluationLedger ledger;
  std::size_t prev[4] = {0, 0, 0, 0};
  std::mt19937_64 gen(7);
  std::uniform_int_distribution<int> pick(0, 3);
  for (int i = 0; i < 200; ++i) {
    Vector g;
    switch (pick(gen)) {
      case 0: ledger.objective(p, p.x0); break;
      case 1: ledger.objective(p, p.x0, &g); break;
      case 2: ledger.inequality(p, p.x0); break;
      default: ledger.equality(p, p.x0); break;
    }
    const std::size_t now[4] = {ledger.n_obj(), ledger.n_grad(), ledger.n_ineq(), ledger.n_eq()};
    for (int k = 0; k < 4; ++k) {
      EXPECT_GE(now[k], prev[k]);
      prev[k] = now[k];
    }
  }
}

TEST(ShouldStop, SmallStepReachesXtol) {
  SolverOptions o;
  o.xtol_rel = 1e-8;
  EvaluationLedger ledger;
  EXPECT_EQ(should_stop(Vector{1.0, 1.0}, Vector{1.0 + 1e-9, 1.0}, o, ledger), Status::xtol_reached);
}

TEST(ShouldStop, LargeStepContinues) {
  SolverOptions o;
  o.xtol_rel = 1e-8;
  EvaluationLedger ledger(100);
  EXPECT_EQ(should_stop(Vector{1.0, 1.0}, Vector{1.1, 1.0}, o, ledger), std::nullopt);
}

TEST(ShouldStop, BudgetTakesPrecedence) {
  Problem p = validate_problem(problems::rosenbrock(), lbfgs_opts()).problem;
  SolverOptions o;
  o.xtol_rel = 1e-8;
  EvaluationLedger ledger(1);
  ledger.objective(p, p.x0);
  EXPECT_EQ(should_stop(Vector{1.0, 1.0}, Vector{1.0, 1.0}, o, ledger), Status::maxeval_reached);
  EXPECT_EQ(should_stop(Vector{1.0, 1.0}, Vector{9.0, -4.0}, o, ledger), Status::maxeval_reached);
}

TEST(ShouldStop, AbsoluteTolerance) {
  SolverOptions o;
  o.xtol_abs = 1e-3;
  EvaluationLedger ledger;
  EXPECT_EQ(should_stop(Vector{0.0}, Vector{5e-4}, o, ledger), Status::xtol_reached);
  EXPECT_EQ(should_stop(Vector{0.0}, Vector{2e-3}, o, ledger), std::nullopt);
}

TEST(ShouldStop, MonotoneInTolerance) {
  std::mt19937_64 gen(11);
  std::normal_distribution<double> nd;
  EvaluationLedger ledger;
  for (int trial = 0; trial < 500; ++trial) {
    Vector a(3), b(3);
    for (int i = 0; i < 3; ++i) {
      a[i] = nd(gen);
      b[i] = a[i] + 1e-3 * nd(gen);
    }
    SolverOptions lo, hi;
    lo.xtol_rel = std::pow(10.0, -1.0 - 6.0 * std::uniform_real_distribution<double>()(gen));
    hi.xtol_rel = lo.xtol_rel * (1.0 + 100.0 * std::uniform_real_distribution<double>()(gen));
    if (should_stop(a, b, lo, ledger) == Status::xtol_reached) {
      EXPECT_EQ(should_stop(a, b, hi, ledger), Status::xtol_reached);
    }
  }
}

TEST(Violation, Examples) {
  const Problem p = problems::multi_ineq_2d();
  const Vector tol(5, 1e-10);
  const Vector at_opt = p.inequality(Vector{1.0, 1.0}, nullptr);
  EXPECT_EQ(at_opt, (Vector{-1.0, -1.0, -1.0, 0.0, 0.0}));
  EXPECT_EQ(constraint_violation(at_opt, {}, tol, {}), 0.0);

  const Vector at_start = p.inequality(Vector{3.0, 1.0}, nullptr);
  EXPECT_EQ(at_start, (Vector{-3.0, -9.0, -73.0, -8.0, 2.0}));
  EXPECT_DOUBLE_EQ(constraint_violation(at_start, {}, tol, {}), 2.0 - 1e-10);

  EXPECT_EQ(constraint_violation(Vector{-1.0, -0.5}, Vector{0.0}, Vector{0.0, 0.0}, Vector{0.0}), 0.0);
}

TEST(Violation, EqualityUsesMagnitude) {
  EXPECT_DOUBLE_EQ(constraint_violation({}, Vector{-0.5, 0.25}, {}, Vector{0.1, 0.1}), 0.4 + 0.15);
}

TEST(Status, CodesMatchTable) {
  EXPECT_EQ(code(Status::success), 1);
  EXPECT_EQ(code(Status::ftol_reached), 3);
  EXPECT_EQ(code(Status::xtol_reached), 4);
  EXPECT_EQ(code(Status::maxeval_reached), 5);
  EXPECT_EQ(code(Status::invalid_args), -1);
  EXPECT_EQ(code(Status::callback_failure), -2);
  for (int c : {1, 3, 4, 5, -1, -2}) EXPECT_EQ(code(*status_from_code(c)), c);
  EXPECT_FALSE(status_from_code(2).has_value());
}

TEST(Termination, DescribesConfiguredRules) {
  SolverOptions o;
  o.xtol_rel = 1e-8;
  EXPECT_EQ(termination_text(o), "xtol_rel: 1e-08");
  o.maxeval = 1000;
  EXPECT_EQ(termination_text(o), "xtol_rel: 1e-08 maxeval: 1000");
}

TEST(Minimize, ResultsRespectBoundsExactly) {
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> u(-10.0, 10.0);
  for (Algorithm a : {Algorithm::cobyla, Algorithm::mma, Algorithm::isres}) {
    for (int trial = 0; trial < 5; ++trial) {
      Problem p = box_quadratic();
      const double c0 = u(gen), c1 = u(gen);
      p.objective = [c0, c1](std::span<const double> x, Vector* g) {
        if (g) *g = {2.0 * (x[0] - c0), 2.0 * (x[1] - c1)};
        return (x[0] - c0) * (x[0] - c0) + (x[1] - c1) * (x[1] - c1);
      };
      SolverOptions o;
      o.algorithm = a;
      o.xtol_rel = 1e-8;
      o.maxeval = 2000;
      o.seed = static_cast<std::uint64_t>(trial);
      const SolveResult r = minimize(p, o);
      ASSERT_GT(code(r.status), 0) << r.message;
      for (std::size_t i = 0; i < 2; ++i) {
        EXPECT_GE(r.x_opt[i], p.lower[i]);
        EXPECT_LE(r.x_opt[i], p.upper[i]);
      }
    }
  }
}

TEST(Minimize, InvalidProblemGivesNegativeStatus) {
  Problem p = box_quadratic();
  p.lower = {9.0, 9.0};
  SolverOptions o;
  o.algorithm = Algorithm::cobyla;
  o.xtol_rel = 1e-6;
  const SolveResult r = minimize(p, o);
  EXPECT_EQ(r.status, Status::invalid_args);
  EXPECT_FALSE(r.message.empty());
}
