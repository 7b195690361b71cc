#pragma once

// Built-in benchmark problems: the Rosenbrock banana function, a square-root
// objective under two cubic constraints, HS071, and a 2-D quadratic with five
// nonlinear inequality constraints.

#include <cmath>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ascent/core.hpp"

namespace ascent::problems {

struct ReferenceSolution {
  Vector x;
  double f = 0.0;
  std::string note;
};

struct ProblemSpec {
  std::string name;
  std::size_t n = 0;
  std::size_t m_ineq = 0;
  std::size_t m_eq = 0;
  std::string description;
  std::optional<ReferenceSolution> reference;
  SolverOptions default_options;
};

using Params = std::map<std::string, Vector>;

inline Problem rosenbrock() {
  Problem p;
  p.n = 2;
  p.objective = [](std::span<const double> x, Vector* g) {
    const double a = x[1] - x[0] * x[0];
    const double b = 1.0 - x[0];
    if (g) {
      (*g)[0] = -400.0 * x[0] * a - 2.0 * b;
      (*g)[1] = 200.0 * a;
    }
    return 100.0 * a * a + b * b;
  };
  p.has_gradient = true;
  p.x0 = {-1.2, 1.0};
  return p;
}

/// min sqrt(x2)  s.t.  (a_k x1 + b_k)^3 - x2 <= 0, k = 1, 2,  x2 >= 0.
inline Problem tutorial_sqrt(const Vector& a = {2.0, -1.0}, const Vector& b = {0.0, 1.0}) {
  Problem p;
  p.n = 2;
  p.objective = [](std::span<const double> x, Vector*) { return std::sqrt(x[1]); };
  p.inequality = [a, b](std::span<const double> x, Jacobian*) {
    Vector c(2);
    for (std::size_t k = 0; k < 2; ++k) {
      const double t = a[k] * x[0] + b[k];
      c[k] = t * t * t - x[1];
    }
    return c;
  };
  p.lower = {-kInf, 0.0};
  p.upper = {kInf, kInf};
  p.x0 = {1.234, 5.678};
  return p;
}

/// HS071: min x1 x4 (x1 + x2 + x3) + x3  s.t.  x1 x2 x3 x4 >= 25,
/// sum x_i^2 = 40,  1 <= x_i <= 5.
inline Problem hs071() {
  Problem p;
  p.n = 4;
  p.objective = [](std::span<const double> x, Vector* g) {
    if (g) {
      (*g)[0] = x[0] * x[3] + x[3] * (x[0] + x[1] + x[2]);
      (*g)[1] = x[0] * x[3];
      (*g)[2] = x[0] * x[3] + 1.0;
      (*g)[3] = x[0] * (x[0] + x[1] + x[2]);
    }
    return x[0] * x[3] * (x[0] + x[1] + x[2]) + x[2];
  };
  p.has_gradient = true;
  p.inequality = [](std::span<const double> x, Jacobian* jac) {
    if (jac) {
      (*jac)(0, 0) = -x[1] * x[2] * x[3];
      (*jac)(0, 1) = -x[0] * x[2] * x[3];
      (*jac)(0, 2) = -x[0] * x[1] * x[3];
      (*jac)(0, 3) = -x[0] * x[1] * x[2];
    }
    return Vector{25.0 - x[0] * x[1] * x[2] * x[3]};
  };
  p.inequality_has_jacobian = true;
  p.equality = [](std::span<const double> x, Jacobian* jac) {
    if (jac) {
      for (std::size_t i = 0; i < 4; ++i) (*jac)(0, i) = 2.0 * x[i];
    }
    return Vector{x[0] * x[0] + x[1] * x[1] + x[2] * x[2] + x[3] * x[3] - 40.0};
  };
  p.equality_has_jacobian = true;
  p.lower = {1.0, 1.0, 1.0, 1.0};
  p.upper = {5.0, 5.0, 5.0, 5.0};
  p.x0 = {1.0, 5.0, 5.0, 1.0};
  return p;
}

/// min x1^2 + x2^2 under five nonlinear inequalities on [-50, 50]^2.
inline Problem multi_ineq_2d() {
  Problem p;
  p.n = 2;
  p.objective = [](std::span<const double> x, Vector*) { return x[0] * x[0] + x[1] * x[1]; };
  p.inequality = [](std::span<const double> x, Jacobian*) {
    const double x1 = x[0], x2 = x[1];
    return Vector{1.0 - x1 - x2, 1.0 - x1 * x1 - x2 * x2, 9.0 - 9.0 * x1 * x1 - x2 * x2,
                  x2 - x1 * x1, x1 - x2 * x2};
  };
  p.lower = {-50.0, -50.0};
  p.upper = {50.0, 50.0};
  p.x0 = {3.0, 1.0};
  return p;
}

namespace detail {

inline SolverOptions options(Algorithm a, double xtol_rel, std::optional<std::size_t> maxeval = std::nullopt) {
  SolverOptions o;
  o.algorithm = a;
  o.xtol_rel = xtol_rel;
  o.maxeval = maxeval;
  return o;
}

inline std::vector<ProblemSpec> build_registry() {
  std::vector<ProblemSpec> r;

  ProblemSpec rb;
  rb.name = "rosenbrock";
  rb.n = 2;
  rb.description = "Rosenbrock banana function with analytic gradient";
  rb.reference = ReferenceSolution{{1.0, 1.0}, 0.0, "global minimum"};
  rb.default_options = options(Algorithm::lbfgs, 1e-8);
  r.push_back(rb);

  ProblemSpec ts;
  ts.name = "tutorial_sqrt";
  ts.n = 2;
  ts.m_ineq = 2;
  ts.description = "sqrt(x2) subject to two cubic inequality constraints (a = (2,-1), b = (0,1))";
  ts.reference = ReferenceSolution{{1.0 / 3.0, 8.0 / 27.0}, std::sqrt(8.0 / 27.0),
                                   "both cubic constraints active: 2 x1 = 1 - x1"};
  ts.default_options = options(Algorithm::cobyla, 1e-8);
  r.push_back(ts);

  ProblemSpec hs;
  hs.name = "hs071";
  hs.n = 4;
  hs.m_ineq = 1;
  hs.m_eq = 1;
  hs.description = "Hock-Schittkowski problem 71 with analytic gradient and Jacobians";
  // KKT solution with x1 = 1 at its bound, both constraints active; solved to
  // 40 digits and rounded.
  hs.reference = ReferenceSolution{{1.0, 4.742999637264417, 3.821149984184874, 1.379408293172672},
                                   17.01401728915630,
                                   "KKT point: x1 at lower bound, product and sphere constraints active"};
  hs.default_options = options(Algorithm::auglag, 1e-7, 1000);
  hs.default_options.local_opts = std::make_shared<SolverOptions>(options(Algorithm::mma, 1e-7));
  r.push_back(hs);

  ProblemSpec mi;
  mi.name = "multi_ineq_2d";
  mi.n = 2;
  mi.m_ineq = 5;
  mi.description = "x1^2 + x2^2 subject to five nonlinear inequality constraints on [-50,50]^2";
  mi.reference = ReferenceSolution{{1.0, 1.0}, 2.0, "constraints 4 and 5 active"};
  mi.default_options = options(Algorithm::isres, 1e-15, 160000);
  mi.default_options.tol_constraints_ineq.assign(5, 1e-10);
  r.push_back(mi);

  return r;
}

}  // namespace detail

inline const std::vector<ProblemSpec>& list_problems() {
  static const std::vector<ProblemSpec> registry = detail::build_registry();
  return registry;
}

inline const ProblemSpec* find_problem(std::string_view name) {
  for (const auto& s : list_problems()) {
    if (s.name == name) return &s;
  }
  return nullptr;
}

/// Builds a registered problem. Only tutorial_sqrt accepts parameters:
/// "a" and "b", each of length 2.
inline Problem make_problem(std::string_view name, const Params& params = {}) {
  if (!find_problem(name))
    throw SolverError(Status::invalid_args, "unknown problem: " + std::string(name));
  if (name == "tutorial_sqrt") {
    Vector a = {2.0, -1.0};
    Vector b = {0.0, 1.0};
    for (const auto& [key, value] : params) {
      if (key != "a" && key != "b")
        throw SolverError(Status::invalid_args, "unknown parameter for tutorial_sqrt: " + key);
      if (value.size() != 2)
        throw SolverError(Status::invalid_args, "parameter " + key + " must have length 2");
      (key == "a" ? a : b) = value;
    }
    return tutorial_sqrt(a, b);
  }
  if (!params.empty())
    throw SolverError(Status::invalid_args, std::string(name) + " takes no parameters");
  if (name == "rosenbrock") return rosenbrock();
  if (name == "hs071") return hs071();
  return multi_ineq_2d();
}

}  // namespace ascent::problems
