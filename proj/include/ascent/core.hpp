#pragma once

// Problem model, solver options, results and evaluation accounting shared by
// every solver in the library.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace ascent {

using Vector = std::vector<double>;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Dense row-major m x n matrix used for constraint Jacobians.
struct Jacobian {
  std::size_t rows = 0;
  std::size_t cols = 0;
  Vector data;

  Jacobian() = default;
  Jacobian(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

  double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

  std::span<double> row(std::size_t i) { return {data.data() + i * cols, cols}; }
  std::span<const double> row(std::size_t i) const { return {data.data() + i * cols, cols}; }

  void resize(std::size_t r, std::size_t c) {
    rows = r;
    cols = c;
    data.assign(r * c, 0.0);
  }
};

/// Objective callback. `gradient` is null when only the value is requested;
/// otherwise it points at a vector of length n to be filled.
using ObjectiveFn = std::function<double(std::span<const double> x, Vector* gradient)>;

/// Constraint block callback returning one value per constraint. `jacobian` is
/// null when only values are requested; otherwise it is pre-sized m x n.
using ConstraintFn = std::function<Vector(std::span<const double> x, Jacobian* jacobian)>;

/// minimize f(x) subject to g(x) <= 0, h(x) = 0, lower <= x <= upper.
struct Problem {
  std::size_t n = 0;
  ObjectiveFn objective;
  bool has_gradient = false;

  ConstraintFn inequality;  // empty: no inequality constraints
  bool inequality_has_jacobian = false;
  ConstraintFn equality;  // empty: no equality constraints
  bool equality_has_jacobian = false;

  Vector lower;  // empty means unbounded below
  Vector upper;  // empty means unbounded above
  Vector x0;

  // Filled in by validate_problem() from a probe at x0.
  std::size_t m_ineq = 0;
  std::size_t m_eq = 0;

  bool has_inequality() const { return static_cast<bool>(inequality); }
  bool has_equality() const { return static_cast<bool>(equality); }
};

enum class Algorithm { lbfgs, cobyla, mma, auglag, isres };

inline std::string_view to_string(Algorithm a) {
  switch (a) {
    case Algorithm::lbfgs: return "lbfgs";
    case Algorithm::cobyla: return "cobyla";
    case Algorithm::mma: return "mma";
    case Algorithm::auglag: return "auglag";
    case Algorithm::isres: return "isres";
  }
  return "unknown";
}

inline std::optional<Algorithm> parse_algorithm(std::string_view s) {
  for (Algorithm a : {Algorithm::lbfgs, Algorithm::cobyla, Algorithm::mma, Algorithm::auglag,
                      Algorithm::isres}) {
    if (to_string(a) == s) return a;
  }
  return std::nullopt;
}

inline bool needs_gradient(Algorithm a) { return a == Algorithm::lbfgs || a == Algorithm::mma; }

struct SolverOptions {
  Algorithm algorithm = Algorithm::lbfgs;
  double xtol_rel = 0.0;
  double xtol_abs = 0.0;
  std::optional<std::size_t> maxeval;  // nullopt: unbounded
  Vector tol_constraints_ineq;         // empty: 1e-8 each
  Vector tol_constraints_eq;           // empty: 1e-8 each
  std::shared_ptr<const SolverOptions> local_opts;  // auglag only
  int print_level = 0;
  std::uint64_t seed = 0;
};

inline constexpr double kDefaultConstraintTol = 1e-8;

enum class Status : int {
  success = 1,
  ftol_reached = 3,
  xtol_reached = 4,
  maxeval_reached = 5,
  invalid_args = -1,
  callback_failure = -2,
};

inline int code(Status s) { return static_cast<int>(s); }

inline std::string_view status_name(Status s) {
  switch (s) {
    case Status::success: return "SUCCESS";
    case Status::ftol_reached: return "FTOL_REACHED";
    case Status::xtol_reached: return "XTOL_REACHED";
    case Status::maxeval_reached: return "MAXEVAL_REACHED";
    case Status::invalid_args: return "INVALID_ARGS";
    case Status::callback_failure: return "CALLBACK_FAILURE";
  }
  return "UNKNOWN";
}

inline std::string_view status_message(Status s) {
  switch (s) {
    case Status::success: return "Stationary point found; gradient norm below threshold.";
    case Status::ftol_reached: return "Stopped because the objective change fell below ftol.";
    case Status::xtol_reached:
      return "Stopped because the step fell below xtol_rel or xtol_abs (above).";
    case Status::maxeval_reached:
      return "Stopped because the evaluation budget maxeval (above) was exhausted.";
    case Status::invalid_args: return "Invalid problem definition or solver options.";
    case Status::callback_failure: return "A user callback failed or returned non-finite values.";
  }
  return "";
}

inline std::optional<Status> status_from_code(int c) {
  for (Status s : {Status::success, Status::ftol_reached, Status::xtol_reached,
                   Status::maxeval_reached, Status::invalid_args, Status::callback_failure}) {
    if (code(s) == c) return s;
  }
  return std::nullopt;
}

struct SolveResult {
  Status status = Status::invalid_args;
  Vector x_opt;
  double f_opt = kInf;
  std::size_t iterations = 0;   // outer iterations
  std::size_t evaluations = 0;  // objective evaluations
  std::string termination;
  std::size_t m_ineq = 0;
  std::size_t m_eq = 0;
  std::string message;  // diagnostic text for failures
};

/// Error carrying the status a solver should report.
class SolverError : public std::runtime_error {
 public:
  SolverError(Status status, const std::string& what) : std::runtime_error(what), status_(status) {}
  Status status() const { return status_; }

 private:
  Status status_;
};

/// Raised by the ledger when an objective evaluation would exceed maxeval.
struct BudgetExhausted {};

enum class NanPolicy { fail, as_infinity };

/// Counts callback invocations and enforces the objective-evaluation budget.
class EvaluationLedger {
 public:
  explicit EvaluationLedger(std::optional<std::size_t> budget = std::nullopt,
                            NanPolicy nan_policy = NanPolicy::fail)
      : budget_(budget), nan_policy_(nan_policy) {}

  std::size_t n_obj() const { return n_obj_; }
  std::size_t n_grad() const { return n_grad_; }
  std::size_t n_ineq() const { return n_ineq_; }
  std::size_t n_eq() const { return n_eq_; }
  std::optional<std::size_t> budget() const { return budget_; }

  bool exhausted() const { return budget_ && n_obj_ >= *budget_; }
  std::size_t remaining() const {
    return budget_ ? *budget_ - std::min(n_obj_, *budget_) : std::numeric_limits<std::size_t>::max();
  }

  /// Objective value, and gradient when `gradient` is non-null.
  double objective(const Problem& p, std::span<const double> x, Vector* gradient = nullptr) {
    check_input(p, x);
    if (exhausted()) throw BudgetExhausted{};
    ++n_obj_;
    if (gradient) {
      ++n_grad_;
      gradient->assign(p.n, 0.0);
    }
    double f = invoke_objective(p, x, gradient);
    if (gradient) {
      if (gradient->size() != p.n)
        throw SolverError(Status::callback_failure, "objective gradient has wrong length");
      for (double g : *gradient) {
        if (!std::isfinite(g))
          throw SolverError(Status::callback_failure, "objective gradient is not finite");
      }
    }
    if (std::isnan(f)) {
      if (nan_policy_ == NanPolicy::as_infinity) return kInf;
      throw SolverError(Status::callback_failure, "objective returned NaN");
    }
    return f;
  }

  Vector inequality(const Problem& p, std::span<const double> x, Jacobian* jacobian = nullptr) {
    check_input(p, x);
    ++n_ineq_;
    return invoke_constraints(p.inequality, p.m_ineq, p.n, x, jacobian, "inequality");
  }

  Vector equality(const Problem& p, std::span<const double> x, Jacobian* jacobian = nullptr) {
    check_input(p, x);
    ++n_eq_;
    return invoke_constraints(p.equality, p.m_eq, p.n, x, jacobian, "equality");
  }

  /// Folds counts from a nested solve (auglag inner loops) into this ledger.
  void absorb(const EvaluationLedger& inner) {
    n_obj_ += inner.n_obj_;
    n_grad_ += inner.n_grad_;
    n_ineq_ += inner.n_ineq_;
    n_eq_ += inner.n_eq_;
  }

 private:
  static void check_input(const Problem& p, std::span<const double> x) {
    if (x.size() != p.n) throw SolverError(Status::invalid_args, "point has wrong dimension");
  }

  static double invoke_objective(const Problem& p, std::span<const double> x, Vector* gradient) {
    try {
      return p.objective(x, gradient);
    } catch (const SolverError&) {
      throw;
    } catch (const BudgetExhausted&) {
      throw;
    } catch (const std::exception& e) {
      throw SolverError(Status::callback_failure, std::string("objective threw: ") + e.what());
    }
  }

  Vector invoke_constraints(const ConstraintFn& fn, std::size_t m, std::size_t n,
                            std::span<const double> x, Jacobian* jacobian, const char* what) {
    if (!fn) return {};
    if (jacobian) jacobian->resize(m, n);
    Vector values;
    try {
      values = fn(x, jacobian);
    } catch (const SolverError&) {
      throw;
    } catch (const BudgetExhausted&) {
      throw;
    } catch (const std::exception& e) {
      throw SolverError(Status::callback_failure,
                        std::string(what) + " constraints threw: " + e.what());
    }
    if (values.size() != m)
      throw SolverError(Status::callback_failure,
                        std::string(what) + " constraints returned wrong number of values");
    for (double v : values) {
      if (!std::isfinite(v))
        throw SolverError(Status::callback_failure,
                          std::string(what) + " constraint value is not finite");
    }
    if (jacobian && (jacobian->rows != m || jacobian->cols != n))
      throw SolverError(Status::callback_failure,
                        std::string(what) + " Jacobian has wrong shape");
    return values;
  }

  std::optional<std::size_t> budget_;
  NanPolicy nan_policy_;
  std::size_t n_obj_ = 0;
  std::size_t n_grad_ = 0;
  std::size_t n_ineq_ = 0;
  std::size_t n_eq_ = 0;
};

/// A problem and options that passed validation.
struct Validated {
  Problem problem;
  SolverOptions options;
};

namespace detail {

inline void require(bool ok, const std::string& what) {
  if (!ok) throw SolverError(Status::invalid_args, what);
}

inline std::size_t probe(const ConstraintFn& fn, std::span<const double> x, const char* what) {
  if (!fn) return 0;
  Vector v;
  try {
    v = fn(x, nullptr);
  } catch (const std::exception& e) {
    throw SolverError(Status::callback_failure, std::string(what) + " probe threw: " + e.what());
  }
  return v.size();
}

inline void fit_tolerances(Vector& tol, std::size_t m, const char* what) {
  if (tol.empty()) {
    tol.assign(m, kDefaultConstraintTol);
    return;
  }
  require(tol.size() == m, std::string(what) + " tolerance vector does not match constraint count");
  for (double t : tol) require(t >= 0.0, std::string(what) + " tolerance must be nonnegative");
}

inline void validate_options(const SolverOptions& opts, bool nested) {
  require(opts.xtol_rel >= 0.0 && opts.xtol_abs >= 0.0, "xtol_rel/xtol_abs must be nonnegative");
  require(!opts.maxeval || *opts.maxeval > 0, "maxeval must be positive");
  require(opts.maxeval || opts.xtol_rel > 0.0 || opts.xtol_abs > 0.0,
          "no stopping criterion: set maxeval or a positive x-tolerance");
  if (opts.algorithm == Algorithm::auglag) {
    require(!nested, "auglag cannot be used as its own local solver");
    require(opts.local_opts != nullptr, "auglag requires local_opts");
  } else if (!nested) {
    require(opts.local_opts == nullptr, "local_opts is only accepted by auglag");
  }
}

}  // namespace detail

/// Checks dimensions, bounds and algorithm capabilities; clamps x0 into the
/// box and sizes constraint counts and tolerance vectors from a probe at x0.
inline Validated validate_problem(const Problem& problem, const SolverOptions& opts) {
  using detail::require;
  Validated out{problem, opts};
  Problem& p = out.problem;
  SolverOptions& o = out.options;

  require(p.n > 0, "dimension must be positive");
  require(static_cast<bool>(p.objective), "objective callback missing");
  if (p.lower.empty()) p.lower.assign(p.n, -kInf);
  if (p.upper.empty()) p.upper.assign(p.n, kInf);
  require(p.x0.size() == p.n, "x0 has wrong dimension");
  require(p.lower.size() == p.n, "lower bound has wrong dimension");
  require(p.upper.size() == p.n, "upper bound has wrong dimension");
  for (std::size_t i = 0; i < p.n; ++i) {
    require(!std::isnan(p.lower[i]) && !std::isnan(p.upper[i]), "bounds must not be NaN");
    require(p.lower[i] <= p.upper[i], "lower bound exceeds upper bound");
    require(std::isfinite(p.x0[i]), "x0 must be finite");
    p.x0[i] = std::clamp(p.x0[i], p.lower[i], p.upper[i]);
  }

  p.m_ineq = detail::probe(p.inequality, p.x0, "inequality");
  p.m_eq = detail::probe(p.equality, p.x0, "equality");
  if (p.m_ineq == 0) p.inequality = nullptr;
  if (p.m_eq == 0) p.equality = nullptr;
  if (!p.inequality) p.inequality_has_jacobian = false;
  if (!p.equality) p.equality_has_jacobian = false;

  detail::validate_options(o, false);
  detail::fit_tolerances(o.tol_constraints_ineq, p.m_ineq, "inequality");
  detail::fit_tolerances(o.tol_constraints_eq, p.m_eq, "equality");

  auto check_gradients = [&](Algorithm a) {
    if (!needs_gradient(a)) return;
    require(p.has_gradient, std::string(to_string(a)) + " requires an objective gradient");
    require(p.m_ineq == 0 || p.inequality_has_jacobian,
            std::string(to_string(a)) + " requires inequality Jacobians");
    require(p.m_eq == 0 || p.equality_has_jacobian,
            std::string(to_string(a)) + " requires equality Jacobians");
  };

  bool bounded = false;
  bool all_finite = true;
  for (std::size_t i = 0; i < p.n; ++i) {
    bounded = bounded || std::isfinite(p.lower[i]) || std::isfinite(p.upper[i]);
    all_finite = all_finite && std::isfinite(p.lower[i]) && std::isfinite(p.upper[i]);
  }

  switch (o.algorithm) {
    case Algorithm::lbfgs:
      check_gradients(Algorithm::lbfgs);
      require(p.m_ineq == 0 && p.m_eq == 0, "lbfgs does not handle constraints");
      require(!bounded, "lbfgs does not handle finite bounds");
      break;
    case Algorithm::cobyla:
      require(p.m_eq == 0, "cobyla does not handle equality constraints");
      break;
    case Algorithm::mma:
      check_gradients(Algorithm::mma);
      require(p.m_eq == 0, "mma does not handle equality constraints");
      break;
    case Algorithm::isres:
      require(all_finite, "isres requires finite bounds on every variable");
      break;
    case Algorithm::auglag: {
      const SolverOptions& local = *o.local_opts;
      detail::validate_options(local, true);
      check_gradients(local.algorithm);
      require(local.algorithm != Algorithm::isres, "isres cannot serve as the auglag local solver");
      if (local.algorithm == Algorithm::lbfgs) {
        require(!bounded, "lbfgs local solver does not handle finite bounds");
      }
      break;
    }
  }
  return out;
}

/// Componentwise step test |x_new - x_prev| <= xtol_rel |x_new| + xtol_abs,
/// with the evaluation budget taking precedence.
inline std::optional<Status> should_stop(std::span<const double> x_prev,
                                         std::span<const double> x_new, const SolverOptions& opts,
                                         const EvaluationLedger& ledger) {
  if (ledger.exhausted()) return Status::maxeval_reached;
  if (opts.xtol_rel <= 0.0 && opts.xtol_abs <= 0.0) return std::nullopt;
  for (std::size_t i = 0; i < x_new.size(); ++i) {
    if (std::abs(x_new[i] - x_prev[i]) > opts.xtol_rel * std::abs(x_new[i]) + opts.xtol_abs)
      return std::nullopt;
  }
  return Status::xtol_reached;
}

inline std::string format_g(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

/// Describes the configured stopping rules, e.g. "xtol_rel: 1e-08 maxeval: 1000".
inline std::string termination_text(const SolverOptions& opts) {
  std::string s;
  auto add = [&](const std::string& item) {
    if (!s.empty()) s += ' ';
    s += item;
  };
  if (opts.xtol_rel > 0.0) add("xtol_rel: " + format_g(opts.xtol_rel));
  if (opts.xtol_abs > 0.0) add("xtol_abs: " + format_g(opts.xtol_abs));
  if (opts.maxeval) add("maxeval: " + std::to_string(*opts.maxeval));
  return s;
}

/// Sum of constraint excess beyond per-constraint tolerances; zero iff feasible.
inline double constraint_violation(std::span<const double> g_values,
                                   std::span<const double> h_values,
                                   std::span<const double> tol_ineq,
                                   std::span<const double> tol_eq) {
  double phi = 0.0;
  for (std::size_t i = 0; i < g_values.size(); ++i) {
    double t = i < tol_ineq.size() ? tol_ineq[i] : 0.0;
    phi += std::max(0.0, g_values[i] - t);
  }
  for (std::size_t j = 0; j < h_values.size(); ++j) {
    double t = j < tol_eq.size() ? tol_eq[j] : 0.0;
    phi += std::max(0.0, std::abs(h_values[j]) - t);
  }
  return phi;
}

inline void clamp_to_bounds(std::span<double> x, std::span<const double> lower,
                            std::span<const double> upper) {
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = std::clamp(x[i], lower[i], upper[i]);
}

namespace detail {

inline void trace(const SolverOptions& opts, std::string_view solver, std::size_t iter, double f,
                  std::span<const double> x) {
  if (opts.print_level <= 0) return;
  std::fprintf(stderr, "%.*s iter %zu: f = %.10g", static_cast<int>(solver.size()), solver.data(),
               iter, f);
  if (opts.print_level > 1) {
    std::fprintf(stderr, " x =");
    for (double v : x) std::fprintf(stderr, " %.8g", v);
  }
  std::fprintf(stderr, "\n");
}

inline SolveResult make_result(const Validated& v, Status status, Vector x, double f,
                               std::size_t iterations, const EvaluationLedger& ledger) {
  SolveResult r;
  r.status = status;
  r.x_opt = std::move(x);
  r.f_opt = f;
  r.iterations = iterations;
  r.evaluations = ledger.n_obj();
  r.termination = termination_text(v.options);
  r.m_ineq = v.problem.m_ineq;
  r.m_eq = v.problem.m_eq;
  return r;
}

}  // namespace detail

}  // namespace ascent
