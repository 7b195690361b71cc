#pragma once

// Command-line runner: argument parsing, report formatting and the run loop
// behind tools/ascent_main.cpp.

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ascent/core.hpp"
#include "ascent/gradcheck.hpp"
#include "ascent/isres.hpp"
#include "ascent/problems.hpp"
#include "ascent/solve.hpp"

namespace ascent::cli {

inline constexpr const char* kVersion = "0.1.0";

enum class OutputFormat { text, json };

struct RunConfig {
  std::string problem;
  problems::Params params;
  Algorithm algorithm = Algorithm::lbfgs;
  double xtol_rel = 0.0;
  double xtol_abs = 0.0;
  std::optional<std::size_t> maxeval;
  std::uint64_t seed = 0;
  int print_level = 0;
  std::optional<Algorithm> local_algorithm;  // set iff algorithm is auglag
  std::optional<double> local_xtol_rel;
  std::optional<Vector> x0_override;
  OutputFormat format = OutputFormat::text;
  bool check_derivatives = false;

  bool operator==(const RunConfig&) const = default;
};

/// Bad command line. exit_code is 2, or 0 when help was requested.
class UsageError : public std::runtime_error {
 public:
  UsageError(const std::string& what, int exit_code = 2) : std::runtime_error(what), exit_code_(exit_code) {}
  int exit_code() const { return exit_code_; }

 private:
  int exit_code_;
};

namespace detail {

inline double parse_real(const std::string& token, const std::string& flag) {
  const char* begin = token.c_str();
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(begin, &end);
  if (token.empty() || end != begin + token.size() || errno == ERANGE || !std::isfinite(v))
    throw UsageError(flag + ": not a number: " + token);
  return v;
}

inline Vector parse_vector(const std::string& text, const std::string& flag) {
  Vector out;
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, ',')) out.push_back(parse_real(item, flag));
  if (out.empty() || (!text.empty() && text.back() == ','))
    throw UsageError(flag + ": expected comma-separated reals: " + text);
  return out;
}

inline Algorithm parse_algorithm_or_throw(const std::string& token, const std::string& flag) {
  auto a = parse_algorithm(token);
  if (!a) throw UsageError(flag + ": unknown algorithm: " + token);
  return *a;
}

/// Shortest decimal form that reads back to the same double.
inline std::string exact_real(double v) {
  char buf[64];
  for (int prec = 1; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

}  // namespace detail

inline RunConfig parse_args(const std::vector<std::string>& args) {
  CLI::App app{"Solve a built-in optimization problem", "ascent"};
  std::string problem, algorithm, local_algorithm, x0, format = "text";
  std::optional<std::string> xtol_rel, xtol_abs, local_xtol_rel;
  std::optional<std::size_t> maxeval;
  std::optional<std::uint64_t> seed;
  int print_level = 0;
  bool check = false;

  app.add_option("--problem", problem, "built-in problem name")->required();
  app.add_option("--algorithm", algorithm, "lbfgs, cobyla, mma, auglag or isres");
  app.add_option("--xtol-rel", xtol_rel, "relative x tolerance");
  app.add_option("--xtol-abs", xtol_abs, "absolute x tolerance");
  app.add_option("--maxeval", maxeval, "objective evaluation budget")->check(CLI::PositiveNumber);
  app.add_option("--seed", seed, "random seed for isres and derivative sampling");
  app.add_option("--local-algorithm", local_algorithm, "local solver for auglag");
  app.add_option("--local-xtol-rel", local_xtol_rel, "relative x tolerance of the local solver");
  app.add_option("--x0", x0, "comma-separated starting point");
  app.add_option("--format", format, "text or json")->check(CLI::IsMember({"text", "json"}));
  app.add_option("--print-level", print_level, "trace verbosity (0 = silent)")->check(CLI::NonNegativeNumber);
  app.add_flag("--check-derivatives", check, "compare analytic derivatives with finite differences");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    throw UsageError(app.help(), 0);
  } catch (const CLI::ParseError& e) {
    throw UsageError(e.what());
  }

  const problems::ProblemSpec* spec = problems::find_problem(problem);
  if (!spec) throw UsageError("--problem: unknown problem: " + problem);
  const SolverOptions& defaults = spec->default_options;

  RunConfig c;
  c.problem = problem;
  c.algorithm = algorithm.empty() ? defaults.algorithm : detail::parse_algorithm_or_throw(algorithm, "--algorithm");
  c.xtol_rel = xtol_rel ? detail::parse_real(*xtol_rel, "--xtol-rel") : defaults.xtol_rel;
  c.xtol_abs = xtol_abs ? detail::parse_real(*xtol_abs, "--xtol-abs") : defaults.xtol_abs;
  if (c.xtol_rel < 0.0 || c.xtol_abs < 0.0) throw UsageError("x tolerances must be nonnegative");
  c.maxeval = maxeval ? maxeval : defaults.maxeval;
  c.seed = seed.value_or(defaults.seed);
  c.print_level = print_level;
  if (c.algorithm == Algorithm::auglag) {
    const SolverOptions* local = defaults.local_opts.get();
    c.local_algorithm = !local_algorithm.empty()
                            ? detail::parse_algorithm_or_throw(local_algorithm, "--local-algorithm")
                            : (local ? local->algorithm : Algorithm::mma);
    c.local_xtol_rel = local_xtol_rel ? detail::parse_real(*local_xtol_rel, "--local-xtol-rel")
                                      : (local ? local->xtol_rel : c.xtol_rel);
  } else if (!local_algorithm.empty()) {
    detail::parse_algorithm_or_throw(local_algorithm, "--local-algorithm");
  }
  if (!x0.empty()) c.x0_override = detail::parse_vector(x0, "--x0");
  c.format = format == "json" ? OutputFormat::json : OutputFormat::text;
  c.check_derivatives = check;
  return c;
}

inline RunConfig parse_args(int argc, const char* const* argv) {
  return parse_args(std::vector<std::string>(argv + 1, argv + argc));
}

/// Arguments that parse back to `c`. Every resolved field is spelled out.
inline std::vector<std::string> render_args(const RunConfig& c) {
  std::vector<std::string> a = {"--problem", c.problem, "--algorithm", std::string(to_string(c.algorithm)),
                                "--xtol-rel", detail::exact_real(c.xtol_rel), "--xtol-abs",
                                detail::exact_real(c.xtol_abs), "--seed", std::to_string(c.seed),
                                "--print-level", std::to_string(c.print_level)};
  if (c.maxeval) a.insert(a.end(), {"--maxeval", std::to_string(*c.maxeval)});
  if (c.local_algorithm) a.insert(a.end(), {"--local-algorithm", std::string(to_string(*c.local_algorithm))});
  if (c.local_xtol_rel) a.insert(a.end(), {"--local-xtol-rel", detail::exact_real(*c.local_xtol_rel)});
  if (c.x0_override) {
    std::string s;
    for (double v : *c.x0_override) s += (s.empty() ? "" : ",") + detail::exact_real(v);
    a.push_back("--x0=" + s);
  }
  if (c.format == OutputFormat::json) a.insert(a.end(), {"--format", "json"});
  if (c.check_derivatives) a.push_back("--check-derivatives");
  return a;
}

/// Solver options for a run: the problem's defaults with the config applied.
inline SolverOptions build_options(const RunConfig& c) {
  const problems::ProblemSpec* spec = problems::find_problem(c.problem);
  if (!spec) throw UsageError("unknown problem: " + c.problem);
  SolverOptions o = spec->default_options;
  o.algorithm = c.algorithm;
  o.xtol_rel = c.xtol_rel;
  o.xtol_abs = c.xtol_abs;
  o.maxeval = c.maxeval;
  o.seed = c.seed;
  o.print_level = c.print_level;
  o.local_opts = nullptr;
  if (c.algorithm == Algorithm::auglag) {
    SolverOptions local;
    local.algorithm = c.local_algorithm.value_or(Algorithm::mma);
    local.xtol_rel = c.local_xtol_rel.value_or(c.xtol_rel);
    local.print_level = c.print_level;
    o.local_opts = std::make_shared<SolverOptions>(local);
  }
  return o;
}

inline std::string format_text(const SolveResult& r, std::string_view version = kVersion) {
  std::string s;
  char buf[128];
  s += "\n";
  s += "Minimization using ascent-kit version " + std::string(version) + "\n";
  s += "\n";
  s += "Solver status: " + std::to_string(code(r.status)) + " ( " + std::string(status_name(r.status)) +
       ": " + std::string(status_message(r.status)) + " )\n";
  s += "\n";
  s += "Number of Iterations....: " + std::to_string(r.evaluations) + "\n";
  s += "Termination conditions: " + r.termination + "\n";
  s += "Number of inequality constraints: " + std::to_string(r.m_ineq) + "\n";
  s += "Number of equality constraints: " + std::to_string(r.m_eq) + "\n";
  std::snprintf(buf, sizeof buf, "%.15g", r.f_opt);
  s += "Optimal value of objective function: " + std::string(buf) + "\n";
  s += "Optimal value of controls:";
  for (double v : r.x_opt) {
    std::snprintf(buf, sizeof buf, " %.7g", v);
    s += buf;
  }
  s += "\n";
  return s;
}

inline nlohmann::json to_json(const SolveResult& r, const RunConfig& c) {
  nlohmann::json j;
  j["status_code"] = code(r.status);
  j["status_name"] = std::string(status_name(r.status));
  j["x_opt"] = r.x_opt;
  j["f_opt"] = std::isfinite(r.f_opt) ? nlohmann::json(r.f_opt) : nlohmann::json(nullptr);
  j["iterations"] = r.iterations;
  j["evaluations"] = r.evaluations;
  j["termination"] = r.termination;
  j["m_ineq"] = r.m_ineq;
  j["m_eq"] = r.m_eq;
  j["problem"] = c.problem;
  j["algorithm"] = std::string(to_string(c.algorithm));
  j["seed"] = c.seed;
  return j;
}

/// Inverse of to_json for the result fields. A null f_opt reads as +inf.
inline SolveResult result_from_json(const nlohmann::json& j) {
  SolveResult r;
  auto status = status_from_code(j.at("status_code").get<int>());
  if (!status) throw std::invalid_argument("unknown status code in report");
  r.status = *status;
  r.x_opt = j.at("x_opt").get<Vector>();
  r.f_opt = j.at("f_opt").is_null() ? kInf : j.at("f_opt").get<double>();
  r.iterations = j.at("iterations").get<std::size_t>();
  r.evaluations = j.at("evaluations").get<std::size_t>();
  r.termination = j.at("termination").get<std::string>();
  r.m_ineq = j.at("m_ineq").get<std::size_t>();
  r.m_eq = j.at("m_eq").get<std::size_t>();
  return r;
}

inline std::string format_report(const SolveResult& r, const RunConfig& c, std::string_view version = kVersion) {
  if (c.format == OutputFormat::json) return to_json(r, c).dump(2) + "\n";
  return format_text(r, version);
}

/// Sample points for --check-derivatives: uniform in the box, or within 2 of
/// x0 along unbounded coordinates.
inline std::vector<Vector> derivative_points(const Problem& p, std::size_t count, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Vector> pts(count, Vector(p.n));
  for (Vector& x : pts) {
    for (std::size_t i = 0; i < p.n; ++i) {
      double lo = p.lower.empty() ? -kInf : p.lower[i];
      double hi = p.upper.empty() ? kInf : p.upper[i];
      if (!std::isfinite(lo)) lo = p.x0[i] - 2.0;
      if (!std::isfinite(hi)) hi = p.x0[i] + 2.0;
      x[i] = rng.uniform(lo, hi);
    }
  }
  return pts;
}

inline constexpr double kDerivativeTol = 1e-6;

inline int run(const RunConfig& c, std::ostream& out, std::ostream& err) {
  Problem p;
  try {
    p = problems::make_problem(c.problem, c.params);
  } catch (const SolverError& e) {
    err << e.what() << "\n";
    return 2;
  }
  if (c.x0_override) p.x0 = *c.x0_override;

  if (c.check_derivatives) {
    const bool any = p.has_gradient || p.inequality_has_jacobian || p.equality_has_jacobian;
    if (!any) {
      err << "problem " << c.problem << " supplies no analytic derivatives\n";
      return 1;
    }
    if (p.x0.size() != p.n) {
      err << "x0 has wrong dimension\n";
      return 1;
    }
    const auto points = derivative_points(p, 20, c.seed);
    DerivativeReport rep;
    try {
      rep = check_derivatives(p, points, kDerivativeTol);
    } catch (const std::exception& e) {
      err << e.what() << "\n";
      return 1;
    }
    if (c.format == OutputFormat::json) {
      nlohmann::json j;
      j["problem"] = c.problem;
      j["points"] = points.size();
      j["max_abs_error"] = rep.max_abs_error;
      j["max_rel_error"] = rep.max_rel_error;
      j["worst_component"] = {rep.worst_component.first, rep.worst_component.second};
      j["passed"] = rep.passed;
      out << j.dump(2) << "\n";
    } else {
      char buf[256];
      std::snprintf(buf, sizeof buf,
                    "Derivative check for %s at %zu points\n"
                    "Max absolute error: %.6g\n"
                    "Max relative error: %.6g\n"
                    "Worst component: row %zu, column %zu\n"
                    "Result: %s\n",
                    c.problem.c_str(), points.size(), rep.max_abs_error, rep.max_rel_error,
                    rep.worst_component.first, rep.worst_component.second, rep.passed ? "passed" : "FAILED");
      out << buf;
    }
    return rep.passed ? 0 : 1;
  }

  const SolveResult r = minimize(p, build_options(c));
  out << format_report(r, c);
  if (code(r.status) < 0) {
    err << status_name(r.status) << ": " << (r.message.empty() ? std::string(status_message(r.status)) : r.message)
        << "\n";
    return 1;
  }
  return 0;
}

/// Process entry: parse, run, and map usage errors to exit code 2.
inline int main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  RunConfig c;
  try {
    c = parse_args(argc, argv);
  } catch (const UsageError& e) {
    (e.exit_code() == 0 ? out : err) << e.what() << (e.exit_code() == 0 ? "" : "\n");
    return e.exit_code();
  }
  return run(c, out, err);
}

}  // namespace ascent::cli
