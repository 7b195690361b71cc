#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

#include "ascent/cli.hpp"

using namespace ascent;
using namespace ascent::cli;

namespace {

RunConfig parse(const std::string& line) {
  std::istringstream in(line);
  std::vector<std::string> args;
  for (std::string tok; in >> tok;) args.push_back(tok);
  return parse_args(args);
}

int usage_exit(const std::string& line, std::string* message = nullptr) {
  try {
    parse(line);
  } catch (const UsageError& e) {
    if (message) *message = e.what();
    return e.exit_code();
  }
  return 0;
}

struct Captured {
  int exit_code;
  std::string out, err;
};

Captured run_line(const std::string& line) {
  std::istringstream in(line);
  std::vector<std::string> args = {"ascent"};
  for (std::string tok; in >> tok;) args.push_back(tok);
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int rc = cli::main(static_cast<int>(argv.size()), argv.data(), out, err);
  return {rc, out.str(), err.str()};
}

SolveResult synthetic_result() {
  SolveResult r;
  r.status = Status::xtol_reached;
  r.x_opt = {1.0, 4.742999637264417, 3.821149984184874, 1.379408293172672};
  r.f_opt = 17.01401728915630;
  r.iterations = 12;
  r.evaluations = 537;
  r.termination = "xtol_rel: 1e-07 maxeval: 1000";
  r.m_ineq = 1;
  r.m_eq = 1;
  return r;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

TEST(ParseArgs, Hs071Run) {
  const RunConfig c = parse("--problem hs071 --algorithm auglag --local-algorithm mma --xtol-rel 1e-7 --maxeval 1000");
  EXPECT_EQ(c.problem, "hs071");
  EXPECT_EQ(c.algorithm, Algorithm::auglag);
  EXPECT_EQ(c.local_algorithm, Algorithm::mma);
  EXPECT_EQ(c.xtol_rel, 1e-7);
  EXPECT_EQ(c.maxeval, 1000u);
  EXPECT_EQ(c.format, OutputFormat::text);
  EXPECT_FALSE(c.check_derivatives);
  const SolverOptions o = build_options(c);
  ASSERT_TRUE(o.local_opts);
  EXPECT_EQ(o.local_opts->algorithm, Algorithm::mma);
}

TEST(ParseArgs, ProblemDefaults) {
  const RunConfig c = parse("--problem rosenbrock");
  EXPECT_EQ(c.algorithm, Algorithm::lbfgs);
  EXPECT_EQ(c.xtol_rel, 1e-8);
  EXPECT_FALSE(c.local_algorithm.has_value());
  const RunConfig h = parse("--problem hs071");
  EXPECT_EQ(h.local_algorithm, Algorithm::mma);
}

TEST(ParseArgs, UnknownProblem) {
  std::string msg;
  EXPECT_EQ(usage_exit("--problem nope", &msg), 2);
  EXPECT_NE(msg.find("nope"), std::string::npos);
}

TEST(ParseArgs, UsageErrors) {
  std::string msg;
  EXPECT_EQ(usage_exit("--algorithm lbfgs"), 2);
  EXPECT_EQ(usage_exit("--problem rosenbrock --xtol-rel abc", &msg), 2);
  EXPECT_NE(msg.find("abc"), std::string::npos);
  EXPECT_EQ(usage_exit("--problem rosenbrock --algorithm simplex", &msg), 2);
  EXPECT_NE(msg.find("simplex"), std::string::npos);
  EXPECT_EQ(usage_exit("--problem rosenbrock --frobnicate 3"), 2);
  EXPECT_EQ(usage_exit("--problem rosenbrock --maxeval 12x"), 2);
  EXPECT_EQ(usage_exit("--problem rosenbrock --x0 1,zz"), 2);
  EXPECT_EQ(usage_exit("--problem rosenbrock --format yaml"), 2);
}

TEST(ParseArgs, RenderRoundTrip) {
  std::mt19937_64 gen(127);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const std::vector<std::string> names = {"rosenbrock", "tutorial_sqrt", "hs071", "multi_ineq_2d"};
  const std::vector<Algorithm> algos = {Algorithm::lbfgs, Algorithm::cobyla, Algorithm::mma, Algorithm::auglag,
                                        Algorithm::isres};
  for (int trial = 0; trial < 300; ++trial) {
    RunConfig c;
    c.problem = names[gen() % names.size()];
    c.algorithm = algos[gen() % algos.size()];
    c.xtol_rel = u(gen) < 0.2 ? 0.0 : std::pow(10.0, -12.0 * u(gen)) * u(gen);
    c.xtol_abs = u(gen) < 0.5 ? 0.0 : u(gen) * 1e-9;
    if (u(gen) < 0.7) c.maxeval = 1 + gen() % 1000000;
    c.seed = gen();
    c.print_level = static_cast<int>(gen() % 3);
    if (c.algorithm == Algorithm::auglag) {
      c.local_algorithm = algos[gen() % 3];
      c.local_xtol_rel = u(gen) * 1e-6;
    }
    if (u(gen) < 0.5) {
      const std::size_t n = problems::find_problem(c.problem)->n;
      Vector x0(n);
      for (double& v : x0) v = (u(gen) - 0.5) * std::pow(10.0, 6.0 * u(gen));
      c.x0_override = x0;
    }
    c.format = u(gen) < 0.5 ? OutputFormat::text : OutputFormat::json;
    c.check_derivatives = u(gen) < 0.2;
    // Valid configs are fully resolved, as parse_args leaves them.
    if (c.maxeval == std::nullopt) c.maxeval = problems::find_problem(c.problem)->default_options.maxeval;
    const RunConfig back = parse_args(render_args(c));
    EXPECT_TRUE(back == c) << "trial " << trial;
  }
}

TEST(Run, RosenbrockDefault) {
  const Captured r = run_line("--problem rosenbrock");
  EXPECT_EQ(r.exit_code, 0) << r.err;
  EXPECT_NE(r.out.find("Optimal value of controls: 1 1\n"), std::string::npos) << r.out;
}

TEST(Run, MultiInequalityReportsMaxeval) {
  const Captured r = run_line("--problem multi_ineq_2d --maxeval 160000 --seed 1");
  EXPECT_EQ(r.exit_code, 0) << r.err;
  EXPECT_NE(r.out.find("Solver status: 5 ( MAXEVAL_REACHED"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("Number of Iterations....: 160000\n"), std::string::npos);
}

TEST(Run, Hs071CheckDerivatives) {
  const Captured r = run_line("--problem hs071 --check-derivatives");
  EXPECT_EQ(r.exit_code, 0) << r.err;
  EXPECT_NE(r.out.find("Result: passed"), std::string::npos) << r.out;
  const Captured j = run_line("--problem hs071 --check-derivatives --format json");
  EXPECT_EQ(j.exit_code, 0);
  EXPECT_TRUE(nlohmann::json::parse(j.out).at("passed").get<bool>());
}

TEST(Run, CheckDerivativesWithoutDerivatives) {
  const Captured r = run_line("--problem tutorial_sqrt --check-derivatives");
  EXPECT_EQ(r.exit_code, 1);
  EXPECT_FALSE(r.err.empty());
}

TEST(Run, Hs071ReportLines) {
  const Captured r = run_line("--problem hs071 --algorithm auglag --local-algorithm mma --xtol-rel 1e-7 --maxeval 1000");
  EXPECT_EQ(r.exit_code, 0) << r.err;
  EXPECT_NE(r.out.find("Number of equality constraints: 1\n"), std::string::npos);
  EXPECT_NE(r.out.find("Number of inequality constraints: 1\n"), std::string::npos);
  EXPECT_NE(r.out.find("Optimal value of objective function: 17.01401728"), std::string::npos) << r.out;
}

TEST(Run, SolverFailureExitsOne) {
  // lbfgs cannot take hs071's constraints.
  const Captured r = run_line("--problem hs071 --algorithm lbfgs");
  EXPECT_EQ(r.exit_code, 1);
  EXPECT_NE(r.err.find("INVALID_ARGS"), std::string::npos) << r.err;
  EXPECT_NE(r.out.find("Solver status: -1"), std::string::npos);
}

TEST(Run, ExitCodeFollowsStatusSign) {
  for (const char* line : {"--problem rosenbrock --maxeval 3", "--problem tutorial_sqrt", "--problem hs071 --maxeval 50",
                           "--problem tutorial_sqrt --algorithm mma", "--problem rosenbrock --x0 1,2,3"}) {
    const Captured r = run_line(line);
    RunConfig c = parse(line);
    c.format = OutputFormat::json;
    std::ostringstream out, err;
    const int rc = run(c, out, err);
    const int status = nlohmann::json::parse(out.str()).at("status_code").get<int>();
    EXPECT_EQ(rc == 0, status > 0) << line;
    EXPECT_EQ(r.exit_code, rc) << line;
  }
}

TEST(Report, GoldenText) {
  const std::string expected = read_file(std::string(ASCENT_GOLDEN_DIR) + "/report_text.txt");
  ASSERT_FALSE(expected.empty());
  EXPECT_EQ(format_text(synthetic_result(), "0.1.0"), expected);
}

TEST(Report, FifteenDigits) {
  SolveResult r = synthetic_result();
  r.f_opt = 17.014017291835;
  EXPECT_NE(format_text(r).find("Optimal value of objective function: 17.014017291835\n"), std::string::npos);
}

TEST(Report, JsonRoundTrip) {
  std::mt19937_64 gen(131);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  RunConfig c = parse("--problem hs071 --format json");
  for (int trial = 0; trial < 200; ++trial) {
    SolveResult r = synthetic_result();
    r.status = *status_from_code(std::vector<int>{1, 3, 4, 5, -1, -2}[gen() % 6]);
    for (double& v : r.x_opt) v = u(gen) * std::pow(10.0, 300.0 * u(gen));
    r.f_opt = trial == 0 ? kInf : u(gen) * std::pow(10.0, 20.0 * u(gen));
    r.iterations = gen() % 100000;
    r.evaluations = gen() % 100000;
    const std::string text = format_report(r, c);
    const SolveResult back = result_from_json(nlohmann::json::parse(text));
    EXPECT_EQ(back.status, r.status);
    EXPECT_EQ(back.x_opt, r.x_opt);
    EXPECT_EQ(back.f_opt, r.f_opt);
    EXPECT_EQ(back.iterations, r.iterations);
    EXPECT_EQ(back.evaluations, r.evaluations);
    EXPECT_EQ(back.termination, r.termination);
    EXPECT_EQ(back.m_ineq, r.m_ineq);
    EXPECT_EQ(back.m_eq, r.m_eq);
  }
  const nlohmann::json j = to_json(synthetic_result(), c);
  for (const char* key : {"status_code", "status_name", "x_opt", "f_opt", "iterations", "evaluations", "termination",
                          "m_ineq", "m_eq", "problem", "algorithm", "seed"})
    EXPECT_TRUE(j.contains(key)) << key;
}

TEST(Binary, ExitCodes) {
  auto exit_of = [](const std::string& args) {
    const std::string cmd = std::string(ASCENT_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  };
  EXPECT_EQ(exit_of("--problem rosenbrock"), 0);
  EXPECT_EQ(exit_of("--problem nope"), 2);
  EXPECT_EQ(exit_of(""), 2);
  EXPECT_EQ(exit_of("--problem hs071 --algorithm lbfgs"), 1);
  EXPECT_EQ(exit_of("--help"), 0);
}
