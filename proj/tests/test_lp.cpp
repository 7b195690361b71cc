#include <gtest/gtest.h>

#include <optional>
#include <random>

#include "ascent/linalg.hpp"
#include "ascent/lp.hpp"

using namespace ascent;

namespace {

// Enumerates every basic point: n constraints (rows or z_j >= 0) held with
// equality, keeping the feasible ones. Returns the best objective.
std::optional<double> vertex_oracle(const Vector& c, const std::vector<Vector>& rows, const Vector& b) {
  const std::size_t n = c.size();
  std::vector<Vector> all = rows;
  Vector rhs = b;
  for (std::size_t j = 0; j < n; ++j) {
    Vector r(n, 0.0);
    r[j] = -1.0;
    all.push_back(r);
    rhs.push_back(0.0);
  }
  const std::size_t total = all.size();
  std::optional<double> best;
  std::vector<std::size_t> pick(n);
  auto visit = [&](auto&& self, std::size_t start, std::size_t depth) -> void {
    if (depth == n) {
      linalg::Matrix m(n);
      Vector r(n);
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) m(i, j) = all[pick[i]][j];
        r[i] = rhs[pick[i]];
      }
      linalg::LU lu(m);
      if (lu.singular()) return;
      const Vector z = lu.solve(r);
      for (std::size_t k = 0; k < total; ++k)
        if (linalg::dot(all[k], z) > rhs[k] + 1e-9) return;
      const double v = linalg::dot(c, z);
      if (!best || v < *best) best = v;
      return;
    }
    for (std::size_t k = start; k < total; ++k) {
      pick[depth] = k;
      self(self, k + 1, depth + 1);
    }
  };
  visit(visit, 0, 0);
  return best;
}

}  // namespace

TEST(Lp, TextbookMaximization) {
  // max 3z0 + 5z1 s.t. z0 <= 4, 2 z1 <= 12, 3z0 + 2z1 <= 18.
  const lp::LpResult r = lp::solve(Vector{-3.0, -5.0}, {{1.0, 0.0}, {0.0, 2.0}, {3.0, 2.0}}, Vector{4.0, 12.0, 18.0});
  ASSERT_EQ(r.status, lp::LpStatus::optimal);
  EXPECT_NEAR(r.z[0], 2.0, 1e-12);
  EXPECT_NEAR(r.z[1], 6.0, 1e-12);
  EXPECT_NEAR(r.objective, -36.0, 1e-12);
}

TEST(Lp, NegativeRightHandSideNeedsPhaseOne) {
  // min z0 + z1 s.t. z0 + z1 >= 2, z0 <= 5.
  const lp::LpResult r = lp::solve(Vector{1.0, 1.0}, {{-1.0, -1.0}, {1.0, 0.0}}, Vector{-2.0, 5.0});
  ASSERT_EQ(r.status, lp::LpStatus::optimal);
  EXPECT_NEAR(r.objective, 2.0, 1e-12);
}

TEST(Lp, Infeasible) {
  const lp::LpResult r = lp::solve(Vector{1.0}, {{1.0}, {-1.0}}, Vector{1.0, -2.0});
  EXPECT_EQ(r.status, lp::LpStatus::infeasible);
}

TEST(Lp, Unbounded) {
  const lp::LpResult r = lp::solve(Vector{-1.0, 0.0}, {{0.0, 1.0}}, Vector{1.0});
  EXPECT_EQ(r.status, lp::LpStatus::unbounded);
}

TEST(Lp, MatchesVertexEnumeration) {
  std::mt19937_64 gen(101);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  int optimal = 0;
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 2 + trial % 3;
    const std::size_t m = 2 + trial % 4;
    Vector c(n);
    for (double& v : c) v = u(gen);
    std::vector<Vector> rows;
    Vector b;
    for (std::size_t i = 0; i < m; ++i) {
      Vector r(n);
      for (double& v : r) v = u(gen);
      rows.push_back(r);
      b.push_back(u(gen));
    }
    // Box rows keep every instance bounded.
    for (std::size_t j = 0; j < n; ++j) {
      Vector r(n, 0.0);
      r[j] = 1.0;
      rows.push_back(r);
      b.push_back(3.0);
    }
    const auto expected = vertex_oracle(c, rows, b);
    const lp::LpResult got = lp::solve(c, rows, b);
    if (!expected) {
      EXPECT_EQ(got.status, lp::LpStatus::infeasible) << "trial " << trial;
      continue;
    }
    ASSERT_EQ(got.status, lp::LpStatus::optimal) << "trial " << trial;
    ++optimal;
    EXPECT_NEAR(got.objective, *expected, 1e-9) << "trial " << trial;
    for (std::size_t i = 0; i < rows.size(); ++i) EXPECT_LE(linalg::dot(rows[i], got.z), b[i] + 1e-9);
    for (double z : got.z) EXPECT_GE(z, 0.0);
  }
  EXPECT_GT(optimal, 100);
}
