#pragma once

// Evolution strategy with stochastic ranking for bound-constrained problems
// with arbitrary inequality and equality constraints. Needs no derivatives.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <vector>

#include "ascent/core.hpp"

namespace ascent {

/// Seeded generator with portable uniform and normal draws, so a run is
/// reproducible across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal by the Box-Muller transform; the second variate of each
  /// pair is kept for the next call.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double t = 2.0 * 3.14159265358979323846 * u2;
    spare_ = r * std::sin(t);
    has_spare_ = true;
    return r * std::cos(t);
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

struct RankingParams {
  double pf = 0.45;
};

struct Individual {
  Vector x;
  Vector sigma;
  double f = kInf;
  double phi = kInf;
};

struct Population {
  std::vector<Individual> individuals;
  std::size_t mu = 1;
  std::size_t generation = 0;
};

inline std::size_t isres_population_size(std::size_t n) { return 20 * (n + 1); }

inline std::size_t isres_parent_count(std::size_t lambda) {
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(static_cast<double>(lambda) / 7.0)));
}

/// Bubble-sort sweeps over adjacent pairs. A pair is compared by f when both
/// members are feasible or when a uniform draw falls below pf, by phi
/// otherwise, with equal phi falling back to f. One draw is consumed per
/// comparison. Returns indices, best first.
inline std::vector<std::size_t> stochastic_rank(std::span<const double> f, std::span<const double> phi,
                                                const RankingParams& params, Rng& rng) {
  const std::size_t lambda = f.size();
  std::vector<std::size_t> order(lambda);
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (std::size_t sweep = 0; sweep < lambda; ++sweep) {
    bool swapped = false;
    for (std::size_t j = 0; j + 1 < lambda; ++j) {
      const std::size_t a = order[j];
      const std::size_t b = order[j + 1];
      const double u = rng.uniform();
      const bool by_objective = (phi[a] == 0.0 && phi[b] == 0.0) || u < params.pf;
      const bool swap = by_objective ? f[a] > f[b] : phi[a] > phi[b] || (phi[a] == phi[b] && f[a] > f[b]);
      if (swap) {
        std::swap(order[j], order[j + 1]);
        swapped = true;
      }
    }
    if (!swapped) break;
  }
  return order;
}

namespace detail {

/// Folds v back into [lo, hi] by mirror reflection at the bounds.
inline double reflect_into(double v, double lo, double hi) {
  if (lo == hi) return lo;
  const double w = hi - lo;
  double t = std::fmod(v - lo, 2.0 * w);
  if (t < 0.0) t += 2.0 * w;
  if (t > w) t = 2.0 * w - t;
  return std::clamp(lo + t, lo, hi);
}

inline bool isres_better(double f_a, double phi_a, double f_b, double phi_b) {
  return phi_a < phi_b || (phi_a == phi_b && f_a < f_b);
}

}  // namespace detail

inline constexpr double kIsresGamma = 0.85;
inline constexpr double kIsresAlpha = 0.2;
inline constexpr double kIsresResolution = 8.0 * std::numeric_limits<double>::epsilon();

inline SolveResult minimize_isres(const Validated& v, RankingParams params = {}) {
  const Problem& p = v.problem;
  const SolverOptions& opts = v.options;
  const std::size_t n = p.n;
  EvaluationLedger ledger(opts.maxeval, NanPolicy::as_infinity);
  Rng rng(opts.seed);

  const std::size_t lambda = isres_population_size(n);
  const double tau = 1.0 / std::sqrt(2.0 * std::sqrt(static_cast<double>(n)));
  const double tau_prime = 1.0 / std::sqrt(2.0 * static_cast<double>(n));

  Population pop;
  pop.mu = isres_parent_count(lambda);
  pop.individuals.resize(lambda);
  for (std::size_t k = 0; k < lambda; ++k) {
    Individual& ind = pop.individuals[k];
    ind.x.resize(n);
    ind.sigma.resize(n);
    for (std::size_t j = 0; j < n; ++j) {
      ind.x[j] = k == 0 ? p.x0[j] : rng.uniform(p.lower[j], p.upper[j]);
      ind.sigma[j] = (p.upper[j] - p.lower[j]) / std::sqrt(static_cast<double>(n));
    }
  }

  Individual best;
  auto evaluate = [&](Individual& ind) {
    ind.f = ledger.objective(p, ind.x);
    Vector g = p.m_ineq > 0 ? ledger.inequality(p, ind.x) : Vector{};
    Vector h = p.m_eq > 0 ? ledger.equality(p, ind.x) : Vector{};
    ind.phi = constraint_violation(g, h, opts.tol_constraints_ineq, opts.tol_constraints_eq);
    if (std::isnan(ind.phi)) ind.phi = kInf;
    if (best.x.empty() || detail::isres_better(ind.f, ind.phi, best.f, best.phi)) best = ind;
  };
  auto finish = [&](Status s) {
    return detail::make_result(v, s, best.x.empty() ? p.x0 : best.x, best.f, pop.generation, ledger);
  };

  try {
    for (;;) {
      for (Individual& ind : pop.individuals) evaluate(ind);
      ++pop.generation;
      detail::trace(opts, "isres", pop.generation, best.f, best.x);

      Vector f(lambda), phi(lambda);
      for (std::size_t k = 0; k < lambda; ++k) {
        f[k] = pop.individuals[k].f;
        phi[k] = pop.individuals[k].phi;
      }
      const std::vector<std::size_t> rank = stochastic_rank(f, phi, params, rng);
      std::vector<Individual> parents(pop.mu);
      for (std::size_t k = 0; k < pop.mu; ++k) parents[k] = pop.individuals[rank[k]];

      // Parent spread below the x-tolerance means the search has collapsed. A
      // tolerance within a few ulps of x cannot tell convergence from step
      // sizes that have underflowed relative to x, so it is not honoured.
      bool collapsed = opts.xtol_rel > 0.0 || opts.xtol_abs > 0.0;
      for (std::size_t j = 0; j < n && collapsed; ++j) {
        const double ref = parents[0].x[j];
        const double tol = opts.xtol_rel * std::abs(ref) + opts.xtol_abs;
        if (tol < kIsresResolution * std::abs(ref)) collapsed = false;
        for (std::size_t k = 1; k < pop.mu && collapsed; ++k)
          collapsed = std::abs(parents[k].x[j] - ref) <= tol;
      }
      if (collapsed && pop.mu > 1) return finish(Status::xtol_reached);

      for (std::size_t k = 0; k < lambda; ++k) {
        const Individual& parent = parents[k % pop.mu];
        Individual& child = pop.individuals[k];
        const double global = tau_prime * rng.normal();
        Vector sigma_new(n);
        for (std::size_t j = 0; j < n; ++j)
          sigma_new[j] = parent.sigma[j] * std::exp(global + tau * rng.normal());

        child.x.resize(n);
        if (k + 1 < pop.mu) {
          const Individual& next = parents[k + 1];
          for (std::size_t j = 0; j < n; ++j)
            child.x[j] = parent.x[j] + kIsresGamma * (parents[0].x[j] - next.x[j]);
        } else {
          for (std::size_t j = 0; j < n; ++j) child.x[j] = parent.x[j] + sigma_new[j] * rng.normal();
        }
        child.sigma.resize(n);
        for (std::size_t j = 0; j < n; ++j) {
          child.x[j] = detail::reflect_into(child.x[j], p.lower[j], p.upper[j]);
          child.sigma[j] = parent.sigma[j] + kIsresAlpha * (sigma_new[j] - parent.sigma[j]);
        }
      }
    }
  } catch (const BudgetExhausted&) {
    return finish(Status::maxeval_reached);
  }
}

}  // namespace ascent
