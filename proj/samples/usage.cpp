// Minimizes a small constrained problem through the library API:
//   min (x - 2)^2 + (y - 1)^2  s.t.  x + y <= 2,  x - y^2 = 0.

#include <cstdio>
#include <memory>

#include "ascent/ascent.hpp"

int main() {
  ascent::Problem p;
  p.n = 2;
  p.objective = [](std::span<const double> x, ascent::Vector* g) {
    if (g) {
      (*g)[0] = 2.0 * (x[0] - 2.0);
      (*g)[1] = 2.0 * (x[1] - 1.0);
    }
    return (x[0] - 2.0) * (x[0] - 2.0) + (x[1] - 1.0) * (x[1] - 1.0);
  };
  p.has_gradient = true;
  p.inequality = [](std::span<const double> x, ascent::Jacobian* jac) {
    if (jac) {
      (*jac)(0, 0) = 1.0;
      (*jac)(0, 1) = 1.0;
    }
    return ascent::Vector{x[0] + x[1] - 2.0};
  };
  p.inequality_has_jacobian = true;
  p.equality = [](std::span<const double> x, ascent::Jacobian* jac) {
    if (jac) {
      (*jac)(0, 0) = 1.0;
      (*jac)(0, 1) = -2.0 * x[1];
    }
    return ascent::Vector{x[0] - x[1] * x[1]};
  };
  p.equality_has_jacobian = true;
  p.lower = {-5.0, -5.0};
  p.upper = {5.0, 5.0};
  p.x0 = {0.5, 0.5};

  ascent::SolverOptions local;
  local.algorithm = ascent::Algorithm::mma;
  local.xtol_rel = 1e-8;

  ascent::SolverOptions opts;
  opts.algorithm = ascent::Algorithm::auglag;
  opts.xtol_rel = 1e-8;
  opts.maxeval = 5000;
  opts.local_opts = std::make_shared<ascent::SolverOptions>(local);

  const ascent::SolveResult r = ascent::minimize(p, opts);
  std::printf("status %d (%s)\n", ascent::code(r.status), std::string(ascent::status_name(r.status)).c_str());
  std::printf("f = %.10g at x = (%.8g, %.8g) after %zu evaluations\n", r.f_opt, r.x_opt[0], r.x_opt[1],
              r.evaluations);
  return ascent::code(r.status) > 0 ? 0 : 1;
}
