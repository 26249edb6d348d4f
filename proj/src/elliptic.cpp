#include "kirchhoff/elliptic.hpp"

#include <algorithm>
#include <string>

#include "kirchhoff/cg.hpp"
#include "kirchhoff/error.hpp"

namespace kirchhoff {

namespace {

double laplacian_diagonal(const Grid& grid) {
  double d = 0.0;
  for (int a = 0; a < grid.dim(); ++a) d += 2.0 / (grid.h(a) * grid.h(a));
  return d;
}

}  // namespace

LinearSolveReport solve_shifted(const Grid& grid, std::span<const double> shift, std::span<const double> rhs,
                                std::span<double> x, double tol, Preconditioner pre) {
  grid.check_conformal(rhs);
  grid.check_conformal(x);
  if (!shift.empty()) grid.check_conformal(shift);
  if (!(tol > 0.0)) throw InvalidArgument("linear solve tolerance must be positive");

  const std::size_t n = grid.size();
  auto apply = [&](std::span<const double> in, std::span<double> out) {
    apply_laplacian(grid, in, out);
    if (!shift.empty())
      for (std::size_t i = 0; i < n; ++i) out[i] += shift[i] * in[i];
  };

  std::vector<double> inv_diag;
  if (pre == Preconditioner::Jacobi) {
    const double d = laplacian_diagonal(grid);
    inv_diag.resize(n);
    for (std::size_t i = 0; i < n; ++i) inv_diag[i] = 1.0 / (d + (shift.empty() ? 0.0 : shift[i]));
  }

  const int max_iter = static_cast<int>(10 * n);
  const auto outcome = linalg::conjugate_gradient(apply, rhs, x, tol, max_iter, inv_diag);
  if (!outcome.converged)
    throw ConvergenceError("CG stagnated after " + std::to_string(outcome.iterations) +
                           " iterations, relative residual " + std::to_string(outcome.relative_residual));
  return {outcome.iterations, outcome.relative_residual, tol};
}

PoissonSolution solve_poisson(const Grid& grid, std::span<const double> rhs, double tol, Preconditioner pre) {
  PoissonSolution sol;
  sol.w = grid.zeros();
  sol.report = solve_shifted(grid, {}, rhs, sol.w, tol, pre);
  return sol;
}

double estimate_gamma(const Grid& grid) {
  const Field ones(grid.size(), 1.0);
  const auto phi = solve_poisson(grid, ones).w;
  return std::max(linf_norm(phi), gradient_linf(grid, phi));
}

}  // namespace kirchhoff
