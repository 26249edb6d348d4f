#pragma once

#include <span>

#include "kirchhoff/grid.hpp"

namespace kirchhoff {

enum class Preconditioner { None, Jacobi };

struct LinearSolveReport {
  int iterations = 0;
  /// Relative residual |b - Ax|_2 / |b|_2 at exit.
  double residual_l2 = 0.0;
  double tolerance = 0.0;
};

struct PoissonSolution {
  Field w;
  LinearSolveReport report;
};

/// Solves -Δ_h w = rhs with homogeneous Dirichlet data by CG.
/// Throws ConvergenceError after 10 * interior_count iterations.
PoissonSolution solve_poisson(const Grid& grid, std::span<const double> rhs, double tol = 1e-12,
                              Preconditioner pre = Preconditioner::None);

/// Solves (-Δ_h + diag(shift)) x = rhs, shift >= 0 nodewise. `x` carries the
/// initial guess.
LinearSolveReport solve_shifted(const Grid& grid, std::span<const double> shift, std::span<const double> rhs,
                                std::span<double> x, double tol, Preconditioner pre = Preconditioner::None);

/// Discrete stand-in for the regularity constant γ:
/// max(|φ|_inf, |∇_h φ|_inf) with φ the discrete torsion function
/// (-Δ_h φ = 1). |φ|_inf is exactly the inf-norm of (-Δ_h)^{-1}; the
/// gradient term is a heuristic for the C^1 part. Audit-only quantity.
double estimate_gamma(const Grid& grid);

}  // namespace kirchhoff
