#pragma once

#include <optional>
#include <span>
#include <vector>

#include "kirchhoff/coefficient.hpp"
#include "kirchhoff/elliptic.hpp"
#include "kirchhoff/grid.hpp"

namespace kirchhoff {

struct SemilinearOptions {
  /// Stop when |-Δ_h z + M_r(z) - w|_inf <= residual_tol * max(1, |w|_inf).
  double residual_tol = 1e-9;
  /// Allowed overshoot in the box and sup-norm postconditions.
  double bound_slack = 1e-10;
  int max_newton = 200;
  int max_backtrack = 60;
  double armijo_c = 1e-4;
  double cg_tol = 1e-12;
  Preconditioner preconditioner = Preconditioner::Jacobi;
  /// Defaults to z = 0.
  std::optional<Field> initial_guess;
};

struct SemilinearReport {
  double tau1 = 0.0;
  double tau2 = 0.0;
  int newton_iters = 0;
  double final_residual_linf = 0.0;
  /// Truncated energy at the start and after every accepted step.
  std::vector<double> energy_trace;
  /// max distance of z from [tau1, tau2].
  double box_violation = 0.0;
  /// |w|_inf - |M_r(z)|_inf, >= 0 when the uniform bound holds.
  double m_bound_slack = 0.0;
  /// |w|_inf / floor - |z|_inf.
  double linf_bound_slack = 0.0;
};

struct SemilinearSolution {
  Field z;
  SemilinearReport report;
};

/// Solves -Δ_h z + M_r(z) = w by minimising the truncated discrete energy
///   E(z) = 1/2 h10(z)^2 + sum Mhat(z_i) |cell| - sum w_i z_i |cell|
/// with damped Newton (Armijo backtracking). The truncation thresholds come
/// from find_thresholds(coef, r, |w|_inf). Throws ConvergenceError when Newton
/// stalls and PostconditionError when a box or sup-norm bound fails.
SemilinearSolution solve_semilinear(const Grid& grid, const Coefficient& coef, double r, std::span<const double> w,
                                    const SemilinearOptions& opts = {});

/// Residual -Δ_h z + M_r(z) - w of the untruncated equation.
Field semilinear_residual(const Grid& grid, const Coefficient& coef, double r, std::span<const double> z,
                          std::span<const double> w);

}  // namespace kirchhoff
