#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "kirchhoff/coupled.hpp"

namespace kirchhoff {

struct ResidualReport {
  /// Δ_h Δ_h u - div_h(m(u, S) ∇_h u) - f(., u) on nodes at least 2h inside.
  double fourth_order_linf = 0.0;
  double fourth_order_l2 = 0.0;
  /// Same operator with fourth-order stencils on nodes at least 4h inside;
  /// approximates the continuous residual, O(h^2) for smooth data.
  double continuum_linf = 0.0;
  /// |v - Δ_h u|_inf.
  double system_consistency_linf = 0.0;
  /// |v - Δu|_inf with the fourth-order Laplacian.
  double reconstruction_linf = 0.0;
  /// max over 20 random test fields phi of
  ///   |sum Δ_h u Δ_h phi + ∇_h M(u) . ∇_h phi - f phi| |cell| / |Δ_h phi|_2.
  double weak_form_defect = 0.0;
};

ResidualReport fourth_order_residual(const Grid& grid, const Coefficient& coef, const SourceSpec& src,
                                     const SolutionBundle& bundle, std::uint64_t seed = 20);

/// |v - Δu|_inf over nodes two cells inside, Δ by the fourth-order stencil.
double reconstruction_consistency(const Grid& grid, std::span<const double> u, std::span<const double> v);

struct OracleOptions {
  int starts = 10;
  std::uint64_t seed = 1;
  int max_newton = 100;
  /// Converged starts must agree to this in inf-norm over (z, w, r).
  double consensus_tol = 1e-7;
};

struct OracleResult {
  SolutionBundle bundle;
  int starts = 0;
  int converged_starts = 0;
  int max_newton_iters = 0;
  /// Largest inf-norm distance between converged starts.
  double spread = 0.0;
};

/// Dense Newton on the stacked system in (z, w, r):
///   -Δ_h w = f(., z),  -Δ_h z + M_r(z) = w,  r = h10(z)^2
/// from seeded random starts. Throws ConvergenceError when no start converges
/// or when converged starts disagree.
OracleResult dense_oracle(const Grid& grid, const Coefficient& coef, const SourceSpec& src,
                          const OracleOptions& opts = {});
/// Same with r frozen; unknowns (z, w).
OracleResult dense_oracle_fixed_r(const Grid& grid, const Coefficient& coef, const SourceSpec& src, double r,
                                  const OracleOptions& opts = {});

struct RefinementRow {
  int n = 0;
  double h = 0.0;
  double value = 0.0;
  double error = 0.0;
  /// log(e_{i-1}/e_i) / log(h_{i-1}/h_i); NaN on the first row.
  double order = 0.0;
};

struct RefinementTable {
  std::vector<RefinementRow> rows;
  /// Reference the errors are measured against.
  double reference = 0.0;
  bool closed_form = false;
};

/// q* from q(h) = q* + C h^2 + D h^4 through the last three levels.
double richardson_extrapolate(std::span<const double> h, std::span<const double> q);

/// Runs `quantity(n)` for each n. Errors are |q - exact| when `exact` is
/// given, else against the Richardson value.
RefinementTable refinement_study(const std::vector<int>& n_list, const std::function<double(int)>& h_of_n,
                                 const std::function<double(int)>& quantity, std::optional<double> exact);
/// As above with `error_of(n)` returning the error directly; the value
/// column holds it as well.
RefinementTable refinement_errors(const std::vector<int>& n_list, const std::function<double(int)>& h_of_n,
                                  const std::function<double(int)>& error_of);

/// r* on each grid of the family domain x n_list.
RefinementTable refinement_study(const Domain& domain, const Coefficient& coef, const SourceSpec& src,
                                 const std::vector<int>& n_list, std::optional<double> exact = std::nullopt,
                                 double tol = 1e-10);

}  // namespace kirchhoff
