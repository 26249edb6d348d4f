#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "kirchhoff/coefficient.hpp"
#include "kirchhoff/error.hpp"
#include "kirchhoff/expr.hpp"
#include "kirchhoff/grid.hpp"
#include "kirchhoff/semilinear.hpp"

namespace kirchhoff {

enum class SourceKind { PureX, XAndU };

/// Declared growth and Lipschitz constants of f:
///   |f(x, t)| <= mu(x) + nu |t|^delta,  |mu| <= mu_bound,
///   |f(x, t1) - f(x, t2)| <= theta |t1 - t2|.
struct SourceParams {
  double mu_bound = 0.0;
  double nu = 0.0;
  double delta = 1.0;
  double theta = 0.0;
  /// Integrability exponent, checked against q > N/2 when present.
  std::optional<double> q;
};

/// The load f(x, t), either independent of t or not.
class SourceSpec {
 public:
  using Function = std::function<double(Point x, double t)>;

  static SourceSpec pure_x(std::function<double(Point)> f, SourceParams params, std::string description);
  static SourceSpec x_and_u(Function f, SourceParams params, std::string description);
  /// Kind is PureX unless the expression uses t.
  static SourceSpec from_expression(const expr::Expr& f, SourceParams params);

  SourceKind kind() const { return kind_; }
  const SourceParams& params() const { return params_; }
  const std::string& description() const { return description_; }

  double operator()(Point x, double t) const { return f_(x, t); }
  /// f(x_k, z_k) at every interior node.
  Field sample(const Grid& grid, std::span<const double> z) const;

 private:
  SourceSpec(SourceKind kind, Function f, SourceParams params, std::string description);
  SourceKind kind_;
  Function f_;
  SourceParams params_;
  std::string description_;
};

/// Picard monitors at step n. A slack is (bound - value) / max(|bound|, 1e-12);
/// NaN means the inequality does not apply at this step.
struct IterationRecord {
  int n = 0;
  double w_h10 = 0.0;
  double z_h10 = 0.0;
  double w_linf = 0.0;
  double z_linf = 0.0;
  /// ||z_{n+1} - z_n||.
  double step_delta = 0.0;
  /// ||z_{n+1}|| <= ||w_n|| / lambda1.
  double est1 = 0.0;
  /// ||w_n|| <= C1 + C2 ||w_{n-1}||^delta with the stated constants.
  double finish = 0.0;
  /// Same with the Hoelder factor |Omega|^((1-delta)/2).
  double finish_sharp = 0.0;
  /// ||w_n|| <= C1 sum_{k<n-1} C2^k + ||w_1||^delta C2^(n-1)   (delta = 1 only).
  double inequ = 0.0;
  /// |w_n|_inf <= gamma_h (mu_bound + nu |z_n|_inf^delta).
  double estiman = 0.0;
  /// |z_n|_inf <= |w_{n-1}|_inf / floor.
  double est2 = 0.0;
  /// ||w_n - w_{n-1}|| <= 1.1 theta / lambda1^2 ||w_{n-1} - w_{n-2}||.
  double contraction = 0.0;
};

struct MonitorConstants {
  double lambda1 = 0.0;
  double gamma = 0.0;
  double C1 = 0.0;
  double C2 = 0.0;
  double C2_sharp = 0.0;
  double contraction_factor = 0.0;
};

struct IterationTrace {
  std::vector<IterationRecord> steps;
  MonitorConstants constants;
  bool converged = false;
  /// Monitor entries below -monitor_slack.
  int violations = 0;
  /// Same, excluding the finish monitor with the stated constants.
  int violations_sharp = 0;
  /// Minimum slack per monitor over all steps (NaN when never applicable).
  double min_est1 = 0.0, min_finish = 0.0, min_finish_sharp = 0.0, min_inequ = 0.0, min_estiman = 0.0,
         min_est2 = 0.0, min_contraction = 0.0;
};

/// A Picard loop that hit its iteration cap. Carries the trace.
class PicardError : public ConvergenceError {
 public:
  PicardError(const std::string& what, IterationTrace trace) : ConvergenceError(what), trace_(std::move(trace)) {}
  const IterationTrace& trace() const { return trace_; }

 private:
  IterationTrace trace_;
};

struct SolutionBundle {
  Field u;
  Field w;
  /// M_r(u) - w, the reconstructed Laplacian of u.
  Field v;
  double r = 0.0;
  /// h10(u)^2.
  double S_value = 0.0;
  /// Δ_h Δ_h u - div_h(m ∇_h u) - f on nodes 2h inside, inf-norm.
  double residual_fourth_order = 0.0;
  /// |v - Δu|_inf with Δ applied by the fourth-order stencil, nodes 2h inside.
  double consistency_linf = 0.0;
  /// |v - Δ_h u|_inf, equal to the semilinear residual.
  double discrete_consistency_linf = 0.0;
  /// |w|_inf - |M_r(u)|_inf and |w|_inf/floor - |u|_inf.
  double m_bound_slack = 0.0;
  double linf_bound_slack = 0.0;
  double tau1 = 0.0;
  double tau2 = 0.0;
  int newton_iters = 0;
  IterationTrace trace;
  bool outside_theory = false;
};

struct CoupledOptions {
  SemilinearOptions semilinear;
  double poisson_tol = 1e-12;
  double picard_tol = 1e-10;
  int max_picard = 500;
  double monitor_slack = 1e-6;
  /// Start of the Picard loop; defaults to z = 0.
  std::optional<Field> picard_start;
  /// Copied into the bundle; set when the hypothesis audit failed and the
  /// caller chose to run anyway.
  bool outside_theory = false;
  /// Fill residual_fourth_order and consistency_linf (costs one extra pass).
  bool diagnostics = true;
};

/// Solver for the auxiliary problem at frozen r. Caches the Poisson solve
/// for t-independent loads together with lambda1 and gamma. Const methods
/// are safe to call concurrently.
class AuxiliarySolver {
 public:
  AuxiliarySolver(Grid grid, Coefficient coef, SourceSpec src, CoupledOptions opts = {});

  /// Fixed-load path for PureX sources, Picard otherwise.
  SolutionBundle solve(double r) const;
  SolutionBundle solve_fixed_f(double r) const;
  SolutionBundle solve_picard(double r, const std::optional<Field>& start = std::nullopt) const;
  double S(double r) const { return solve(r).S_value; }

  const Grid& grid() const { return grid_; }
  const Coefficient& coefficient() const { return coef_; }
  const SourceSpec& source() const { return src_; }
  const CoupledOptions& options() const { return opts_; }
  /// Poisson solution of the t-independent load (PureX only).
  const Field& cached_w() const;
  const MonitorConstants& constants() const { return constants_; }

 private:
  SolutionBundle finish(double r, Field z, Field w, const SemilinearReport& rep) const;

  Grid grid_;
  Coefficient coef_;
  SourceSpec src_;
  CoupledOptions opts_;
  Field w_fixed_;
  MonitorConstants constants_;
};

SolutionBundle solve_aux_fixed_f(const Grid& grid, const Coefficient& coef, const SourceSpec& src, double r,
                                 const CoupledOptions& opts = {});
SolutionBundle solve_aux_picard(const Grid& grid, const Coefficient& coef, const SourceSpec& src, double r,
                                const CoupledOptions& opts = {});

/// Constants C1, C2 of the self-bound ||w_n|| <= C1 + C2 ||w_{n-1}||^delta.
MonitorConstants monitor_constants(const Grid& grid, const SourceParams& params, double lambda1, double gamma);

}  // namespace kirchhoff
