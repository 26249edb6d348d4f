#pragma once

#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "kirchhoff/coupled.hpp"

namespace kirchhoff {

enum class FixedPointMethod { Bracketed, Damped };

struct FixedPointOptions {
  /// Target for the gap |S(r*) - r*|.
  double tol = 1e-8;
  FixedPointMethod method = FixedPointMethod::Bracketed;
  /// Relaxation weight of the damped iteration r <- (1 - omega) r + omega S(r).
  double omega = 0.5;
  int max_damped = 10000;
};

/// One step of the bracketing search, after the trial point was evaluated.
struct BracketStep {
  double r_lo = 0.0;
  double g_lo = 0.0;
  double r_hi = 0.0;
  double g_hi = 0.0;
  double r_trial = 0.0;
  double g_trial = 0.0;
};

struct FixedPointResult {
  double r_star = 0.0;
  double S_at_star = 0.0;
  double gap = 0.0;
  /// S evaluations, bracket ends included.
  int evaluations = 0;
  /// Upper end of the initial bracket [0, R].
  double R = 0.0;
  std::vector<BracketStep> bracket_history;
  /// g(r_lo) > 0 > g(r_hi) held after every step.
  bool bracket_invariant = true;
  bool converged = false;
  SolutionBundle bundle;
};

/// Outcome of the scalar root search.
struct RootResult {
  double x = 0.0;
  double gx = 0.0;
  int evaluations = 0;
  bool converged = false;
  bool invariant = true;
  std::vector<BracketStep> history;
};

/// Bracketed root of g on [a, b] given g(a) > 0 > g(b). Regula falsi with
/// the Illinois weight change, projected onto a shrinking window around the
/// midpoint so the count never exceeds ceil(log2((b - a)/tol)) evaluations.
/// Stops when |g| <= tol or the bracket is narrower than 2 tol.
RootResult bracketed_root(const std::function<double(double)>& g, double a, double b, double ga, double gb,
                          double tol);

double eval_S(const AuxiliarySolver& solver, double r);
double eval_S(const Grid& grid, const Coefficient& coef, const SourceSpec& src, double r);

/// R with S(R) < R. For t-independent loads R = 2 |w|_2^2 / lambda1 + 1;
/// otherwise R = 2 B^2 / min(lambda1, lambda1^2) + 1 with B the fixed point
/// of B = |mu| |Omega|^(1/2) / lambda1^(1/2) + C2 B^delta. The sign of
/// g(R) is checked and R doubled while it fails.
struct UpperBracket {
  double R = 0.0;
  double g_R = 0.0;
  double B = 0.0;
  int evaluations = 0;
  SolutionBundle bundle;
};
UpperBracket upper_bracket_checked(const AuxiliarySolver& solver);
double upper_bracket(const AuxiliarySolver& solver);

FixedPointResult find_fixed_point(const AuxiliarySolver& solver, const FixedPointOptions& opts = {});
FixedPointResult find_fixed_point(const Grid& grid, const Coefficient& coef, const SourceSpec& src, double tol,
                                  const CoupledOptions& copts = {});

struct SCurveSample {
  double r = 0.0;
  double S = 0.0;
  /// Newton steps of the final semilinear solve and Picard steps.
  int newton_iters = 0;
  int picard_steps = 0;
  bool picard_converged = true;
  /// Coarse-grid value of S at the same r (NaN when not computed).
  double S_coarse = 0.0;
};

struct SCurve {
  std::vector<SCurveSample> samples;
  /// First adjacent pair (r_lo, r_hi) on which g = S - r changes sign.
  std::optional<std::pair<double, double>> bracket;
  std::vector<std::pair<double, double>> sign_changes;
  /// max |S(r_{i+1}) - S(r_i)| on the fine and coarse grids.
  double max_adjacent_variation = 0.0;
  double coarse_max_adjacent_variation = 0.0;
  /// max |S_fine(r_i) - S_coarse(r_i)|.
  double resolution_gap = 0.0;
  int coarse_n = 0;
};

struct SweepOptions {
  /// 0 means the KIRCHHOFF_THREADS environment variable or the hardware count.
  int threads = 0;
  bool coarse_comparison = true;
};

/// Worker count honouring KIRCHHOFF_THREADS.
int sweep_threads(int requested);

SCurve sweep_S(const AuxiliarySolver& solver, const std::vector<double>& r_values, const SweepOptions& opts = {});
SCurve sweep_S(const Grid& grid, const Coefficient& coef, const SourceSpec& src, const std::vector<double>& r_values,
               const SweepOptions& opts = {}, const CoupledOptions& copts = {});

/// Grid with about half the nodes per axis, nested in `grid` when n is odd.
Grid coarsen(const Grid& grid);

}  // namespace kirchhoff
