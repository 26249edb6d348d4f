#include "kirchhoff/semilinear.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "kirchhoff/error.hpp"

namespace kirchhoff {

namespace {

// Compensated (Neumaier) accumulation.
struct Sum {
  double s = 0.0;
  double c = 0.0;
  void add(double v) {
    const double t = s + v;
    c += std::abs(s) >= std::abs(v) ? (s - t) + v : (v - t) + s;
    s = t;
  }
  double value() const { return s + c; }
};

struct Energy {
  double value = 0.0;
  double scale = 0.0;  // sum of the absolute terms, bounds the roundoff
};

Energy energy(const Grid& grid, const TruncatedM& trunc, std::span<const double> z, std::span<const double> w) {
  const double h10 = h10_norm(grid, z);
  const double vol = grid.cell_volume();
  Sum local;
  double scale = 0.5 * h10 * h10;
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double p = trunc.primitive(z[i]) * vol;
    const double l = w[i] * z[i] * vol;
    local.add(p - l);
    scale += std::abs(p) + std::abs(l);
  }
  return {0.5 * h10 * h10 + local.value(), scale};
}

void gradient(const Grid& grid, const TruncatedM& trunc, std::span<const double> z, std::span<const double> w,
              std::span<double> out) {
  apply_laplacian(grid, z, out);
  for (std::size_t i = 0; i < z.size(); ++i) out[i] += trunc.eval(z[i]) - w[i];
}

}  // namespace

Field semilinear_residual(const Grid& grid, const Coefficient& coef, double r, std::span<const double> z,
                          std::span<const double> w) {
  grid.check_conformal(z);
  grid.check_conformal(w);
  Field out = apply_laplacian(grid, z);
  for (std::size_t i = 0; i < z.size(); ++i) out[i] += coef.M(z[i], r) - w[i];
  return out;
}

SemilinearSolution solve_semilinear(const Grid& grid, const Coefficient& coef, double r, std::span<const double> w,
                                    const SemilinearOptions& opts) {
  grid.check_conformal(w);
  if (r < 0.0) throw InvalidArgument("r must be non-negative");
  for (double v : w)
    if (!std::isfinite(v)) throw InvalidArgument("load w has non-finite entries");

  const std::size_t n = grid.size();
  const double w_inf = linf_norm(w);
  SemilinearSolution sol;
  auto& rep = sol.report;

  if (w_inf == 0.0) {
    sol.z = grid.zeros();
    rep.energy_trace = {0.0};
    return sol;
  }

  const TruncatedM trunc = TruncatedM::at_level(coef, r, w_inf);
  rep.tau1 = trunc.tau1();
  rep.tau2 = trunc.tau2();

  Field z = opts.initial_guess ? *opts.initial_guess : grid.zeros();
  grid.check_conformal(z);

  const double tol = opts.residual_tol * std::max(1.0, w_inf);
  const double vol = grid.cell_volume();
  Field F(n), F_trial(n), z_trial(n), d(n), shift(n);

  gradient(grid, trunc, z, w, F);
  Energy E = energy(grid, trunc, z, w);
  rep.energy_trace.push_back(E.value);
  double res = linf_norm(F);

  int it = 0;
  while (res > tol) {
    if (it == opts.max_newton)
      throw ConvergenceError("semilinear Newton did not converge in " + std::to_string(opts.max_newton) +
                             " iterations, residual " + std::to_string(res));
    ++it;

    for (std::size_t i = 0; i < n; ++i) {
      shift[i] = trunc.slope(z[i]);
      F_trial[i] = -F[i];
    }
    std::fill(d.begin(), d.end(), 0.0);
    solve_shifted(grid, shift, F_trial, d, opts.cg_tol, opts.preconditioner);

    double slope = vol * dot(F, d);
    if (!(slope < 0.0)) {
      for (std::size_t i = 0; i < n; ++i) d[i] = -F[i];
      slope = -vol * dot(F, F);
    }

    // Roundoff floor of the energy comparison.
    const double slack = 64.0 * std::numeric_limits<double>::epsilon() * E.scale;
    double alpha = 1.0;
    bool accepted = false;
    for (int k = 0; k <= opts.max_backtrack; ++k) {
      for (std::size_t i = 0; i < n; ++i) z_trial[i] = z[i] + alpha * d[i];
      const Energy E_trial = energy(grid, trunc, z_trial, w);
      gradient(grid, trunc, z_trial, w, F_trial);
      const double res_trial = linf_norm(F_trial);
      const bool armijo = E_trial.value <= E.value + opts.armijo_c * alpha * slope + slack;
      // At roundoff level the energy stops resolving progress; the residual
      // still does.
      const bool flat = E_trial.value <= E.value + slack && res_trial < res;
      if (armijo || flat) {
        z.swap(z_trial);
        F.swap(F_trial);
        E = E_trial;
        res = res_trial;
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted)
      throw ConvergenceError("semilinear line search exhausted after " + std::to_string(opts.max_backtrack) +
                             " halvings at residual " + std::to_string(res));
    rep.energy_trace.push_back(E.value);
  }

  rep.newton_iters = it;

  double box = 0.0, M_inf = 0.0;
  for (double v : z) {
    box = std::max({box, rep.tau1 - v, v - rep.tau2});
    M_inf = std::max(M_inf, std::abs(coef.M(v, r)));
  }
  rep.box_violation = box;
  rep.m_bound_slack = w_inf - M_inf;
  rep.linf_bound_slack = w_inf / coef.m_floor() - linf_norm(z);
  rep.final_residual_linf = linf_norm(semilinear_residual(grid, coef, r, z, w));

  const double allowed = opts.bound_slack * std::max(1.0, w_inf);
  if (box > allowed)
    throw PostconditionError("semilinear solution leaves [tau1, tau2] by " + std::to_string(box));
  if (rep.m_bound_slack < -allowed)
    throw PostconditionError("|M_r(z)|_inf exceeds |w|_inf by " + std::to_string(-rep.m_bound_slack));
  if (rep.linf_bound_slack < -allowed)
    throw PostconditionError("|z|_inf exceeds |w|_inf/floor by " + std::to_string(-rep.linf_bound_slack));

  sol.z = std::move(z);
  return sol;
}

}  // namespace kirchhoff
