#include "kirchhoff/coupled.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "kirchhoff/elliptic.hpp"
#include "kirchhoff/verify.hpp"

namespace kirchhoff {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double slack(double bound, double value) { return (bound - value) / std::max(std::abs(bound), 1e-12); }

// NaN-aware running minimum.
void take_min(double& acc, double v) {
  if (std::isnan(v)) return;
  acc = std::isnan(acc) ? v : std::min(acc, v);
}

void validate(const SourceParams& p) {
  if (!(p.mu_bound >= 0.0) || !(p.nu >= 0.0) || !(p.theta >= 0.0))
    throw InvalidArgument("source constants mu_bound, nu, theta must be non-negative");
  if (!(p.delta > 0.0 && p.delta <= 1.0)) throw InvalidArgument("source exponent delta must lie in (0, 1]");
  if (p.q && !(*p.q > 0.0)) throw InvalidArgument("integrability exponent q must be positive");
}

Field difference(std::span<const double> a, std::span<const double> b) {
  Field d(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
  return d;
}

}  // namespace

SourceSpec::SourceSpec(SourceKind kind, Function f, SourceParams params, std::string description)
    : kind_(kind), f_(std::move(f)), params_(params), description_(std::move(description)) {
  validate(params_);
}

SourceSpec SourceSpec::pure_x(std::function<double(Point)> f, SourceParams params, std::string description) {
  return SourceSpec(SourceKind::PureX, [f = std::move(f)](Point x, double) { return f(x); }, params,
                    std::move(description));
}

SourceSpec SourceSpec::x_and_u(Function f, SourceParams params, std::string description) {
  return SourceSpec(SourceKind::XAndU, std::move(f), params, std::move(description));
}

SourceSpec SourceSpec::from_expression(const expr::Expr& f, SourceParams params) {
  if (f.uses(expr::Variable::r)) throw InvalidArgument("source expression may only use x, y and t");
  const auto kind = f.uses(expr::Variable::t) ? SourceKind::XAndU : SourceKind::PureX;
  return SourceSpec(
      kind, [f](Point x, double t) { return f.eval(expr::Bindings{t, 0.0, x.x, x.y}); }, params, f.source());
}

Field SourceSpec::sample(const Grid& grid, std::span<const double> z) const {
  grid.check_conformal(z);
  Field out(grid.size());
  for (std::size_t k = 0; k < out.size(); ++k) {
    out[k] = f_(grid.node(k), z[k]);
    if (!std::isfinite(out[k])) throw EvalError("source is not finite at node " + std::to_string(k));
  }
  return out;
}

MonitorConstants monitor_constants(const Grid& grid, const SourceParams& p, double lambda1, double gamma) {
  const double vol = grid.domain().volume();
  const double lift = std::pow(lambda1, (1.0 + 3.0 * p.delta) / 2.0);
  MonitorConstants c;
  c.lambda1 = lambda1;
  c.gamma = gamma;
  c.C1 = std::max(1.0, p.mu_bound * std::sqrt(vol) / std::sqrt(lambda1));
  c.C2 = p.nu * std::pow(vol, 1.0 - p.delta) / lift;
  c.C2_sharp = p.nu * std::pow(vol, (1.0 - p.delta) / 2.0) / lift;
  c.contraction_factor = p.theta / (lambda1 * lambda1);
  return c;
}

AuxiliarySolver::AuxiliarySolver(Grid grid, Coefficient coef, SourceSpec src, CoupledOptions opts)
    : grid_(std::move(grid)), coef_(std::move(coef)), src_(std::move(src)), opts_(std::move(opts)) {
  if (src_.kind() == SourceKind::PureX) w_fixed_ = solve_poisson(grid_, src_.sample(grid_, grid_.zeros()), opts_.poisson_tol).w;
  const double gamma = src_.kind() == SourceKind::XAndU ? estimate_gamma(grid_) : 0.0;
  constants_ = monitor_constants(grid_, src_.params(), lambda1(grid_).discrete, gamma);
}

const Field& AuxiliarySolver::cached_w() const {
  if (src_.kind() != SourceKind::PureX) throw InvalidArgument("cached_w is only defined for t-independent loads");
  return w_fixed_;
}

SolutionBundle AuxiliarySolver::solve(double r) const {
  return src_.kind() == SourceKind::PureX ? solve_fixed_f(r) : solve_picard(r);
}

SolutionBundle AuxiliarySolver::solve_fixed_f(double r) const {
  if (src_.kind() != SourceKind::PureX) throw InvalidArgument("fixed-load solve needs a t-independent source");
  auto sol = solve_semilinear(grid_, coef_, r, w_fixed_, opts_.semilinear);
  auto bundle = finish(r, std::move(sol.z), w_fixed_, sol.report);
  bundle.trace.converged = true;
  return bundle;
}

SolutionBundle AuxiliarySolver::solve_picard(double r, const std::optional<Field>& start) const {
  const auto& p = src_.params();
  const auto& c = constants_;
  const double floor = coef_.m_floor();
  const double dslack = opts_.monitor_slack;

  Field z = start ? *start : (opts_.picard_start ? *opts_.picard_start : grid_.zeros());
  grid_.check_conformal(z);

  IterationTrace trace;
  trace.constants = c;
  for (double* m : {&trace.min_est1, &trace.min_finish, &trace.min_finish_sharp, &trace.min_inequ,
                    &trace.min_estiman, &trace.min_est2, &trace.min_contraction})
    *m = kNaN;

  Field w_prev;
  double w1_h10 = 0.0, w_prev_h10 = 0.0, w_prev_linf = 0.0, dw_prev = kNaN;

  SemilinearOptions sopts = opts_.semilinear;
  for (int n = 1; n <= opts_.max_picard; ++n) {
    Field w = solve_poisson(grid_, src_.sample(grid_, z), opts_.poisson_tol).w;
    sopts.initial_guess = z;
    auto sol = solve_semilinear(grid_, coef_, r, w, sopts);

    IterationRecord rec;
    rec.n = n;
    rec.w_h10 = h10_norm(grid_, w);
    rec.z_h10 = h10_norm(grid_, z);
    rec.w_linf = linf_norm(w);
    rec.z_linf = linf_norm(z);
    rec.step_delta = h10_norm(grid_, difference(sol.z, z));
    rec.est1 = slack(rec.w_h10 / c.lambda1, h10_norm(grid_, sol.z));
    rec.estiman = slack(c.gamma * (p.mu_bound + p.nu * std::pow(rec.z_linf, p.delta)), rec.w_linf);
    rec.finish = rec.finish_sharp = rec.inequ = rec.est2 = rec.contraction = kNaN;
    if (n == 1) w1_h10 = rec.w_h10;
    if (n >= 2) {
      const double grown = std::pow(w_prev_h10, p.delta);
      rec.finish = slack(c.C1 + c.C2 * grown, rec.w_h10);
      rec.finish_sharp = slack(c.C1 + c.C2_sharp * grown, rec.w_h10);
      rec.est2 = slack(w_prev_linf / floor, rec.z_linf);
      if (p.delta == 1.0) {
        double geometric = 0.0, power = 1.0;
        for (int k = 0; k <= n - 2; ++k, power *= c.C2) geometric += power;
        rec.inequ = slack(c.C1 * geometric + w1_h10 * power, rec.w_h10);
      }
      const double dw = h10_norm(grid_, difference(w, w_prev));
      // Below this the increments are solver noise.
      const double noise = 1e-8 * std::max(1.0, rec.w_h10);
      if (n >= 3 && dw_prev > noise) rec.contraction = slack(1.1 * c.contraction_factor * dw_prev, dw);
      dw_prev = dw;
    }

    for (double s : {rec.est1, rec.finish, rec.inequ, rec.estiman, rec.est2, rec.contraction})
      if (s < -dslack) ++trace.violations;
    for (double s : {rec.est1, rec.finish_sharp, rec.inequ, rec.estiman, rec.est2, rec.contraction})
      if (s < -dslack) ++trace.violations_sharp;
    take_min(trace.min_est1, rec.est1);
    take_min(trace.min_finish, rec.finish);
    take_min(trace.min_finish_sharp, rec.finish_sharp);
    take_min(trace.min_inequ, rec.inequ);
    take_min(trace.min_estiman, rec.estiman);
    take_min(trace.min_est2, rec.est2);
    take_min(trace.min_contraction, rec.contraction);
    trace.steps.push_back(rec);

    const bool done = rec.step_delta <= opts_.picard_tol * std::max(1.0, rec.z_h10);
    if (done) {
      trace.converged = true;
      auto bundle = finish(r, std::move(sol.z), std::move(w), sol.report);
      bundle.trace = std::move(trace);
      return bundle;
    }
    w_prev_h10 = rec.w_h10;
    w_prev_linf = rec.w_linf;
    w_prev = std::move(w);
    z = std::move(sol.z);
  }
  throw PicardError("Picard iteration did not converge in " + std::to_string(opts_.max_picard) + " steps",
                    std::move(trace));
}

SolutionBundle AuxiliarySolver::finish(double r, Field z, Field w, const SemilinearReport& rep) const {
  SolutionBundle b;
  b.r = r;
  b.u = std::move(z);
  b.w = std::move(w);
  b.v.resize(b.u.size());
  double M_inf = 0.0;
  for (std::size_t i = 0; i < b.u.size(); ++i) {
    const double M = coef_.M(b.u[i], r);
    M_inf = std::max(M_inf, std::abs(M));
    b.v[i] = M - b.w[i];
  }
  const double h10 = h10_norm(grid_, b.u);
  b.S_value = h10 * h10;
  const double w_inf = linf_norm(b.w);
  b.m_bound_slack = w_inf - M_inf;
  b.linf_bound_slack = w_inf / coef_.m_floor() - linf_norm(b.u);
  b.tau1 = rep.tau1;
  b.tau2 = rep.tau2;
  b.newton_iters = rep.newton_iters;
  b.outside_theory = opts_.outside_theory;

  const Field Au = apply_laplacian(grid_, b.u);
  for (std::size_t i = 0; i < b.u.size(); ++i)
    b.discrete_consistency_linf = std::max(b.discrete_consistency_linf, std::abs(b.v[i] + Au[i]));
  if (opts_.diagnostics) {
    b.consistency_linf = reconstruction_consistency(grid_, b.u, b.v);
    b.residual_fourth_order = fourth_order_residual(grid_, coef_, src_, b).fourth_order_linf;
  }
  return b;
}

SolutionBundle solve_aux_fixed_f(const Grid& grid, const Coefficient& coef, const SourceSpec& src, double r,
                                 const CoupledOptions& opts) {
  return AuxiliarySolver(grid, coef, src, opts).solve_fixed_f(r);
}

SolutionBundle solve_aux_picard(const Grid& grid, const Coefficient& coef, const SourceSpec& src, double r,
                                const CoupledOptions& opts) {
  return AuxiliarySolver(grid, coef, src, opts).solve_picard(r);
}

}  // namespace kirchhoff
