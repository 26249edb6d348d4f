#include "kirchhoff/coefficient.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <sstream>

#include "kirchhoff/error.hpp"
#include "kirchhoff/sampling.hpp"

namespace kirchhoff {

struct Coefficient::Impl {
  Function m;
  Function M;      // empty: quadrature
  Function M_hat;  // empty: quadrature
  std::function<std::optional<double>(double)> slope;
  double floor = 0.0;
  bool m2 = false;
  bool depends_on_r = true;
  std::string description;
};

namespace {

constexpr double kQuadTol = 1e-12;
constexpr int kQuadDepth = 40;
constexpr double kInverseTol = 1e-10;

struct SimpsonState {
  const std::function<double(double)>* f;
  double capped_error = 0.0;  // error estimate left on panels at the depth cap
};

double checked(double v) {
  if (!std::isfinite(v)) throw ConvergenceError("non-finite coefficient value during quadrature");
  return v;
}

double simpson_recurse(SimpsonState& st, double a, double b, double fa, double fm, double fb, double whole,
                       double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = checked((*st.f)(lm));
  const double frm = checked((*st.f)(rm));
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double both = left + right;
  const double err = both - whole;
  // Roundoff floor: relative agreement at a few ulps counts as converged.
  const double floor = 64.0 * std::numeric_limits<double>::epsilon() * (std::abs(left) + std::abs(right));
  if (std::abs(err) <= 15.0 * std::max(tol, floor)) return both + err / 15.0;
  if (depth >= kQuadDepth) {
    st.capped_error += std::abs(err) / 15.0;
    return both + err / 15.0;
  }
  return simpson_recurse(st, a, m, fa, flm, fm, left, 0.5 * tol, depth + 1) +
         simpson_recurse(st, m, b, fm, frm, fb, right, 0.5 * tol, depth + 1);
}

double adaptive_simpson(const std::function<double(double)>& f, double a, double b) {
  if (a == b) return 0.0;
  // Fixed pre-split so a periodic integrand cannot fool the first estimate.
  const int panels = std::max(4, static_cast<int>(std::ceil(std::abs(b - a) / 0.5)));
  const double width = (b - a) / panels;
  const double tol = kQuadTol / panels;
  SimpsonState st{&f};
  double total = 0.0;
  double left = a;
  double f_left = checked(f(a));
  for (int p = 0; p < panels; ++p) {
    const double right = p + 1 == panels ? b : a + (p + 1) * width;
    const double f_right = checked(f(right));
    const double mid = 0.5 * (left + right);
    const double f_mid = checked(f(mid));
    const double whole = (right - left) / 6.0 * (f_left + 4.0 * f_mid + f_right);
    total += simpson_recurse(st, left, right, f_left, f_mid, f_right, whole, tol, 0);
    left = right;
    f_left = f_right;
  }
  if (st.capped_error > kQuadTol)
    throw ConvergenceError("adaptive Simpson did not reach tolerance on [" + std::to_string(a) + ", " +
                           std::to_string(b) + "]");
  return total;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

}  // namespace

Coefficient Coefficient::constant(double value) {
  if (!(value > 0.0) || !std::isfinite(value)) throw InvalidArgument("constant coefficient must be positive");
  auto impl = std::make_shared<Impl>();
  impl->m = [value](double, double) { return value; };
  impl->M = [value](double t, double) { return value * t; };
  impl->M_hat = [value](double t, double) { return 0.5 * value * t * t; };
  impl->slope = [value](double) { return std::optional<double>(value); };
  impl->floor = value;
  impl->depends_on_r = false;
  impl->description = "constant(" + fmt(value) + ")";
  return Coefficient(std::move(impl));
}

Coefficient Coefficient::affine_in_r(double a, double b) {
  if (!(a > 0.0) || !(b >= 0.0)) throw InvalidArgument("affine_in_r needs a > 0 and b >= 0");
  auto impl = std::make_shared<Impl>();
  impl->m = [a, b](double, double r) { return a + b * r; };
  impl->M = [a, b](double t, double r) { return (a + b * r) * t; };
  impl->M_hat = [a, b](double t, double r) { return 0.5 * (a + b * r) * t * t; };
  impl->slope = [a, b](double r) { return std::optional<double>(a + b * r); };
  impl->floor = a;
  impl->depends_on_r = b != 0.0;
  impl->description = "affine_in_r(" + fmt(a) + ", " + fmt(b) + ")";
  return Coefficient(std::move(impl));
}

Coefficient Coefficient::polynomial_in_t(std::vector<double> coeffs, double m_floor, bool supports_m2,
                                         double r_coeff) {
  if (coeffs.empty()) throw InvalidArgument("polynomial_in_t needs at least one coefficient");
  if (!(m_floor > 0.0)) throw InvalidArgument("declared floor must be positive");
  if (r_coeff < 0.0) throw InvalidArgument("polynomial_in_t needs r_coeff >= 0");
  auto impl = std::make_shared<Impl>();
  auto horner = [](const std::vector<double>& c, double t) {
    double acc = 0.0;
    for (auto it = c.rbegin(); it != c.rend(); ++it) acc = acc * t + *it;
    return acc;
  };
  std::vector<double> prim(coeffs.size() + 1, 0.0), prim2(coeffs.size() + 2, 0.0);
  for (std::size_t k = 0; k < coeffs.size(); ++k) {
    prim[k + 1] = coeffs[k] / static_cast<double>(k + 1);
    prim2[k + 2] = coeffs[k] / static_cast<double>((k + 1) * (k + 2));
  }
  impl->m = [=](double t, double r) { return horner(coeffs, t) + r_coeff * r; };
  impl->M = [=](double t, double r) { return horner(prim, t) + r_coeff * r * t; };
  impl->M_hat = [=](double t, double r) { return horner(prim2, t) + 0.5 * r_coeff * r * t * t; };
  const bool linear = coeffs.size() == 1 || std::all_of(coeffs.begin() + 1, coeffs.end(), [](double c) { return c == 0.0; });
  const double c0 = coeffs[0];
  impl->slope = [=](double r) { return linear ? std::optional<double>(c0 + r_coeff * r) : std::nullopt; };
  impl->floor = m_floor;
  impl->m2 = supports_m2;
  impl->depends_on_r = r_coeff != 0.0;
  std::ostringstream os;
  os << "polynomial_in_t([";
  for (std::size_t k = 0; k < coeffs.size(); ++k) os << (k ? ", " : "") << fmt(coeffs[k]);
  os << "], r_coeff=" << fmt(r_coeff) << ")";
  impl->description = os.str();
  return Coefficient(std::move(impl));
}

Coefficient Coefficient::gaussian_bump(double a, double b) {
  if (!(a > 0.0) || !(b >= 0.0)) throw InvalidArgument("gaussian_bump needs a > 0 and b >= 0");
  auto impl = std::make_shared<Impl>();
  constexpr double half_sqrt_pi = 0.5 * 1.7724538509055160273;  // sqrt(pi)/2
  impl->m = [a, b](double t, double r) { return a + b * r * std::exp(-t * t); };
  impl->M = [a, b](double t, double r) { return a * t + b * r * half_sqrt_pi * std::erf(t); };
  impl->M_hat = [a, b](double t, double r) {
    return 0.5 * a * t * t + b * r * (t * half_sqrt_pi * std::erf(t) + 0.5 * (std::exp(-t * t) - 1.0));
  };
  impl->slope = [a, b](double r) { return b == 0.0 || r == 0.0 ? std::optional<double>(a) : std::nullopt; };
  impl->floor = a;
  impl->depends_on_r = b != 0.0;
  impl->description = "gaussian_bump(" + fmt(a) + ", " + fmt(b) + ")";
  return Coefficient(std::move(impl));
}

Coefficient Coefficient::from_function(Function m, double m_floor, bool supports_m2, std::string description) {
  if (!(m_floor > 0.0)) throw InvalidArgument("declared floor must be positive");
  auto impl = std::make_shared<Impl>();
  impl->m = std::move(m);
  impl->slope = [](double) { return std::optional<double>(); };
  impl->floor = m_floor;
  impl->m2 = supports_m2;
  impl->description = std::move(description);
  return Coefficient(std::move(impl));
}

Coefficient Coefficient::from_expression(const expr::Expr& e, double m_floor, bool supports_m2) {
  for (auto v : {expr::Variable::x, expr::Variable::y})
    if (e.uses(v)) throw InvalidArgument("coefficient expression may only use t and r");
  auto c = from_function([e](double t, double r) { return e.eval(expr::Bindings{t, r, 0.0, 0.0}); }, m_floor,
                         supports_m2, "expression(" + e.source() + ")");
  auto impl = std::make_shared<Impl>(*c.impl_);
  impl->depends_on_r = e.uses(expr::Variable::r);
  if (!e.uses(expr::Variable::t)) {
    impl->slope = [e](double r) { return std::optional<double>(e.eval(expr::Bindings{0.0, r, 0.0, 0.0})); };
  }
  return Coefficient(std::move(impl));
}

double Coefficient::m(double t, double r) const { return impl_->m(t, r); }

double Coefficient::M(double t, double r) const {
  if (impl_->M) return impl_->M(t, r);
  if (auto s = impl_->slope(r)) return *s * t;
  const std::function<double(double)> f = [this, r](double s) { return impl_->m(s, r); };
  return adaptive_simpson(f, 0.0, t);
}

double Coefficient::M_between(double a, double b, double r) const {
  if (impl_->M) return impl_->M(b, r) - impl_->M(a, r);
  if (auto s = impl_->slope(r)) return *s * (b - a);
  const std::function<double(double)> f = [this, r](double s) { return impl_->m(s, r); };
  return adaptive_simpson(f, a, b);
}

double Coefficient::M_hat(double t, double r) const {
  if (impl_->M_hat) return impl_->M_hat(t, r);
  if (auto s = impl_->slope(r)) return 0.5 * *s * t * t;
  const std::function<double(double)> f = [this, r, t](double s) { return (t - s) * impl_->m(s, r); };
  return adaptive_simpson(f, 0.0, t);
}

double Coefficient::m_floor() const { return impl_->floor; }
bool Coefficient::supports_m2() const { return impl_->m2; }
bool Coefficient::depends_on_r() const { return impl_->depends_on_r; }
bool Coefficient::has_closed_form() const { return static_cast<bool>(impl_->M); }
const std::string& Coefficient::description() const { return impl_->description; }
std::optional<double> Coefficient::linear_slope(double r) const { return impl_->slope(r); }

double big_M(const Coefficient& coef, double t, double r) {
  if (r < 0.0) throw InvalidArgument("r must be non-negative");
  return coef.M(t, r);
}

double big_M_inverse(const Coefficient& coef, double y, double r) {
  if (r < 0.0) throw InvalidArgument("r must be non-negative");
  if (y == 0.0) return 0.0;
  if (auto s = coef.linear_slope(r)) return y / *s;

  const double sign = y > 0.0 ? 1.0 : -1.0;
  const double target = std::abs(y);
  auto F = [&](double t) { return sign * coef.M(sign * t, r); };  // increasing, F(0) = 0

  // Newton steps with the exact slope m, kept inside the bracket
  // [0, target/floor] and replaced by bisection when they leave it. F is
  // carried forward so each step only integrates between successive
  // iterates; the candidate is confirmed with a full evaluation, and the
  // checked bisection below handles everything else.
  {
    double a = 0.0, b = target / coef.m_floor();
    double x = 0.0, F_x = 0.0;
    for (int it = 0; it < 200 && a < b; ++it) {
      const double slope = coef.m(sign * x, r);
      double next = x + (target - F_x) / slope;
      if (!(next > a && next < b)) next = 0.5 * (a + b);
      if (next == x) break;
      const double v = F_x + sign * coef.M_between(sign * x, sign * next, r);
      x = next;
      F_x = v;
      if (std::abs(v - target) <= 0.5 * kInverseTol) {
        if (std::abs(F(x) - target) <= kInverseTol) return sign * x;
        break;
      }
      (v < target ? a : b) = x;
    }
  }

  double lo = 0.0;
  double hi = target / coef.m_floor();
  int expansions = 0;
  while (F(hi) < target) {
    lo = hi;
    hi *= 2.0;
    if (++expansions > 64) throw ConvergenceError("could not bracket M_r^{-1}(" + fmt(y) + "); is the floor valid?");
  }
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double v = F(mid);
    if (std::abs(v - target) <= kInverseTol || mid == lo || mid == hi) return sign * mid;
    if (v < target) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return sign * 0.5 * (lo + hi);
}

Thresholds find_thresholds(const Coefficient& coef, double r, double c) {
  if (!(c > 0.0)) throw InvalidArgument("threshold level must be positive");
  return {big_M_inverse(coef, -c, r), big_M_inverse(coef, c, r)};
}

TruncatedM::TruncatedM(Coefficient base, double r, double tau1, double tau2)
    : base_(std::move(base)), r_(r), tau1_(tau1), tau2_(tau2) {
  if (!(tau1 < 0.0 && 0.0 < tau2)) throw InvalidArgument("truncation needs tau1 < 0 < tau2");
  low_value_ = base_.M(tau1_, r_);
  high_value_ = base_.M(tau2_, r_);
  low_primitive_ = base_.M_hat(tau1_, r_);
  high_primitive_ = base_.M_hat(tau2_, r_);
}

TruncatedM TruncatedM::at_level(Coefficient base, double r, double level) {
  const auto th = find_thresholds(base, r, level);
  return TruncatedM(std::move(base), r, th.tau1, th.tau2);
}

double TruncatedM::eval(double t) const {
  if (t <= tau1_) return low_value_;
  if (t >= tau2_) return high_value_;
  return base_.M(t, r_);
}

double TruncatedM::slope(double t) const { return base_.m(std::clamp(t, tau1_, tau2_), r_); }

double TruncatedM::primitive(double t) const {
  if (t <= tau1_) return low_primitive_ + low_value_ * (t - tau1_);
  if (t >= tau2_) return high_primitive_ + high_value_ * (t - tau2_);
  return base_.M_hat(t, r_);
}

double truncated_M_eval(const TruncatedM& trunc, double t) { return trunc.eval(t); }

const PropertyCheck& PropertyReport::get(const std::string& id) const {
  for (const auto& c : checks)
    if (c.id == id) return c;
  throw InvalidArgument("no property check '" + id + "'");
}

bool PropertyReport::all_passed() const {
  return std::none_of(checks.begin(), checks.end(), [](const auto& c) { return c.status == CheckStatus::Fail; });
}

namespace {

void record(PropertyCheck& c, double slack, const std::string& witness) {
  ++c.samples;
  if (slack < 0.0) ++c.violations;
  if (c.samples == 1 || slack < c.worst_slack) {
    c.worst_slack = slack;
    c.witness = witness;
  }
}

PropertyCheck make_check(std::string id, std::string description) {
  PropertyCheck c;
  c.id = std::move(id);
  c.description = std::move(description);
  return c;
}

void finish(PropertyCheck& c) { c.status = c.violations == 0 ? CheckStatus::Pass : CheckStatus::Fail; }

std::string point(double t, double r) { return "(t=" + fmt(t) + ", r=" + fmt(r) + ")"; }

}  // namespace

PropertyReport check_lemma_properties(const Coefficient& coef, int sample_budget, const PropertyOptions& opts) {
  if (sample_budget < 100) throw InvalidArgument("sample_budget must be at least 100");
  const auto& box = opts.box;
  const double floor = coef.m_floor();
  const sampling::Halton halton{opts.seed};
  auto t_at = [&](double u) { return box.t_low + u * (box.t_high - box.t_low); };
  auto r_at = [&](double u) { return std::max(0.0, box.r_low + u * (box.r_high - box.r_low)); };
  auto y_at = [&](double u) { return opts.y_range * (2.0 * u - 1.0); };

  PropertyReport report;

  PropertyCheck a = make_check("a", "sign condition, strict monotonicity, |M_r(t)| >= floor*|t|");
  for (int k = 0; k < sample_budget; ++k) {
    const double t = t_at(halton(k, 0));
    const double r = r_at(halton(k, 1));
    if (t == 0.0) continue;
    const double M = coef.M(t, r);
    const double tol = kQuadTol + 1e-13 * std::abs(M);
    record(a, std::min(M * t > 0.0 ? 1.0 : -1.0, std::abs(M) - floor * std::abs(t) + tol), point(t, r));
    // Strict monotonicity against a nearby second abscissa.
    const double t2 = t + 1e-3 * (1.0 + std::abs(t));
    record(a, coef.M_between(t, t2, r) > 0.0 ? 1.0 : -1.0, point(t, r));
  }
  finish(a);
  report.checks.push_back(a);

  auto continuity = [&](PropertyCheck& c, auto&& fn, bool inverse) {
    const int bases = std::max(10, sample_budget / 200);
    for (int k = 0; k < bases; ++k) {
      const double t0 = inverse ? y_at(halton(k, 2)) : t_at(halton(k, 2));
      const double r0 = r_at(halton(k, 3));
      const double dt = 2.0 * halton(k, 4) - 1.0;
      const double dr = halton(k, 5);
      const double v0 = fn(t0, r0);
      double tail = 0.0;
      for (int j = 30; j <= 40; ++j) {
        const double s = std::ldexp(1.0, -j);
        tail = std::max(tail, std::abs(fn(t0 + dt * s, r0 + dr * s) - v0));
      }
      record(c, 1e-8 * (1.0 + std::abs(v0)) - tail, point(t0, r0));
    }
    finish(c);
  };

  PropertyCheck b = make_check("b", "joint sequential continuity of (t, r) -> M_r(t)");
  continuity(b, [&](double t, double r) { return coef.M(t, r); }, false);
  report.checks.push_back(b);

  PropertyCheck c = make_check("c", "M_r^{-1} Lipschitz with constant 1/floor");
  const int pairs = std::max(100, sample_budget / 10);
  for (int k = 0; k < pairs; ++k) {
    const double y1 = y_at(halton(k, 0));
    const double y2 = y_at(halton(k, 2));
    const double r = r_at(halton(k, 1));
    const double dt = std::abs(big_M_inverse(coef, y1, r) - big_M_inverse(coef, y2, r));
    const double dy = std::abs(y1 - y2);
    const double allowed = (1.0 / floor + 1e-6) * dy + 2.0 * kInverseTol / floor;
    record(c, allowed - dt, "(y1=" + fmt(y1) + ", y2=" + fmt(y2) + ", r=" + fmt(r) + ")");
  }
  finish(c);
  report.checks.push_back(c);

  PropertyCheck d = make_check("d", "joint continuity of (t, r) -> M_r^{-1}(t)");
  PropertyCheck e = make_check("e", "M_r^{-1}(t)/t decreasing on (0,inf), increasing on (-inf,0)");
  if (coef.supports_m2()) {
    continuity(d, [&](double y, double r) { return big_M_inverse(coef, y, r); }, true);

    const int r_count = std::max(4, sample_budget / 500);
    const int y_count = 200;
    for (int k = 0; k < r_count; ++k) {
      const double r = r_at(halton(k, 1));
      for (double sign : {1.0, -1.0}) {
        double prev = std::numeric_limits<double>::quiet_NaN();
        for (int j = 1; j <= y_count; ++j) {
          const double y = sign * opts.y_range * j / y_count;
          const double ratio = big_M_inverse(coef, y, r) / y;
          if (!std::isnan(prev)) {
            // On both half-lines the ratio must fall as |y| grows.
            const double slack = 4.0 * kInverseTol / (floor * std::abs(y));
            record(e, prev - ratio + slack, "(y=" + fmt(y) + ", r=" + fmt(r) + ")");
          }
          prev = ratio;
        }
      }
    }
    finish(e);
  }
  report.checks.push_back(d);
  report.checks.push_back(e);
  return report;
}

M2Audit audit_m2_shape(const Coefficient& coef, const AuditBox& box, int r_samples, int t_samples) {
  M2Audit out;
  const sampling::Halton halton{7};
  for (int k = 0; k < r_samples; ++k) {
    const double r = std::max(0.0, box.r_low + halton(k, 0) * (box.r_high - box.r_low));
    for (int side = 0; side < 2; ++side) {
      const double extent = side == 0 ? box.t_high : -box.t_low;
      if (!(extent > 0.0)) continue;
      const double sign = side == 0 ? 1.0 : -1.0;
      double prev = coef.m(0.0, r);
      for (int j = 1; j <= t_samples; ++j) {
        const double t = sign * extent * j / t_samples;
        const double v = coef.m(t, r);
        // m_r must strictly grow moving away from 0 on either side.
        const double defect = prev - v;
        if (defect >= 0.0 && defect >= out.worst_defect) {
          out.pass = false;
          out.worst_defect = defect;
          out.witness = point(t, r);
        }
        prev = v;
      }
    }
  }
  return out;
}

}  // namespace kirchhoff
