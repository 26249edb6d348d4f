// Acceptance suite: one PASS/FAIL line per criterion, exit status = number
// of failed criteria.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "kirchhoff/coefficient.hpp"
#include "kirchhoff/fixedpoint.hpp"
#include "kirchhoff/hypothesis.hpp"
#include "kirchhoff/verify.hpp"
#include "regression_set.hpp"

using namespace kirchhoff;
using std::numbers::pi;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

double max_diff(const Field& a, const Field& b) {
  double d = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) d = std::max(d, std::abs(a[k] - b[k]));
  return d;
}

double fit_order(double e0, double e1, double h0, double h1) { return std::log(e0 / e1) / std::log(h0 / h1); }

/// Root of r (2 + r)^2 = pi/2 by bisection on [0, 1].
double cubic_root() {
  double lo = 0.0, hi = 1.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (mid * (2.0 + mid) * (2.0 + mid) < pi / 2 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

SourceSpec sine() { return regression::source("sin(x)", 1.0); }

SourceSpec tanh_load() { return regression::source("sin(x) + 0.1*tanh(t)", 1.0, 0.1, 1.0, 0.1); }

/// r values at which a fixed-point search evaluated S.
std::vector<double> evaluated_r(const FixedPointResult& fp) {
  std::vector<double> r{0.0, fp.R, fp.r_star};
  for (const auto& s : fp.bracket_history) r.push_back(s.r_trial);
  return r;
}

Outcome linear_benchmark() {
  Outcome o;
  const auto t0 = Clock::now();
  for (double floor : {1.0, 2.5}) {
    std::vector<double> err, h;
    for (int n : {64, 128, 256}) {
      const auto g = build_grid(Domain::interval(0.0, pi), {n});
      const auto fp = find_fixed_point(g, Coefficient::constant(floor), sine(), 1e-10);
      double e = 0.0;
      for (std::size_t k = 0; k < g.size(); ++k)
        e = std::max(e, std::abs(fp.bundle.u[k] - std::sin(g.node(k).x) / (1.0 + floor)));
      err.push_back(e);
      h.push_back(g.h(0));
    }
    const double p1 = fit_order(err[0], err[1], h[0], h[1]), p2 = fit_order(err[1], err[2], h[1], h[2]);
    const bool ok = err[2] <= 5e-4 && std::abs(p1 - 2.0) <= 0.3 && std::abs(p2 - 2.0) <= 0.3;
    o.pass = o.pass && ok;
    o.detail += "m=" + fmt("%g", floor) + ": err256=" + fmt("%.3e", err[2]) + " orders=" + fmt("%.3f", p1) + "," +
                fmt("%.3f", p2) + "; ";
  }
  const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
  o.pass = o.pass && secs < 1.0;
  o.detail += fmt("%.3f s (< 1 s)", secs);
  return o;
}

Outcome nonlocal_benchmark() {
  Outcome o;
  const auto t0 = Clock::now();
  std::vector<double> h, r;
  for (int n : {64, 128, 256}) {
    const auto g = build_grid(Domain::interval(0.0, pi), {n});
    r.push_back(find_fixed_point(g, Coefficient::affine_in_r(1.0, 1.0), sine(), 1e-12).r_star);
    h.push_back(g.h(0));
  }
  const double rich = richardson_extrapolate(h, r);
  const double root = cubic_root();
  const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
  o.pass = std::abs(rich - root) <= 1e-3 && secs < 10.0;
  o.detail = "richardson r*=" + fmt("%.12f", rich) + " bisection root=" + fmt("%.12f", root) +
             " diff=" + fmt("%.2e", std::abs(rich - root)) + "; " + fmt("%.3f s (< 10 s)", secs);
  return o;
}

Outcome apriori_suite() {
  Outcome o;
  int runs = 0, violations = 0;
  double worst_m = 1e300, worst_z = 1e300;
  for (const auto& c : regression::cases()) {
    const auto g = build_grid(c.domain, c.n);
    const AuxiliarySolver solver(g, c.coef, c.src);
    const auto fp = find_fixed_point(solver, {});
    for (double r : evaluated_r(fp)) {
      const auto b = solver.solve(r);
      double m_inf = 0.0;
      for (double u : b.u) m_inf = std::max(m_inf, std::abs(big_M(c.coef, u, r)));
      const double w_inf = linf_norm(b.w);
      const double sm = w_inf + 1e-9 - m_inf;
      const double sz = w_inf / c.coef.m_floor() + 1e-9 - linf_norm(b.u);
      worst_m = std::min(worst_m, sm);
      worst_z = std::min(worst_z, sz);
      if (sm < 0.0 || sz < 0.0) {
        ++violations;
        o.detail += c.name + "@r=" + fmt("%g", r) + " ";
      }
      ++runs;
    }
  }
  o.pass = violations == 0;
  o.detail += std::to_string(runs) + " solves over 20 configs, violations=" + std::to_string(violations) +
              " min slack |M|=" + fmt("%.3e", worst_m) + " |z|=" + fmt("%.3e", worst_z);
  return o;
}

/// Relative slack as used by the monitors.
double rel(double bound, double value) { return (bound - value) / std::max(std::abs(bound), 1e-12); }

struct MonitorTally {
  int runs = 0;
  int checks = 0;
  int violations = 0;
  double worst_est1 = 1e300, worst_finish = 1e300, worst_est2 = 1e300;
};

/// est1, finish with C1 = max(1, mu |Omega|^½ / lambda^½), C2 = nu |Omega|^(1-delta) / lambda^((1+3delta)/2),
/// and est2, each rebuilt from the recorded norms.
void check_monitors(const Grid& g, const Coefficient& coef, const SourceParams& p, const SolutionBundle& b,
                    MonitorTally& t) {
  const double lam = lambda1(g).discrete;
  const double vol = g.domain().volume();
  const double C1 = std::max(1.0, p.mu_bound * std::sqrt(vol / lam));
  const double C2 = p.nu * std::pow(vol, 1.0 - p.delta) / std::pow(lam, (1.0 + 3.0 * p.delta) / 2.0);
  const auto& s = b.trace.steps;
  ++t.runs;
  auto note = [&](double slack, double& worst) {
    ++t.checks;
    worst = std::min(worst, slack);
    if (slack < -1e-6) ++t.violations;
  };
  for (std::size_t i = 0; i < s.size(); ++i) {
    const bool last = i + 1 == s.size();
    const double z_next_h10 = last ? h10_norm(g, b.u) : s[i + 1].z_h10;
    const double z_next_linf = last ? linf_norm(b.u) : s[i + 1].z_linf;
    note(rel(s[i].w_h10 / lam, z_next_h10), t.worst_est1);
    note(rel(s[i].w_linf / coef.m_floor(), z_next_linf), t.worst_est2);
    if (i > 0) note(rel(C1 + C2 * std::pow(s[i - 1].w_h10, p.delta), s[i].w_h10), t.worst_finish);
  }
}

Outcome picard_monitors() {
  Outcome o;
  MonitorTally t;
  for (const auto& c : regression::cases()) {
    if (c.src.kind() != SourceKind::XAndU) continue;
    const auto g = build_grid(c.domain, c.n);
    if (audit(g, c.coef, c.src).overall == AuditStatus::Fail) continue;
    const AuxiliarySolver solver(g, c.coef, c.src);
    const auto fp = find_fixed_point(solver, {});
    for (double r : evaluated_r(fp)) check_monitors(g, c.coef, c.src.params(), solver.solve_picard(r), t);
  }
  const auto g = build_grid(Domain::interval(0.0, pi), {64});
  check_monitors(g, Coefficient::constant(1.0), tanh_load().params(),
                 solve_aux_picard(g, Coefficient::constant(1.0), tanh_load(), 0.0), t);
  o.pass = t.violations == 0 && t.runs > 0;
  o.detail = std::to_string(t.runs) + " Picard runs, " + std::to_string(t.checks) +
             " checks, violations=" + std::to_string(t.violations) + " min slack est1=" + fmt("%.3e", t.worst_est1) +
             " finish=" + fmt("%.3e", t.worst_finish) + " est2=" + fmt("%.3e", t.worst_est2);
  return o;
}

Outcome uniqueness() {
  Outcome o;
  const auto g = build_grid(Domain::interval(0.0, pi), {64});
  const AuxiliarySolver solver(g, Coefficient::constant(1.0), tanh_load());
  const double r_star = find_fixed_point(solver, {}).r_star;
  std::mt19937_64 rng(2024);
  std::vector<Field> limits;
  for (int s = 0; s < 10; ++s) {
    std::uniform_real_distribution<double> amp(-5.0, 5.0);
    Field z(g.size());
    for (auto& v : z) v = amp(rng);
    limits.push_back(solver.solve_picard(r_star, z).u);
  }
  double worst = 0.0;
  for (std::size_t i = 0; i < limits.size(); ++i)
    for (std::size_t j = i + 1; j < limits.size(); ++j) worst = std::max(worst, max_diff(limits[i], limits[j]));
  o.pass = worst <= 1e-8;
  o.detail = "10 random starts at r*=" + fmt("%.6f", r_star) + ", max pairwise |u_i - u_j|_inf=" + fmt("%.3e", worst);
  return o;
}

Outcome oracle_equivalence() {
  Outcome o;
  const auto t0 = Clock::now();
  double worst_u = 0.0, worst_w = 0.0, worst_r = 0.0;
  int instances = 0;
  for (const auto& c : regression::cases()) {
    const bool small = c.domain.dim() == 1 ? c.n[0] <= 32 : (c.n[0] <= 16 && c.n[1] <= 16);
    if (!small) continue;
    const auto g = build_grid(c.domain, c.n);
    try {
      const auto fp = find_fixed_point(g, c.coef, c.src, 1e-12);
      const auto oracle = dense_oracle(g, c.coef, c.src);
      const double du = max_diff(fp.bundle.u, oracle.bundle.u);
      const double dw = max_diff(fp.bundle.w, oracle.bundle.w);
      const double dr = std::abs(fp.r_star - oracle.bundle.r);
      worst_u = std::max(worst_u, du);
      worst_w = std::max(worst_w, dw);
      worst_r = std::max(worst_r, dr);
      if (du > 1e-7 || dw > 1e-7 || dr > 1e-7) {
        o.pass = false;
        o.detail += c.name + " ";
      }
    } catch (const Error& e) {
      o.pass = false;
      o.detail += c.name + "(" + e.what() + ") ";
    }
    ++instances;
  }
  const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
  o.pass = o.pass && secs < 60.0 && instances == 20;
  o.detail += std::to_string(instances) + " instances, max diff u=" + fmt("%.2e", worst_u) + " w=" +
              fmt("%.2e", worst_w) + " r=" + fmt("%.2e", worst_r) + "; " + fmt("%.2f s (< 60 s)", secs);
  return o;
}

Outcome primitive_properties() {
  Outcome o;
  std::map<std::string, Coefficient> coefs;
  for (const auto& c : regression::cases()) coefs.emplace(c.coef.description(), c.coef);
  for (auto c : {regression::coefficient("1 + t^2", 1.0, true), regression::coefficient("1 + abs(sin(t))", 1.0, false),
                 Coefficient::polynomial_in_t({2.0, 0.0, 0.5, 0.0, 0.1}, 2.0, true, 1.0)})
    coefs.emplace(c.description(), c);
  int flagged = 0, violations = 0, min_a = 1 << 30, min_c = 1 << 30;
  for (const auto& [name, coef] : coefs) {
    const auto rep = check_lemma_properties(coef, 10000);
    const auto& a = rep.get("a");
    const auto& c = rep.get("c");
    min_a = std::min(min_a, a.samples);
    min_c = std::min(min_c, c.samples);
    bool ok = a.status == CheckStatus::Pass && c.status == CheckStatus::Pass && a.samples >= 10000 &&
              c.samples >= 1000;
    if (coef.supports_m2()) {
      ++flagged;
      ok = ok && rep.get("e").status == CheckStatus::Pass;
    }
    for (const auto& ch : rep.checks) violations += ch.violations;
    if (!ok) {
      o.pass = false;
      o.detail += name + " ";
    }
  }
  o.pass = o.pass && violations == 0;
  o.detail += std::to_string(coefs.size()) + " coefficients (" + std::to_string(flagged) +
              " shape-flagged), samples a>=" + std::to_string(min_a) + " c pairs>=" + std::to_string(min_c) +
              ", violations=" + std::to_string(violations);
  return o;
}

Outcome bracket_invariant() {
  Outcome o;
  int runs = 0, steps = 0;
  double worst_gap = 0.0;
  std::vector<std::pair<Coefficient, SourceSpec>> problems{{Coefficient::affine_in_r(1.0, 1.0), sine()}};
  std::vector<Domain> domains{Domain::interval(0.0, pi)};
  for (const auto& c : regression::cases())
    if (c.domain.dim() == 1) {
      problems.emplace_back(c.coef, c.src);
      domains.push_back(c.domain);
    }
  for (std::size_t i = 0; i < problems.size(); ++i) {
    const auto g = build_grid(domains[i], {128});
    const auto& [coef, src] = problems[i];
    const auto fp = find_fixed_point(g, coef, src, 1e-8);
    bool ok = fp.bracket_invariant;
    for (const auto& s : fp.bracket_history) {
      ok = ok && s.g_lo > 0.0 && s.g_hi < 0.0 && s.r_lo < s.r_trial && s.r_trial < s.r_hi;
      ++steps;
    }
    const double gap = std::abs(eval_S(g, coef, src, fp.r_star) - fp.r_star);
    worst_gap = std::max(worst_gap, gap);
    if (!ok || gap > 1e-8) {
      o.pass = false;
      o.detail += "run " + std::to_string(i) + " ";
    }
    ++runs;
  }
  o.detail += std::to_string(runs) + " searches at n=128, " + std::to_string(steps) +
              " bracket steps, max |S(r*) - r*|=" + fmt("%.2e", worst_gap);
  return o;
}

Outcome reconstruction() {
  Outcome o;
  const std::vector<std::pair<std::string, Coefficient>> bench{{"m=1", Coefficient::constant(1.0)},
                                                               {"m=1+r", Coefficient::affine_in_r(1.0, 1.0)}};
  for (const auto& [name, coef] : bench) {
    std::vector<double> e;
    for (int n : {63, 127, 255}) {
      const auto g = build_grid(Domain::interval(0.0, pi), {n});
      const auto fp = find_fixed_point(g, coef, sine(), 1e-12);
      e.push_back(reconstruction_consistency(g, fp.bundle.u, fp.bundle.v));
    }
    const double q1 = e[0] / e[1], q2 = e[1] / e[2];
    const bool ok = q1 >= 3.4 && q1 <= 4.6 && q2 >= 3.4 && q2 <= 4.6;
    o.pass = o.pass && ok;
    o.detail += name + ": " + fmt("%.3e", e[0]) + " -> " + fmt("%.3e", e[1]) + " -> " + fmt("%.3e", e[2]) +
                " ratios " + fmt("%.3f", q1) + ", " + fmt("%.3f", q2) + "; ";
  }
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"linear benchmark", linear_benchmark},
      {"nonlocal benchmark", nonlocal_benchmark},
      {"a-priori bounds on the regression set", apriori_suite},
      {"Picard monitors", picard_monitors},
      {"uniqueness of the Picard limit", uniqueness},
      {"staged solver vs dense oracle", oracle_equivalence},
      {"primitive properties", primitive_properties},
      {"fixed-point bracket invariant", bracket_invariant},
      {"reconstruction consistency", reconstruction},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    const auto t0 = Clock::now();
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failed;
    const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
    std::printf("criterion %zu %s: %s | %s [%.2f s]\n", i + 1, o.pass ? "PASS" : "FAIL", criteria[i].first,
                o.detail.c_str(), secs);
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed;
}
