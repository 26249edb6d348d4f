#include "kirchhoff/hypothesis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "kirchhoff/elliptic.hpp"
#include "kirchhoff/error.hpp"
#include "kirchhoff/sampling.hpp"

namespace kirchhoff {

const char* to_string(AuditStatus s) {
  switch (s) {
    case AuditStatus::Pass:
      return "Pass";
    case AuditStatus::PassWithSurrogateGamma:
      return "PassWithSurrogateGamma";
    case AuditStatus::Fail:
      return "Fail";
  }
  return "Fail";
}

namespace {

std::string describe(Point x, double t) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "(x=%.6g, y=%.6g, t=%.6g)", x.x, x.y, t);
  return buf;
}

void note(SampledCheck& c, double margin, const std::string& witness) {
  ++c.samples;
  if (c.samples == 1 || margin < c.worst) {
    c.worst = margin;
    c.witness = witness;
  }
  if (margin < 0.0) c.pass = false;
}

}  // namespace

HypothesisReport audit(const Grid& grid, const Coefficient& coef, const SourceSpec& src, const AuditOptions& opts) {
  HypothesisReport rep;
  const auto& dom = grid.domain();
  const auto& p = src.params();
  const auto& box = opts.box;
  rep.lambda1 = dom.lambda1();
  rep.lambda1_discrete = lambda1(grid).discrete;
  rep.gamma = estimate_gamma(grid);
  rep.volume = dom.volume();

  const sampling::Halton halton{opts.seed};
  auto lerp = [](double lo, double hi, double u) { return lo + u * (hi - lo); };

  // Floor and finiteness of m over the audit box.
  rep.m_floor.declared = coef.m_floor();
  rep.m_floor.sampled_min = std::numeric_limits<double>::infinity();
  for (int k = 0; k < opts.samples; ++k) {
    const double t = lerp(box.t_low, box.t_high, halton(k, 0));
    const double r = std::max(0.0, lerp(box.r_low, box.r_high, halton(k, 1)));
    double m = std::numeric_limits<double>::quiet_NaN();
    try {
      m = coef.m(t, r);
    } catch (const Error&) {
    }
    if (!std::isfinite(m) || m < rep.m_floor.sampled_min) {
      rep.m_floor.sampled_min = std::isfinite(m) ? m : -std::numeric_limits<double>::infinity();
      char buf[64];
      std::snprintf(buf, sizeof buf, "(t=%.6g, r=%.6g)", t, r);
      rep.m_floor.witness = buf;
      if (!std::isfinite(m)) break;
    }
  }
  rep.m_floor.pass = rep.m_floor.sampled_min >= rep.m_floor.declared * (1.0 - 1e-12);
  if (coef.supports_m2()) rep.m2 = audit_m2_shape(coef, box);

  // f at t = 0 on the grid nodes: non-triviality.
  try {
    for (std::size_t k = 0; k < grid.size(); ++k)
      rep.f1_max_abs = std::max(rep.f1_max_abs, std::abs(src(grid.node(k), 0.0)));
  } catch (const Error&) {
    rep.f1_max_abs = std::numeric_limits<double>::quiet_NaN();
  }
  rep.f1_pass = rep.f1_max_abs > 0.0;

  auto point_at = [&](int k) {
    Point x{lerp(dom.bounds(0).low, dom.bounds(0).high, halton(k, 2)), 0.0};
    if (dom.dim() == 2) x.y = lerp(dom.bounds(1).low, dom.bounds(1).high, halton(k, 3));
    return x;
  };

  const bool xu = src.kind() == SourceKind::XAndU;
  rep.pure_x.applicable = !xu;
  rep.lipschitz.applicable = xu;
  for (int k = 0; k < opts.samples; ++k) {
    const Point x = point_at(k);
    const double t1 = lerp(box.t_low, box.t_high, halton(k, 0));
    const double t2 = lerp(box.t_low, box.t_high, halton(k, 4));
    double f1, f2, f0;
    try {
      f1 = src(x, t1);
      f2 = src(x, t2);
      f0 = src(x, 0.0);
    } catch (const Error& e) {
      note(rep.growth, -std::numeric_limits<double>::infinity(), describe(x, t1) + ": " + e.what());
      continue;
    }
    const double bound = p.mu_bound + p.nu * std::pow(std::abs(t1), p.delta);
    note(rep.growth, bound * (1.0 + 1e-12) + 1e-14 - std::abs(f1), describe(x, t1));
    note(rep.growth, p.mu_bound * (1.0 + 1e-12) + 1e-14 - std::abs(f0), describe(x, 0.0));
    if (xu) {
      const double lip = p.theta * std::abs(t1 - t2) * (1.0 + 1e-9) + 1e-13 * (1.0 + std::abs(f1));
      note(rep.lipschitz, lip - std::abs(f1 - f2), describe(x, t1));
    } else {
      note(rep.pure_x, 1e-14 * (1.0 + std::abs(f1)) - std::abs(f1 - f2), describe(x, t1));
    }
  }

  rep.delta_pass = p.delta > 0.0 && p.delta <= 1.0;
  if (p.q) rep.q_pass = *p.q > 0.5 * dom.dim();

  rep.nu_bound.applicable = rep.theta_bound.applicable = xu;
  rep.nu_bound.nu = p.nu;
  rep.nu_bound.limit1 = std::pow(rep.lambda1, (1.0 + 3.0 * p.delta) / 2.0) / std::pow(rep.volume, 1.0 - p.delta);
  rep.nu_bound.limit2 = std::pow(coef.m_floor(), p.delta) / rep.gamma;
  rep.nu_bound.gamma_binding = rep.nu_bound.limit2 < rep.nu_bound.limit1;
  rep.theta_bound.theta = p.theta;
  rep.theta_bound.limit = rep.lambda1 * rep.lambda1;
  if (xu) {
    rep.nu_bound.pass = p.nu < std::min(rep.nu_bound.limit1, rep.nu_bound.limit2);
    rep.theta_bound.pass = p.theta < rep.theta_bound.limit;
  }

  auto fail_if = [&](bool bad, const char* what) {
    if (bad) rep.failures.emplace_back(what);
  };
  fail_if(!rep.m_floor.pass, "m_floor");
  fail_if(rep.m2 && !rep.m2->pass, "m2");
  fail_if(!rep.f1_pass, "f1");
  fail_if(!rep.pure_x.pass, "pure_x");
  fail_if(!rep.growth.pass, "f2_growth");
  fail_if(!rep.lipschitz.pass, "f3_lipschitz");
  fail_if(!rep.nu_bound.pass, "nu_bound");
  fail_if(!rep.theta_bound.pass, "theta_bound");
  fail_if(!rep.delta_pass, "delta");
  fail_if(!rep.q_pass, "q");

  if (!rep.failures.empty()) {
    rep.overall = AuditStatus::Fail;
  } else if (xu && rep.nu_bound.gamma_binding) {
    rep.overall = AuditStatus::PassWithSurrogateGamma;
  } else {
    rep.overall = AuditStatus::Pass;
  }
  return rep;
}

}  // namespace kirchhoff
