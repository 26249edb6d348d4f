#include "kirchhoff/fixedpoint.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <limits>
#include <mutex>
#include <thread>

#include "kirchhoff/error.hpp"

namespace kirchhoff {

RootResult bracketed_root(const std::function<double(double)>& g, double a, double b, double ga, double gb,
                          double tol) {
  if (!(tol > 0.0)) throw InvalidArgument("root tolerance must be positive");
  if (!(a < b)) throw InvalidArgument("bracket needs a < b");
  if (!(ga > 0.0 && gb < 0.0)) throw InvalidArgument("bracket needs g(a) > 0 > g(b)");

  RootResult out;
  double lo = a, hi = b, g_lo = ga, g_hi = gb;
  double w_lo = ga, w_hi = gb;  // Illinois-weighted values used for the secant
  int last_side = 0;
  const int n_max = std::max(0, static_cast<int>(std::ceil(std::log2((b - a) / (2.0 * tol))))) + 1;

  for (int k = 0; hi - lo > 2.0 * tol; ++k) {
    const double mid = 0.5 * (lo + hi);
    const double secant = (lo * w_hi - hi * w_lo) / (w_hi - w_lo);
    const double radius = std::max(0.0, std::ldexp(tol, n_max - k) - 0.5 * (hi - lo));
    double x = std::clamp(secant, mid - radius, mid + radius);
    if (!(x > lo && x < hi)) x = mid;

    const double gx = g(x);
    ++out.evaluations;
    out.history.push_back({lo, g_lo, hi, g_hi, x, gx});
    if (std::abs(gx) <= tol) {
      out.x = x;
      out.gx = gx;
      out.converged = true;
      return out;
    }
    if (gx > 0.0) {
      lo = x;
      g_lo = w_lo = gx;
      if (last_side == 1) w_hi *= 0.5;
      last_side = 1;
    } else {
      hi = x;
      g_hi = w_hi = gx;
      if (last_side == -1) w_lo *= 0.5;
      last_side = -1;
    }
    if (!(g_lo > 0.0 && g_hi < 0.0)) out.invariant = false;
  }
  // Bracket collapsed below the resolution: report the better end.
  if (std::abs(g_lo) <= std::abs(g_hi)) {
    out.x = lo;
    out.gx = g_lo;
  } else {
    out.x = hi;
    out.gx = g_hi;
  }
  out.converged = std::abs(out.gx) <= tol;
  return out;
}

double eval_S(const AuxiliarySolver& solver, double r) {
  if (r < 0.0) throw InvalidArgument("S is defined for r >= 0");
  return solver.S(r);
}

double eval_S(const Grid& grid, const Coefficient& coef, const SourceSpec& src, double r) {
  return eval_S(AuxiliarySolver(grid, coef, src), r);
}

UpperBracket upper_bracket_checked(const AuxiliarySolver& solver) {
  const auto& c = solver.constants();
  const double lam = c.lambda1;
  UpperBracket ub;
  bool have_bound = true;
  if (solver.source().kind() == SourceKind::PureX) {
    const double w2 = l2_norm(solver.grid(), solver.cached_w());
    ub.R = 2.0 * w2 * w2 / lam + 1.0;
  } else {
    const auto& p = solver.source().params();
    const double base = p.mu_bound * std::sqrt(solver.grid().domain().volume()) / std::sqrt(lam);
    const double C2 = std::max(c.C2, c.C2_sharp);
    if (p.delta == 1.0) {
      have_bound = C2 < 1.0;
      if (have_bound) ub.B = base / (1.0 - C2);
    } else {
      double B = base;
      for (int it = 0; it < 100; ++it) B = 0.5 * B + 0.5 * (base + C2 * std::pow(B, p.delta));
      ub.B = B;
    }
    ub.R = 2.0 * ub.B * ub.B / std::min(lam, lam * lam) + 1.0;
  }
  if (!have_bound) {
    // No a-priori bound on ||w||: expand from S(0).
    auto b0 = solver.solve(0.0);
    ++ub.evaluations;
    ub.R = std::max(1.0, 2.0 * b0.S_value);
  }
  for (int doubling = 0; doubling <= 60; ++doubling) {
    ub.bundle = solver.solve(ub.R);
    ++ub.evaluations;
    ub.g_R = ub.bundle.S_value - ub.R;
    if (ub.g_R < 0.0) return ub;
    ub.R *= 2.0;
  }
  throw ConvergenceError("no r with S(r) < r found up to " + std::to_string(ub.R));
}

double upper_bracket(const AuxiliarySolver& solver) { return upper_bracket_checked(solver).R; }

FixedPointResult find_fixed_point(const AuxiliarySolver& solver, const FixedPointOptions& opts) {
  if (!(opts.tol > 0.0)) throw InvalidArgument("fixed-point tolerance must be positive");
  FixedPointResult out;

  double best = std::numeric_limits<double>::infinity();
  auto keep = [&](SolutionBundle&& b) {
    const double gap = std::abs(b.S_value - b.r);
    if (gap < best) {
      best = gap;
      out.bundle = std::move(b);
    }
  };
  auto g = [&](double r) {
    auto b = solver.solve(r);
    ++out.evaluations;
    const double value = b.S_value - r;
    keep(std::move(b));
    return value;
  };

  auto settle = [&] {
    out.r_star = out.bundle.r;
    out.S_at_star = out.bundle.S_value;
    out.gap = std::abs(out.S_at_star - out.r_star);
    out.converged = out.gap <= opts.tol;
  };

  if (opts.method == FixedPointMethod::Damped) {
    if (!(opts.omega > 0.0 && opts.omega <= 1.0)) throw InvalidArgument("omega must lie in (0, 1]");
    double r = 0.0;
    for (int k = 0; k < opts.max_damped; ++k) {
      const double gr = g(r);
      if (std::abs(gr) <= opts.tol) break;
      r = std::max(0.0, r + opts.omega * gr);
    }
    settle();
    return out;
  }

  const double g0 = g(0.0);
  if (g0 <= opts.tol) {
    // S(0) within tol of 0: the trivial load.
    settle();
    return out;
  }
  auto ub = upper_bracket_checked(solver);
  out.evaluations += ub.evaluations;
  out.R = ub.R;
  keep(std::move(ub.bundle));

  const auto root = bracketed_root(g, 0.0, ub.R, g0, ub.g_R, opts.tol);
  out.bracket_history = root.history;
  out.bracket_invariant = root.invariant;
  settle();
  return out;
}

FixedPointResult find_fixed_point(const Grid& grid, const Coefficient& coef, const SourceSpec& src, double tol,
                                  const CoupledOptions& copts) {
  FixedPointOptions opts;
  opts.tol = tol;
  return find_fixed_point(AuxiliarySolver(grid, coef, src, copts), opts);
}

int sweep_threads(int requested) {
  int cap = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  if (const char* env = std::getenv("KIRCHHOFF_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) cap = v;
  }
  return requested > 0 ? std::min(requested, cap) : cap;
}

Grid coarsen(const Grid& grid) {
  std::vector<int> n;
  for (int a = 0; a < grid.dim(); ++a) {
    const int m = (grid.n(a) - 1) / 2;
    if (m < 2) throw InvalidArgument("grid too small to coarsen");
    n.push_back(m);
  }
  return build_grid(grid.domain(), n);
}

namespace {

void evaluate_all(const AuxiliarySolver& solver, const std::vector<double>& r, int threads,
                  std::vector<SolutionBundle>& out) {
  out.assign(r.size(), SolutionBundle{});
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto work = [&] {
    for (std::size_t i = next++; i < r.size(); i = next++) {
      try {
        out[i] = solver.solve(r[i]);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const int workers = std::max(1, std::min<int>(threads, static_cast<int>(r.size())));
  std::vector<std::thread> pool;
  for (int t = 1; t < workers; ++t) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

double max_adjacent(const std::vector<double>& s) {
  double v = 0.0;
  for (std::size_t i = 1; i < s.size(); ++i) v = std::max(v, std::abs(s[i] - s[i - 1]));
  return v;
}

}  // namespace

SCurve sweep_S(const AuxiliarySolver& solver, const std::vector<double>& r_values, const SweepOptions& opts) {
  for (std::size_t i = 0; i < r_values.size(); ++i) {
    if (r_values[i] < 0.0) throw InvalidArgument("sweep values must be non-negative");
    if (i > 0 && r_values[i] < r_values[i - 1]) throw InvalidArgument("sweep values must be sorted");
  }
  const int threads = sweep_threads(opts.threads);
  std::vector<SolutionBundle> fine;
  evaluate_all(solver, r_values, threads, fine);

  SCurve curve;
  std::vector<double> S_fine, S_coarse;
  for (std::size_t i = 0; i < r_values.size(); ++i) {
    SCurveSample s;
    s.r = r_values[i];
    s.S = fine[i].S_value;
    s.newton_iters = fine[i].newton_iters;
    s.picard_steps = static_cast<int>(fine[i].trace.steps.size());
    s.picard_converged = fine[i].trace.converged;
    s.S_coarse = std::numeric_limits<double>::quiet_NaN();
    S_fine.push_back(s.S);
    curve.samples.push_back(s);
  }
  curve.max_adjacent_variation = max_adjacent(S_fine);
  for (std::size_t i = 1; i < curve.samples.size(); ++i) {
    const double g0 = curve.samples[i - 1].S - curve.samples[i - 1].r;
    const double g1 = curve.samples[i].S - curve.samples[i].r;
    if ((g0 > 0.0) != (g1 > 0.0) || g0 == 0.0) curve.sign_changes.emplace_back(curve.samples[i - 1].r, curve.samples[i].r);
  }
  if (!curve.sign_changes.empty()) curve.bracket = curve.sign_changes.front();

  if (opts.coarse_comparison) {
    CoupledOptions copts = solver.options();
    copts.diagnostics = false;
    const AuxiliarySolver coarse(coarsen(solver.grid()), solver.coefficient(), solver.source(), copts);
    curve.coarse_n = coarse.grid().n(0);
    std::vector<SolutionBundle> rough;
    evaluate_all(coarse, r_values, threads, rough);
    for (std::size_t i = 0; i < rough.size(); ++i) {
      curve.samples[i].S_coarse = rough[i].S_value;
      S_coarse.push_back(rough[i].S_value);
      curve.resolution_gap = std::max(curve.resolution_gap, std::abs(rough[i].S_value - S_fine[i]));
    }
    curve.coarse_max_adjacent_variation = max_adjacent(S_coarse);
  }
  return curve;
}

SCurve sweep_S(const Grid& grid, const Coefficient& coef, const SourceSpec& src, const std::vector<double>& r_values,
               const SweepOptions& opts, const CoupledOptions& copts) {
  return sweep_S(AuxiliarySolver(grid, coef, src, copts), r_values, opts);
}

}  // namespace kirchhoff
