#include "kirchhoff/verify.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "kirchhoff/elliptic.hpp"
#include "kirchhoff/error.hpp"
#include "kirchhoff/fixedpoint.hpp"

namespace kirchhoff {

namespace {

// Visits every difference cell on every axis, boundary cells included.
// `left`/`right` are node indices or -1 for a boundary node.
template <class Fn>
void for_each_edge(const Grid& grid, Fn&& fn) {
  const int nx = grid.n(0);
  const int ny = grid.dim() == 2 ? grid.n(1) : 1;
  for (int j = 0; j < ny; ++j)
    for (int c = 0; c <= nx; ++c) {
      const long l = c > 0 ? static_cast<long>(grid.index(c - 1, j)) : -1;
      const long r = c < nx ? static_cast<long>(grid.index(c, j)) : -1;
      fn(l, r, 0);
    }
  if (grid.dim() == 2)
    for (int i = 0; i < nx; ++i)
      for (int c = 0; c <= ny; ++c) {
        const long l = c > 0 ? static_cast<long>(grid.index(i, c - 1)) : -1;
        const long r = c < ny ? static_cast<long>(grid.index(i, c)) : -1;
        fn(l, r, 1);
      }
}

double at(std::span<const double> u, long k) { return k < 0 ? 0.0 : u[static_cast<std::size_t>(k)]; }

Field negate(Field u) {
  for (auto& v : u) v = -v;
  return u;
}

}  // namespace

double reconstruction_consistency(const Grid& grid, std::span<const double> u, std::span<const double> v) {
  const Field L4 = apply_laplacian_fourth_order(grid, u);
  double out = 0.0;
  for (std::size_t k = 0; k < u.size(); ++k)
    if (is_deep_interior(grid, k, 2)) out = std::max(out, std::abs(v[k] + L4[k]));
  return out;
}

ResidualReport fourth_order_residual(const Grid& grid, const Coefficient& coef, const SourceSpec& src,
                                     const SolutionBundle& bundle, std::uint64_t seed) {
  const auto& u = bundle.u;
  grid.check_conformal(u);
  const std::size_t n = u.size();
  const double s = bundle.S_value;
  const Field f = src.sample(grid, u);

  const Field lap = negate(apply_laplacian(grid, u));            // Δ_h u
  const Field bilap = negate(apply_laplacian(grid, lap));        // Δ_h Δ_h u
  Field div(n, 0.0);
  for_each_edge(grid, [&](long l, long r, int axis) {
    const double h = grid.h(axis);
    const double ul = at(u, l), ur = at(u, r);
    const double flux = coef.m(0.5 * (ul + ur), s) * (ur - ul) / h;
    if (l >= 0) div[static_cast<std::size_t>(l)] += flux / h;
    if (r >= 0) div[static_cast<std::size_t>(r)] -= flux / h;
  });

  ResidualReport rep;
  double l2 = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    if (!is_deep_interior(grid, k, 2)) continue;
    const double res = bilap[k] - div[k] - f[k];
    rep.fourth_order_linf = std::max(rep.fourth_order_linf, std::abs(res));
    l2 += res * res;
  }
  rep.fourth_order_l2 = std::sqrt(l2 * grid.cell_volume());

  Field Mu(n);
  for (std::size_t k = 0; k < n; ++k) Mu[k] = coef.M(u[k], s);
  const Field L4u = apply_laplacian_fourth_order(grid, u);
  const Field L4L4u = apply_laplacian_fourth_order(grid, L4u);
  const Field L4Mu = apply_laplacian_fourth_order(grid, Mu);
  for (std::size_t k = 0; k < n; ++k)
    if (is_deep_interior(grid, k, 4))
      rep.continuum_linf = std::max(rep.continuum_linf, std::abs(L4L4u[k] + L4Mu[k] - f[k]));

  if (!bundle.v.empty()) {
    for (std::size_t k = 0; k < n; ++k)
      rep.system_consistency_linf = std::max(rep.system_consistency_linf, std::abs(bundle.v[k] - lap[k]));
    rep.reconstruction_linf = reconstruction_consistency(grid, u, bundle.v);
  }

  // Weak identity of the discrete system solved at r = bundle.r.
  Field Mr(n);
  for (std::size_t k = 0; k < n; ++k) Mr[k] = coef.M(u[k], bundle.r);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  const double vol = grid.cell_volume();
  for (int t = 0; t < 20; ++t) {
    Field phi(n);
    for (auto& p : phi) p = U(rng);
    const Field lap_phi = negate(apply_laplacian(grid, phi));
    double a = 0.0;
    for (std::size_t k = 0; k < n; ++k) a += lap[k] * lap_phi[k] - f[k] * phi[k];
    for_each_edge(grid, [&](long l, long r, int axis) {
      const double h2 = grid.h(axis) * grid.h(axis);
      a += (at(Mr, r) - at(Mr, l)) * (at(phi, r) - at(phi, l)) / h2;
    });
    const double scale = l2_norm(grid, lap_phi);
    rep.weak_form_defect = std::max(rep.weak_form_defect, std::abs(a) * vol / scale);
  }
  return rep;
}

namespace {

struct DenseSystem {
  const Grid& grid;
  const Coefficient& coef;
  const SourceSpec& src;
  Eigen::MatrixXd A;
  int N = 0;
  bool with_r = true;
  double fixed_r = 0.0;

  DenseSystem(const Grid& g, const Coefficient& c, const SourceSpec& s) : grid(g), coef(c), src(s) {
    N = static_cast<int>(g.size());
    A.resize(N, N);
    Field e(g.size(), 0.0), col(g.size());
    for (int j = 0; j < N; ++j) {
      e[static_cast<std::size_t>(j)] = 1.0;
      apply_laplacian(g, e, col);
      for (int i = 0; i < N; ++i) A(i, j) = col[static_cast<std::size_t>(i)];
      e[static_cast<std::size_t>(j)] = 0.0;
    }
  }

  int size() const { return 2 * N + (with_r ? 1 : 0); }
  double r_of(const Eigen::VectorXd& x) const { return with_r ? x(2 * N) : fixed_r; }

  double f_at(int i, double t) const { return src(grid.node(static_cast<std::size_t>(i)), t); }

  Eigen::VectorXd residual(const Eigen::VectorXd& x) const {
    const auto z = x.head(N);
    const auto w = x.segment(N, N);
    const double r = r_of(x);
    Eigen::VectorXd F(size());
    const Eigen::VectorXd Az = A * z;
    const Eigen::VectorXd Aw = A * w;
    for (int i = 0; i < N; ++i) {
      F(i) = Az(i) + coef.M(z(i), r) - w(i);
      F(N + i) = Aw(i) - f_at(i, z(i));
    }
    if (with_r) F(2 * N) = r - grid.cell_volume() * z.dot(Az);
    return F;
  }

  Eigen::MatrixXd jacobian(const Eigen::VectorXd& x) const {
    const auto z = x.head(N);
    const double r = r_of(x);
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(size(), size());
    J.block(0, 0, N, N) = A;
    J.block(N, N, N, N) = A;
    for (int i = 0; i < N; ++i) {
      J(i, i) += coef.m(z(i), r);
      J(i, N + i) = -1.0;
      const double e = 1e-6 * std::max(1.0, std::abs(z(i)));
      J(N + i, i) = -(f_at(i, z(i) + e) - f_at(i, z(i) - e)) / (2.0 * e);
    }
    if (with_r) {
      // r column by finite differences; one-sided at r = 0.
      const double e = 1e-6 * std::max(1.0, r);
      const double lo = std::max(0.0, r - e), hi = r + e;
      for (int i = 0; i < N; ++i) J(i, 2 * N) = (coef.M(z(i), hi) - coef.M(z(i), lo)) / (hi - lo);
      const Eigen::VectorXd Az = A * z;
      J.block(2 * N, 0, 1, N) = (-2.0 * grid.cell_volume() * Az).transpose();
      J(2 * N, 2 * N) = 1.0;
    }
    return J;
  }

  bool converged(const Eigen::VectorXd& x, const Eigen::VectorXd& F) const {
    const double w_scale = std::max(1.0, x.segment(N, N).lpNorm<Eigen::Infinity>());
    double f_scale = 1.0;
    for (int i = 0; i < N; ++i) f_scale = std::max(f_scale, std::abs(f_at(i, x(i))));
    if (F.head(N).lpNorm<Eigen::Infinity>() > 1e-10 * w_scale) return false;
    if (F.segment(N, N).lpNorm<Eigen::Infinity>() > 1e-10 * f_scale) return false;
    if (with_r && std::abs(F(2 * N)) > 1e-12 * std::max(1.0, x(2 * N))) return false;
    return true;
  }
};

OracleResult run_oracle(DenseSystem& sys, const OracleOptions& opts) {
  const Grid& grid = sys.grid;
  const int N = sys.N;
  if (grid.size() > 1200) throw InvalidArgument("dense oracle limited to 1200 interior nodes");
  if (opts.starts < 1) throw InvalidArgument("oracle needs at least one start");

  const auto w0 = solve_poisson(grid, sys.src.sample(grid, grid.zeros())).w;
  const double w_inf = std::max(linf_norm(w0), 1e-3);
  const double z_amp = w_inf / sys.coef.m_floor();
  const double w2 = l2_norm(grid, w0);
  const double r_amp = 2.0 * w2 * w2 / lambda1(grid).discrete + 1.0;

  std::mt19937_64 rng(opts.seed);
  std::uniform_real_distribution<double> U(-1.0, 1.0);

  OracleResult out;
  out.starts = opts.starts;
  std::optional<Eigen::VectorXd> first;
  for (int s = 0; s < opts.starts; ++s) {
    Eigen::VectorXd x(sys.size());
    for (int i = 0; i < N; ++i) {
      x(i) = z_amp * U(rng);
      x(N + i) = w0[static_cast<std::size_t>(i)] + w_inf * U(rng);
    }
    if (sys.with_r) x(2 * N) = r_amp * 0.5 * (U(rng) + 1.0);

    Eigen::VectorXd F = sys.residual(x);
    bool ok = false;
    int it = 0;
    for (; it < opts.max_newton; ++it) {
      if (sys.converged(x, F)) {
        ok = true;
        break;
      }
      const Eigen::VectorXd d = sys.jacobian(x).partialPivLu().solve(-F);
      const double merit = 0.5 * F.squaredNorm();
      double alpha = 1.0;
      bool stepped = false;
      for (int k = 0; k < 40; ++k, alpha *= 0.5) {
        Eigen::VectorXd trial = x + alpha * d;
        if (sys.with_r) trial(2 * N) = std::max(0.0, trial(2 * N));
        Eigen::VectorXd Ft;
        try {
          Ft = sys.residual(trial);
        } catch (const Error&) {
          continue;
        }
        if (Ft.allFinite() && 0.5 * Ft.squaredNorm() <= (1.0 - 1e-4 * alpha) * merit) {
          x = std::move(trial);
          F = std::move(Ft);
          stepped = true;
          break;
        }
      }
      if (!stepped) break;
    }
    if (!ok) ok = sys.converged(x, F);
    if (!ok) continue;
    ++out.converged_starts;
    out.max_newton_iters = std::max(out.max_newton_iters, it);
    if (!first) {
      first = x;
    } else {
      out.spread = std::max(out.spread, (x - *first).lpNorm<Eigen::Infinity>());
    }
  }
  if (!first) throw ConvergenceError("dense oracle: no start converged");
  if (out.spread > opts.consensus_tol)
    throw ConvergenceError("dense oracle: converged starts disagree by " + std::to_string(out.spread));

  const Eigen::VectorXd& x = *first;
  auto& b = out.bundle;
  b.r = sys.r_of(x);
  b.u.assign(x.data(), x.data() + N);
  b.w.assign(x.data() + N, x.data() + 2 * N);
  b.v.resize(grid.size());
  double M_inf = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double M = sys.coef.M(b.u[i], b.r);
    M_inf = std::max(M_inf, std::abs(M));
    b.v[i] = M - b.w[i];
  }
  const double h10 = h10_norm(grid, b.u);
  b.S_value = h10 * h10;
  b.m_bound_slack = linf_norm(b.w) - M_inf;
  b.linf_bound_slack = linf_norm(b.w) / sys.coef.m_floor() - linf_norm(b.u);
  b.consistency_linf = reconstruction_consistency(grid, b.u, b.v);
  b.trace.converged = true;
  return out;
}

}  // namespace

OracleResult dense_oracle(const Grid& grid, const Coefficient& coef, const SourceSpec& src, const OracleOptions& opts) {
  if (grid.size() > 1200) throw InvalidArgument("dense oracle limited to 1200 interior nodes");
  DenseSystem sys(grid, coef, src);
  return run_oracle(sys, opts);
}

OracleResult dense_oracle_fixed_r(const Grid& grid, const Coefficient& coef, const SourceSpec& src, double r,
                                  const OracleOptions& opts) {
  if (grid.size() > 1200) throw InvalidArgument("dense oracle limited to 1200 interior nodes");
  if (r < 0.0) throw InvalidArgument("r must be non-negative");
  DenseSystem sys(grid, coef, src);
  sys.with_r = false;
  sys.fixed_r = r;
  return run_oracle(sys, opts);
}

double richardson_extrapolate(std::span<const double> h, std::span<const double> q) {
  if (h.size() != q.size() || h.size() < 3) throw InvalidArgument("Richardson needs three levels");
  const std::size_t o = h.size() - 3;
  Eigen::Matrix3d V;
  Eigen::Vector3d b;
  for (int i = 0; i < 3; ++i) {
    const double h2 = h[o + i] * h[o + i];
    V(i, 0) = 1.0;
    V(i, 1) = h2;
    V(i, 2) = h2 * h2;
    b(i) = q[o + i];
  }
  return V.fullPivLu().solve(b)(0);
}

namespace {

void fill_orders(RefinementTable& t) {
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    auto& row = t.rows[i];
    row.order = std::numeric_limits<double>::quiet_NaN();
    if (i == 0) continue;
    const auto& prev = t.rows[i - 1];
    if (row.error > 0.0 && prev.error > 0.0) row.order = std::log(prev.error / row.error) / std::log(prev.h / row.h);
  }
}

void check_levels(const std::vector<int>& n_list) {
  if (n_list.size() < 3) throw InvalidArgument("refinement study needs at least three levels");
  for (std::size_t i = 1; i < n_list.size(); ++i)
    if (n_list[i] <= n_list[i - 1]) throw InvalidArgument("refinement levels must be ascending");
}

}  // namespace

RefinementTable refinement_study(const std::vector<int>& n_list, const std::function<double(int)>& h_of_n,
                                 const std::function<double(int)>& quantity, std::optional<double> exact) {
  check_levels(n_list);
  RefinementTable t;
  std::vector<double> hs, qs;
  for (int n : n_list) {
    hs.push_back(h_of_n(n));
    qs.push_back(quantity(n));
  }
  t.closed_form = exact.has_value();
  t.reference = exact ? *exact : richardson_extrapolate(hs, qs);
  for (std::size_t i = 0; i < n_list.size(); ++i)
    t.rows.push_back({n_list[i], hs[i], qs[i], std::abs(qs[i] - t.reference), 0.0});
  fill_orders(t);
  return t;
}

RefinementTable refinement_errors(const std::vector<int>& n_list, const std::function<double(int)>& h_of_n,
                                  const std::function<double(int)>& error_of) {
  check_levels(n_list);
  RefinementTable t;
  t.closed_form = true;
  for (int n : n_list) {
    const double e = error_of(n);
    t.rows.push_back({n, h_of_n(n), e, e, 0.0});
  }
  fill_orders(t);
  return t;
}

RefinementTable refinement_study(const Domain& domain, const Coefficient& coef, const SourceSpec& src,
                                 const std::vector<int>& n_list, std::optional<double> exact, double tol) {
  auto h_of_n = [&](int n) { return domain.bounds(0).length() / (n + 1); };
  auto r_star = [&](int n) {
    std::vector<int> per_axis(static_cast<std::size_t>(domain.dim()), n);
    CoupledOptions copts;
    copts.diagnostics = false;
    return find_fixed_point(build_grid(domain, per_axis), coef, src, tol, copts).r_star;
  };
  return refinement_study(n_list, h_of_n, r_star, exact);
}

}  // namespace kirchhoff
