#include "doctest.h"

#include <cmath>
#include <numbers>

#include "kirchhoff/elliptic.hpp"
#include "kirchhoff/fixedpoint.hpp"
#include "kirchhoff/verify.hpp"
#include "regression_set.hpp"

using namespace kirchhoff;
using regression::source;
using std::numbers::pi;

namespace {

double max_diff(const Field& a, const Field& b) {
  double d = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) d = std::max(d, std::abs(a[k] - b[k]));
  return d;
}

constexpr double kCubicRoot = 0.2975663147484344;

}  // namespace

TEST_CASE("residuals vanish for a zero load") {
  const auto g = build_grid(Domain::interval(0, pi), {32});
  const auto src = source("0", 0);
  const auto b = solve_aux_fixed_f(g, Coefficient::affine_in_r(1, 1), src, 0.0);
  const auto res = fourth_order_residual(g, Coefficient::affine_in_r(1, 1), src, b);
  CHECK(res.fourth_order_linf == 0.0);
  CHECK(res.continuum_linf == 0.0);
  CHECK(res.weak_form_defect == 0.0);
  CHECK(res.system_consistency_linf == 0.0);
}

TEST_CASE("staged solution satisfies the fourth-order equation") {
  const auto coef = Coefficient::affine_in_r(1, 1);
  const auto src = source("sin(x)", 1);
  double prev = 0.0;
  for (int n : {64, 128, 256}) {
    const auto g = build_grid(Domain::interval(0, pi), {n});
    const auto fp = find_fixed_point(g, coef, src, 1e-12);
    const auto res = fourth_order_residual(g, coef, src, fp.bundle);
    CHECK(res.weak_form_defect <= 1e-9);
    CHECK(res.fourth_order_linf <= 1e-6);
    CHECK(res.system_consistency_linf <= 1e-9);
    if (prev > 0.0) CHECK(prev / res.continuum_linf == doctest::Approx(4.0).epsilon(0.15));
    prev = res.continuum_linf;
  }
}

TEST_CASE("reconstruction consistency of an exact pair") {
  const auto g = build_grid(Domain::interval(0, pi), {200});
  Field u(g.size()), v(g.size());
  for (std::size_t k = 0; k < g.size(); ++k) {
    u[k] = std::sin(g.node(k).x);
    v[k] = -u[k];
  }
  CHECK(reconstruction_consistency(g, u, v) <= 1e-8);
}

TEST_CASE("dense oracle on the cubic benchmark") {
  const auto g = build_grid(Domain::interval(0, pi), {16});
  const auto coef = Coefficient::affine_in_r(1, 1);
  const auto src = source("sin(x)", 1);
  const auto o = dense_oracle(g, coef, src);
  CHECK(o.converged_starts == 10);
  CHECK(o.spread <= 1e-7);
  CHECK(std::abs(o.bundle.r - kCubicRoot) <= 5e-3);
  const auto fp = find_fixed_point(g, coef, src, 1e-12);
  CHECK(std::abs(o.bundle.r - fp.r_star) <= 1e-9);
  CHECK(max_diff(o.bundle.u, fp.bundle.u) <= 1e-9);
  CHECK(max_diff(o.bundle.w, fp.bundle.w) <= 1e-9);
  CHECK(fourth_order_residual(g, coef, src, o.bundle).weak_form_defect <= 1e-9);
}

TEST_CASE("dense oracle agrees with the staged solver on 2D and t-dependent cases") {
  for (const auto& c : regression::cases()) {
    if (c.name != "square_tanh" && c.name != "expr_abs" && c.name != "rectangle_bump") continue;
    CAPTURE(c.name);
    const auto g = build_grid(c.domain, c.n);
    const auto o = dense_oracle(g, c.coef, c.src);
    const auto fp = find_fixed_point(g, c.coef, c.src, 1e-12);
    CHECK(std::abs(o.bundle.r - fp.r_star) <= 1e-8 * std::max(1.0, fp.r_star));
    CHECK(max_diff(o.bundle.u, fp.bundle.u) <= 1e-8);
  }
}

TEST_CASE("dense oracle rejects large grids") {
  const auto g = build_grid(Domain::rectangle(0, 1, 0, 1), {40, 40});
  CHECK_THROWS_AS(dense_oracle(g, Coefficient::constant(1), source("1", 1)), InvalidArgument);
}

TEST_CASE("richardson is exact on h^2 and h^4 terms") {
  const std::vector<double> h{0.4, 0.2, 0.1};
  std::vector<double> q;
  for (double x : h) q.push_back(3.0 - 2.0 * x * x + 5.0 * std::pow(x, 4));
  CHECK(richardson_extrapolate(h, q) == doctest::Approx(3.0).epsilon(1e-12));
}

TEST_CASE("refinement of the poisson solve is second order") {
  const auto tab = refinement_errors({32, 64, 128, 256}, [](int n) { return pi / (n + 1); },
                                     [](int n) {
                                       const auto g = build_grid(Domain::interval(0, pi), {n});
                                       Field f(g.size());
                                       for (std::size_t k = 0; k < g.size(); ++k) f[k] = std::sin(g.node(k).x);
                                       const auto w = solve_poisson(g, f).w;
                                       double e = 0.0;
                                       for (std::size_t k = 0; k < g.size(); ++k)
                                         e = std::max(e, std::abs(w[k] - f[k]));
                                       return e;
                                     });
  REQUIRE(tab.rows.size() == 4);
  CHECK(std::isnan(tab.rows[0].order));
  for (std::size_t i = 1; i < tab.rows.size(); ++i) CHECK(tab.rows[i].order == doctest::Approx(2.0).epsilon(0.05));
}

TEST_CASE("refinement of the fixed point") {
  const auto coef = Coefficient::affine_in_r(1, 1);
  const auto src = source("sin(x)", 1);
  const auto tab = refinement_study(Domain::interval(0, pi), coef, src, {32, 64, 128, 256}, kCubicRoot);
  CHECK(tab.closed_form);
  for (std::size_t i = 1; i < tab.rows.size(); ++i) CHECK(tab.rows[i].order == doctest::Approx(2.0).epsilon(0.05));
  const auto rich = refinement_study(Domain::interval(0, pi), coef, src, {64, 128, 256});
  CHECK_FALSE(rich.closed_form);
  CHECK(std::abs(rich.reference - kCubicRoot) <= 1e-9);
}

TEST_CASE("refinement of a constant-coefficient semilinear solve") {
  // m = 2: z = sin(x) / (lam_h (lam_h + 2)) -> sin(x) / 3.
  const auto tab = refinement_study({32, 64, 128}, [](int n) { return pi / (n + 1); },
                                    [](int n) {
                                      const auto g = build_grid(Domain::interval(0, pi), {n});
                                      const auto b = solve_aux_fixed_f(g, Coefficient::constant(2), source("sin(x)", 1), 0);
                                      return h10_norm(g, b.u);
                                    },
                                    std::sqrt(pi / 2) / 3.0);
  for (std::size_t i = 1; i < tab.rows.size(); ++i) CHECK(tab.rows[i].order == doctest::Approx(2.0).epsilon(0.1));
}
