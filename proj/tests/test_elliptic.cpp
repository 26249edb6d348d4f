#include "doctest.h"

#include <cmath>
#include <numbers>
#include <random>

#include "kirchhoff/elliptic.hpp"
#include "kirchhoff/error.hpp"

using namespace kirchhoff;
using std::numbers::pi;

TEST_CASE("poisson with a sine load") {
  double prev = 0.0;
  for (int n : {32, 64, 128}) {
    const auto g = build_grid(Domain::interval(0, pi), {n});
    const auto f = g.sample([](Point p) { return std::sin(p.x); });
    const auto sol = solve_poisson(g, f);
    CHECK(sol.report.residual_l2 <= 1e-12);
    double err = 0.0;
    for (std::size_t k = 0; k < f.size(); ++k) err = std::max(err, std::abs(sol.w[k] - f[k]));
    if (prev > 0.0) CHECK(prev / err == doctest::Approx(4.0).epsilon(0.1));
    prev = err;
  }
}

TEST_CASE("poisson exact on quadratics") {
  const auto g = build_grid(Domain::interval(0, 1), {50});
  const auto sol = solve_poisson(g, Field(g.size(), 1.0));
  for (std::size_t k = 0; k < g.size(); ++k) {
    const double x = g.node(k).x;
    CHECK(sol.w[k] == doctest::Approx(x * (1 - x) / 2).epsilon(1e-10));
  }
  CHECK(linf_norm(solve_poisson(g, g.zeros()).w) == 0.0);
}

TEST_CASE("poisson: maximum principle, linearity, preconditioner") {
  const auto g = build_grid(Domain::rectangle(0, 1, 0, 2), {15, 20});
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  Field a(g.size()), b(g.size());
  for (auto& v : a) v = U(rng);
  for (auto& v : b) v = U(rng) - 0.5;
  const auto wa = solve_poisson(g, a).w;
  for (double v : wa) CHECK(v >= 0.0);
  const auto wb = solve_poisson(g, b).w;
  Field c(g.size());
  for (std::size_t k = 0; k < c.size(); ++k) c[k] = 2 * a[k] - b[k];
  const auto wc = solve_poisson(g, c, 1e-13).w;
  for (std::size_t k = 0; k < c.size(); ++k) CHECK(wc[k] == doctest::Approx(2 * wa[k] - wb[k]).epsilon(1e-9));
  const auto wj = solve_poisson(g, a, 1e-12, Preconditioner::Jacobi).w;
  for (std::size_t k = 0; k < c.size(); ++k) CHECK(wj[k] == doctest::Approx(wa[k]).epsilon(1e-9));
  CHECK_THROWS_AS(solve_poisson(g, Field(3, 1.0)), InvalidArgument);
}

TEST_CASE("gamma surrogate") {
  // Torsion function x(1-x)/2; the forward-difference slope at the wall is
  // (1 - h)/2, hence the O(h) tolerance.
  CHECK(estimate_gamma(build_grid(Domain::interval(0, 1), {999})) == doctest::Approx(0.5).epsilon(2e-3));
  CHECK(estimate_gamma(build_grid(Domain::interval(0, pi), {999})) == doctest::Approx(pi / 2).epsilon(2e-3));
  const double g1 = estimate_gamma(build_grid(Domain::interval(0, 1), {200}));
  const double g2 = estimate_gamma(build_grid(Domain::interval(0, 1), {401}));
  CHECK(std::abs(g1 - g2) / g2 < 0.01);
}

TEST_CASE("gamma increases under domain inclusion") {
  const double small = estimate_gamma(build_grid(Domain::rectangle(0, 1, 0, 1), {20, 20}));
  const double big = estimate_gamma(build_grid(Domain::rectangle(0, 2, 0, 1.5), {41, 30}));
  CHECK(small < big);
}
