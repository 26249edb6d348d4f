#include "doctest.h"

#include <cmath>
#include <numbers>
#include <random>

#include "kirchhoff/error.hpp"
#include "kirchhoff/grid.hpp"

using namespace kirchhoff;
using std::numbers::pi;

namespace {

Field random_field(const Grid& g, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  Field f(g.size());
  for (auto& v : f) v = U(rng);
  return f;
}

}  // namespace

TEST_CASE("grid construction") {
  const auto g = build_grid(Domain::interval(0.0, pi), {3});
  CHECK(g.h(0) == doctest::Approx(pi / 4));
  CHECK(g.size() == 3);

  const auto r = build_grid(Domain::rectangle(0, 1, 0, 2), {4, 8});
  CHECK(r.h(0) == doctest::Approx(0.2));
  CHECK(r.h(1) == doctest::Approx(2.0 / 9.0));
  CHECK(r.size() == 32);
  CHECK(r.index(1, 2) == 9);
  CHECK(r.coords(9)[0] == 1);
  CHECK(r.coords(9)[1] == 2);
  CHECK(r.node(0).x == doctest::Approx(0.2));
  CHECK(r.node(0).y == doctest::Approx(2.0 / 9.0));

  CHECK_THROWS_AS(build_grid(Domain::interval(0, 1), {0}), InvalidArgument);
  CHECK_THROWS_AS(build_grid(Domain::interval(0, 1), {-3}), InvalidArgument);
  CHECK_THROWS_AS(Domain::interval(1, 1), InvalidArgument);
  CHECK_THROWS_AS(Domain::rectangle(0, 1, 2, 1), InvalidArgument);
  CHECK_THROWS_AS(build_grid(Domain::rectangle(0, 1, 0, 1), {4}), InvalidArgument);
}

TEST_CASE("laplacian stencil") {
  const auto g = build_grid(Domain::interval(0, 4), {3});  // h = 1
  const auto out = apply_laplacian(g, Field{0, 1, 0});
  CHECK(out[0] == -1.0);
  CHECK(out[1] == 2.0);
  CHECK(out[2] == -1.0);
  CHECK(linf_norm(apply_laplacian(g, g.zeros())) == 0.0);
  CHECK_THROWS_AS(apply_laplacian(g, Field{1, 2}), InvalidArgument);
}

TEST_CASE("laplacian of sin is second-order accurate") {
  double prev = 0.0;
  for (int n : {31, 63, 127}) {
    const auto g = build_grid(Domain::interval(0, pi), {n});
    const auto u = g.sample([](Point p) { return std::sin(p.x); });
    const auto Lu = apply_laplacian(g, u);
    double err = 0.0;
    for (std::size_t k = 0; k < u.size(); ++k) err = std::max(err, std::abs(Lu[k] - u[k]));
    if (prev > 0.0) CHECK(prev / err == doctest::Approx(4.0).epsilon(0.05));
    prev = err;
  }
}

TEST_CASE("fourth-order laplacian") {
  double prev = 0.0;
  for (int n : {31, 63}) {
    const auto g = build_grid(Domain::rectangle(0, pi, 0, pi), {n, n});
    const auto u = g.sample([](Point p) { return std::sin(p.x) * std::sin(2 * p.y); });
    const auto Lu = apply_laplacian_fourth_order(g, u);
    double err = 0.0;
    for (std::size_t k = 0; k < u.size(); ++k) {
      if (!is_deep_interior(g, k, 2)) {
        CHECK(std::isnan(Lu[k]));
        continue;
      }
      err = std::max(err, std::abs(Lu[k] - 5.0 * u[k]));
    }
    if (prev > 0.0) CHECK(prev / err > 12.0);
    prev = err;
  }
}

TEST_CASE("eigenvalue") {
  CHECK(Domain::interval(0, pi).lambda1() == doctest::Approx(1.0));
  CHECK(Domain::rectangle(0, pi, 0, pi).lambda1() == doctest::Approx(2.0));

  const auto g = build_grid(Domain::interval(0, pi), {63});
  const double h = g.h(0);
  const double exact = 4.0 / (h * h) * std::pow(std::sin(h / 2), 2);
  const auto l = lambda1(g);
  CHECK(std::abs(l.discrete - exact) <= 1e-10 * exact);
  CHECK(l.discrete <= l.continuous);

  const auto r = build_grid(Domain::rectangle(0, 1, 0, 2), {9, 19});
  const auto lr = lambda1(r);
  const double ex = 4.0 / (r.h(0) * r.h(0)) * std::pow(std::sin(pi * r.h(0) / 2), 2) +
                    4.0 / (r.h(1) * r.h(1)) * std::pow(std::sin(pi * r.h(1) / 4), 2);
  CHECK(std::abs(lr.discrete - ex) <= 1e-10 * ex);
}

TEST_CASE("eigenvalue converges at second order") {
  double prev = 0.0;
  for (int n : {15, 31, 63}) {
    const auto l = lambda1(build_grid(Domain::interval(0, pi), {n}));
    const double gap = l.continuous - l.discrete;
    CHECK(gap > 0.0);
    if (prev > 0.0) CHECK(prev / gap == doctest::Approx(4.0).epsilon(0.05));
    prev = gap;
  }
}

TEST_CASE("norms") {
  const auto g = build_grid(Domain::interval(0, pi), {511});
  const auto z = norms(g, g.zeros());
  CHECK(z.l2 == 0.0);
  CHECK(z.h10 == 0.0);
  CHECK(z.linf == 0.0);
  const auto s = norms(g, g.sample([](Point p) { return std::sin(p.x); }));
  CHECK(s.l2 == doctest::Approx(std::sqrt(pi / 2)).epsilon(1e-5));
  CHECK(s.h10 == doctest::Approx(std::sqrt(pi / 2)).epsilon(1e-5));
  CHECK(s.linf == doctest::Approx(1.0).epsilon(1e-5));
}

TEST_CASE("summation by parts, symmetry, Poincare") {
  for (const auto& g : {build_grid(Domain::interval(0, 2), {40}), build_grid(Domain::rectangle(0, 1, -1, 2), {12, 17})}) {
    const double lam = lambda1(g).discrete;
    for (unsigned seed = 0; seed < 10; ++seed) {
      const auto u = random_field(g, seed);
      const auto v = random_field(g, seed + 100);
      const auto Lu = apply_laplacian(g, u);
      const auto Lv = apply_laplacian(g, v);
      CHECK(dot(Lu, v) == doctest::Approx(dot(u, Lv)).epsilon(1e-12));
      const double h10 = h10_norm(g, u);
      CHECK(std::abs(h10 * h10 - dot(Lu, u) * g.cell_volume()) <= 1e-12 * h10 * h10);
      CHECK(dot(Lu, u) >= lam * dot(u, u) * (1 - 1e-12));
      CHECK(l2_norm(g, u) <= h10 / std::sqrt(lam) * (1 + 1e-12));
    }
  }
}

TEST_CASE("laplacian is linear") {
  const auto g = build_grid(Domain::rectangle(0, 1, 0, 1), {9, 7});
  const auto u = random_field(g, 1), v = random_field(g, 2);
  Field c(u.size());
  for (std::size_t k = 0; k < c.size(); ++k) c[k] = 2.0 * u[k] - 3.0 * v[k];
  const auto Lc = apply_laplacian(g, c), Lu = apply_laplacian(g, u), Lv = apply_laplacian(g, v);
  for (std::size_t k = 0; k < c.size(); ++k) CHECK(Lc[k] == doctest::Approx(2.0 * Lu[k] - 3.0 * Lv[k]));
}
