#include "doctest.h"

#include <Eigen/Dense>
#include <cmath>
#include <numbers>
#include <random>

#include "kirchhoff/elliptic.hpp"
#include "kirchhoff/error.hpp"
#include "kirchhoff/semilinear.hpp"

using namespace kirchhoff;
using std::numbers::pi;

namespace {

// Full-Hessian Newton on the untruncated energy for m = 1 + t^2, from many
// random starts. Independent of the CG/truncation path.
Eigen::VectorXd dense_minimiser(const Grid& g, const Field& w, int starts, double spread) {
  const int n = static_cast<int>(g.size());
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
  const double h2 = g.h(0) * g.h(0);
  for (int i = 0; i < n; ++i) {
    A(i, i) = 2.0 / h2;
    if (i > 0) A(i, i - 1) = -1.0 / h2;
    if (i + 1 < n) A(i, i + 1) = -1.0 / h2;
  }
  const Eigen::Map<const Eigen::VectorXd> W(w.data(), n);
  auto energy = [&](const Eigen::VectorXd& z) {
    return 0.5 * z.dot(A * z) + (0.5 * z.array().square() + z.array().pow(4) / 12.0).sum() - W.dot(z);
  };
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> U(-spread, spread);
  Eigen::VectorXd consensus;
  for (int s = 0; s < starts; ++s) {
    Eigen::VectorXd z(n);
    for (int i = 0; i < n; ++i) z(i) = U(rng);
    for (int it = 0; it < 200; ++it) {
      const Eigen::VectorXd F = A * z + (z.array() + z.array().cube() / 3.0).matrix() - W;
      if (F.lpNorm<Eigen::Infinity>() < 1e-13) break;
      Eigen::MatrixXd J = A;
      J.diagonal() += (1.0 + z.array().square()).matrix();
      const Eigen::VectorXd d = J.ldlt().solve(-F);
      double a = 1.0;
      const double e0 = energy(z);
      while (energy(z + a * d) > e0 + 1e-4 * a * F.dot(d) && a > 1e-12) a *= 0.5;
      z += a * d;
    }
    if (s == 0) {
      consensus = z;
    } else {
      REQUIRE((z - consensus).lpNorm<Eigen::Infinity>() < 1e-10);
    }
  }
  return consensus;
}

}  // namespace

TEST_CASE("constant coefficient, sine load") {
  for (double mm : {1.0, 2.5}) {
    const auto g = build_grid(Domain::interval(0, pi), {127});
    const auto w = g.sample([](Point p) { return std::sin(p.x); });
    const auto sol = solve_semilinear(g, Coefficient::constant(mm), 0.0, w);
    const double lam = 4.0 / (g.h(0) * g.h(0)) * std::pow(std::sin(g.h(0) / 2), 2);
    for (std::size_t k = 0; k < w.size(); ++k) {
      CHECK(std::abs(sol.z[k] - w[k] / (lam + mm)) <= 1e-12);
      CHECK(std::abs(sol.z[k] - w[k] / (1.0 + mm)) <= 1e-4);
    }
    CHECK(sol.report.tau2 == doctest::Approx(1.0 / mm));
    CHECK(sol.report.final_residual_linf <= 1e-9);
  }
}

TEST_CASE("zero load") {
  const auto g = build_grid(Domain::rectangle(0, 1, 0, 1), {8, 8});
  const auto sol = solve_semilinear(g, Coefficient::polynomial_in_t({1, 0, 1}, 1.0, true), 3.0, g.zeros());
  CHECK(linf_norm(sol.z) == 0.0);
  CHECK(sol.report.newton_iters == 0);
}

TEST_CASE("quadratic coefficient matches a dense brute-force minimiser") {
  const auto g = build_grid(Domain::interval(0, 1), {40});
  const auto w = solve_poisson(g, Field(g.size(), 1.0)).w;
  auto coef = Coefficient::polynomial_in_t({1.0, 0.0, 1.0}, 1.0, true);
  const auto sol = solve_semilinear(g, coef, 0.0, w);
  const auto oracle = dense_minimiser(g, w, 50, sol.report.tau2);
  for (std::size_t k = 0; k < w.size(); ++k) CHECK(std::abs(sol.z[k] - oracle(static_cast<int>(k))) <= 1e-8);

  // Same answer through the quadrature path.
  const auto via_expr =
      solve_semilinear(g, Coefficient::from_expression(expr::parse("1 + t^2"), 1.0, true), 0.0, w);
  for (std::size_t k = 0; k < w.size(); ++k) CHECK(std::abs(via_expr.z[k] - sol.z[k]) <= 1e-10);
}

TEST_CASE("energy decreases, bounds hold, truncation inactive") {
  const auto g = build_grid(Domain::rectangle(0, 2, 0, 1), {24, 12});
  const auto w = g.sample([](Point p) { return 30.0 * std::sin(pi * p.x / 2) * std::sin(pi * p.y) + 5.0 * p.x; });
  const auto coef = Coefficient::gaussian_bump(0.5, 2.0);
  const auto sol = solve_semilinear(g, coef, 1.3, w);
  const auto& rep = sol.report;
  REQUIRE(rep.energy_trace.size() >= 2);
  for (std::size_t i = 1; i < rep.energy_trace.size(); ++i)
    CHECK(rep.energy_trace[i] <= rep.energy_trace[i - 1] + 1e-12 * std::abs(rep.energy_trace[i - 1]));
  CHECK(rep.box_violation <= 1e-10);
  CHECK(rep.m_bound_slack >= -1e-9);
  CHECK(rep.linf_bound_slack >= -1e-9);
  const TruncatedM trunc(coef, 1.3, rep.tau1, rep.tau2);
  for (double z : sol.z) {
    CHECK(z >= rep.tau1);
    CHECK(z <= rep.tau2);
    CHECK(trunc.eval(z) == doctest::Approx(coef.M(z, 1.3)).epsilon(1e-14));
  }
  CHECK(linf_norm(semilinear_residual(g, coef, 1.3, sol.z, w)) <= 1e-9 * linf_norm(w));
}

TEST_CASE("unique minimiser from different starts") {
  const auto g = build_grid(Domain::interval(0, 3), {60});
  const auto w = g.sample([](Point p) { return 4.0 * std::sin(p.x) - 1.0 + p.x; });
  const auto coef = Coefficient::from_expression(expr::parse("1 + t^2 + r*exp(-t^2)"), 1.0, true);
  const auto a = solve_semilinear(g, coef, 0.5, w);
  SemilinearOptions opts;
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> U(a.report.tau1, a.report.tau2);
  Field start(g.size());
  for (auto& v : start) v = U(rng);
  opts.initial_guess = start;
  const auto b = solve_semilinear(g, coef, 0.5, w, opts);
  double gap = 0.0;
  for (std::size_t k = 0; k < w.size(); ++k) gap = std::max(gap, std::abs(a.z[k] - b.z[k]));
  CHECK(gap <= 1e-8);
}

TEST_CASE("abs coefficient with a kink") {
  const auto g = build_grid(Domain::interval(0, 1), {50});
  const auto w = g.sample([](Point p) { return 20.0 * (p.x - 0.4); });
  const auto coef = Coefficient::from_expression(expr::parse("1 + abs(t)"), 1.0, true);
  const auto sol = solve_semilinear(g, coef, 0.0, w);
  CHECK(sol.report.final_residual_linf <= 1e-9 * 20.0);
}

TEST_CASE("argument checks") {
  const auto g = build_grid(Domain::interval(0, 1), {10});
  CHECK_THROWS_AS(solve_semilinear(g, Coefficient::constant(1.0), -1.0, g.zeros()), InvalidArgument);
  CHECK_THROWS_AS(solve_semilinear(g, Coefficient::constant(1.0), 0.0, Field(3, 1.0)), InvalidArgument);
  SemilinearOptions opts;
  opts.max_newton = 0;
  CHECK_THROWS_AS(solve_semilinear(g, Coefficient::constant(1.0), 0.0, Field(10, 1.0), opts), ConvergenceError);
}
