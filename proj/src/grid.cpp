#include "kirchhoff/grid.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <numbers>
#include <string>

#include "kirchhoff/cg.hpp"
#include "kirchhoff/error.hpp"

namespace kirchhoff {

namespace {

void check_bounds(double low, double high, const char* axis) {
  if (!std::isfinite(low) || !std::isfinite(high) || !(low < high))
    throw InvalidArgument(std::string("degenerate bounds on axis ") + axis + ": need low < high");
}

}  // namespace

Domain Domain::interval(double low, double high) {
  check_bounds(low, high, "x");
  return Domain(DomainKind::Interval, {Bounds{low, high}, Bounds{0.0, 1.0}});
}

Domain Domain::rectangle(double x_low, double x_high, double y_low, double y_high) {
  check_bounds(x_low, x_high, "x");
  check_bounds(y_low, y_high, "y");
  return Domain(DomainKind::Rectangle, {Bounds{x_low, x_high}, Bounds{y_low, y_high}});
}

double Domain::volume() const {
  double v = bounds_[0].length();
  if (dim() == 2) v *= bounds_[1].length();
  return v;
}

double Domain::lambda1() const {
  double s = 0.0;
  for (int a = 0; a < dim(); ++a) {
    const double L = bounds(a).length();
    s += 1.0 / (L * L);
  }
  return std::numbers::pi * std::numbers::pi * s;
}

Grid::Grid(const Domain& domain, std::vector<int> n_per_axis) : domain_(domain) {
  if (static_cast<int>(n_per_axis.size()) != domain.dim())
    throw InvalidArgument("expected " + std::to_string(domain.dim()) + " node counts, got " +
                          std::to_string(n_per_axis.size()));
  size_ = 1;
  cell_volume_ = 1.0;
  for (int a = 0; a < domain.dim(); ++a) {
    const int n = n_per_axis[static_cast<std::size_t>(a)];
    if (n < 2) throw InvalidArgument("each axis needs at least 2 interior nodes, got " + std::to_string(n));
    n_[static_cast<std::size_t>(a)] = n;
    h_[static_cast<std::size_t>(a)] = domain.bounds(a).length() / (n + 1);
    size_ *= static_cast<std::size_t>(n);
    cell_volume_ *= h_[static_cast<std::size_t>(a)];
  }
}

std::array<int, 2> Grid::coords(std::size_t k) const {
  if (dim() == 1) return {static_cast<int>(k), 0};
  const auto nx = static_cast<std::size_t>(n_[0]);
  return {static_cast<int>(k % nx), static_cast<int>(k / nx)};
}

Point Grid::node(std::size_t k) const {
  const auto [i, j] = coords(k);
  Point p;
  p.x = domain_.bounds(0).low + (i + 1) * h_[0];
  if (dim() == 2) p.y = domain_.bounds(1).low + (j + 1) * h_[1];
  return p;
}

Field Grid::sample(const std::function<double(Point)>& fn) const {
  Field u(size_);
  for (std::size_t k = 0; k < size_; ++k) u[k] = fn(node(k));
  return u;
}

void Grid::check_conformal(std::span<const double> u) const {
  if (u.size() != size_)
    throw InvalidArgument("field has " + std::to_string(u.size()) + " entries, grid has " + std::to_string(size_) +
                          " interior nodes");
}

Grid build_grid(const Domain& domain, std::vector<int> n_per_axis) { return Grid(domain, std::move(n_per_axis)); }

void apply_laplacian(const Grid& grid, std::span<const double> u, std::span<double> out) {
  grid.check_conformal(u);
  grid.check_conformal(out);
  const int nx = grid.n(0);
  const double ix2 = 1.0 / (grid.h(0) * grid.h(0));
  if (grid.dim() == 1) {
    for (int i = 0; i < nx; ++i) {
      const double left = i > 0 ? u[i - 1] : 0.0;
      const double right = i + 1 < nx ? u[i + 1] : 0.0;
      out[i] = (2.0 * u[i] - left - right) * ix2;
    }
    return;
  }
  const int ny = grid.n(1);
  const double iy2 = 1.0 / (grid.h(1) * grid.h(1));
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      const std::size_t k = grid.index(i, j);
      const double c = u[k];
      const double w = i > 0 ? u[k - 1] : 0.0;
      const double e = i + 1 < nx ? u[k + 1] : 0.0;
      const double s = j > 0 ? u[k - nx] : 0.0;
      const double n = j + 1 < ny ? u[k + nx] : 0.0;
      out[k] = (2.0 * c - w - e) * ix2 + (2.0 * c - s - n) * iy2;
    }
  }
}

Field apply_laplacian(const Grid& grid, std::span<const double> u) {
  Field out(grid.size());
  apply_laplacian(grid, u, out);
  return out;
}

bool is_deep_interior(const Grid& grid, std::size_t k, int cells) {
  const auto c = grid.coords(k);
  for (int a = 0; a < grid.dim(); ++a) {
    const int i = c[static_cast<std::size_t>(a)];
    if (i < cells - 1 || i > grid.n(a) - cells) return false;
  }
  return true;
}

Field apply_laplacian_fourth_order(const Grid& grid, std::span<const double> u) {
  grid.check_conformal(u);
  Field out(grid.size(), std::numeric_limits<double>::quiet_NaN());
  const int nx = grid.n(0);
  auto value = [&](int i, int j) -> double {
    if (i < 0 || j < 0 || i >= nx || (grid.dim() == 2 && j >= grid.n(1))) return 0.0;
    return u[grid.index(i, j)];
  };
  for (std::size_t k = 0; k < grid.size(); ++k) {
    if (!is_deep_interior(grid, k, 2)) continue;
    const auto [i, j] = grid.coords(k);
    double acc = 0.0;
    for (int a = 0; a < grid.dim(); ++a) {
      const int di = a == 0 ? 1 : 0;
      const int dj = a == 1 ? 1 : 0;
      const double h2 = grid.h(a) * grid.h(a);
      const double second = -value(i - 2 * di, j - 2 * dj) + 16.0 * value(i - di, j - dj) - 30.0 * value(i, j) +
                            16.0 * value(i + di, j + dj) - value(i + 2 * di, j + 2 * dj);
      acc -= second / (12.0 * h2);
    }
    out[k] = acc;
  }
  return out;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double inner(const Grid& grid, std::span<const double> a, std::span<const double> b) {
  return dot(a, b) * grid.cell_volume();
}

double l2_norm(const Grid& grid, std::span<const double> u) {
  grid.check_conformal(u);
  return std::sqrt(inner(grid, u, u));
}

double linf_norm(std::span<const double> u) {
  double m = 0.0;
  for (double v : u) m = std::max(m, std::abs(v));
  return m;
}

namespace {

// Calls fn(difference quotient, axis) for every cell of every axis,
// including the cells that touch the boundary.
template <class Fn>
void for_each_difference(const Grid& grid, std::span<const double> u, Fn&& fn) {
  const int nx = grid.n(0);
  const int ny = grid.dim() == 2 ? grid.n(1) : 1;
  auto value = [&](int i, int j) -> double {
    if (i < 0 || i >= nx || j < 0 || j >= ny) return 0.0;
    return u[grid.index(i, j)];
  };
  for (int j = 0; j < ny; ++j)
    for (int i = -1; i < nx; ++i) fn((value(i + 1, j) - value(i, j)) / grid.h(0), 0);
  if (grid.dim() == 2)
    for (int j = -1; j < ny; ++j)
      for (int i = 0; i < nx; ++i) fn((value(i, j + 1) - value(i, j)) / grid.h(1), 1);
}

}  // namespace

double h10_norm(const Grid& grid, std::span<const double> u) {
  grid.check_conformal(u);
  double s = 0.0;
  for_each_difference(grid, u, [&](double d, int) { s += d * d; });
  return std::sqrt(s * grid.cell_volume());
}

double gradient_linf(const Grid& grid, std::span<const double> u) {
  grid.check_conformal(u);
  double m = 0.0;
  for_each_difference(grid, u, [&](double d, int) { m = std::max(m, std::abs(d)); });
  return m;
}

Norms norms(const Grid& grid, std::span<const double> u) {
  return {l2_norm(grid, u), h10_norm(grid, u), linf_norm(u)};
}

Lambda1 lambda1(const Grid& grid) {
  Lambda1 out;
  out.continuous = grid.domain().lambda1();

  const std::size_t n = grid.size();
  Field x(n, 1.0 / std::sqrt(static_cast<double>(n)));
  Field y(n, 0.0), ax(n);
  auto apply = [&](std::span<const double> in, std::span<double> o) { apply_laplacian(grid, in, o); };

  constexpr int kMaxIterations = 1000;
  double rho_prev = 0.0;
  for (int it = 1; it <= kMaxIterations; ++it) {
    std::fill(y.begin(), y.end(), 0.0);
    linalg::conjugate_gradient(apply, x, y, 1e-14, static_cast<int>(10 * n));
    const double norm = std::sqrt(dot(y, y));
    if (!(norm > 0.0) || !std::isfinite(norm)) break;
    for (std::size_t i = 0; i < n; ++i) x[i] = y[i] / norm;
    apply_laplacian(grid, x, ax);
    const double rho = dot(x, ax);
    out.iterations = it;
    if (it > 1 && std::abs(rho - rho_prev) <= 1e-13 * rho) {
      out.discrete = rho;
      return out;
    }
    rho_prev = rho;
  }
  throw ConvergenceError("inverse power iteration for the smallest eigenvalue of -Δ_h did not converge");
}

}  // namespace kirchhoff
