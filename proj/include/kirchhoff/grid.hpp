#pragma once

#include <array>
#include <functional>
#include <span>
#include <vector>

namespace kirchhoff {

enum class DomainKind { Interval, Rectangle };

struct Bounds {
  double low = 0.0;
  double high = 1.0;
  double length() const { return high - low; }
};

/// A 1D interval or a 2D axis-aligned rectangle.
class Domain {
 public:
  static Domain interval(double low, double high);
  static Domain rectangle(double x_low, double x_high, double y_low, double y_high);

  DomainKind kind() const { return kind_; }
  int dim() const { return kind_ == DomainKind::Interval ? 1 : 2; }
  const Bounds& bounds(int axis) const { return bounds_[static_cast<std::size_t>(axis)]; }
  double volume() const;

  /// First Dirichlet eigenvalue of -Δ, pi^2 * sum 1/L_i^2.
  double lambda1() const;

 private:
  Domain(DomainKind kind, std::array<Bounds, 2> b) : kind_(kind), bounds_(b) {}
  DomainKind kind_;
  std::array<Bounds, 2> bounds_;
};

struct Point {
  double x = 0.0;
  double y = 0.0;
};

/// Grid values at interior nodes; boundary values are implicitly zero.
using Field = std::vector<double>;

/// Uniform grid on a Domain with interior nodes only, x index fastest.
class Grid {
 public:
  Grid(const Domain& domain, std::vector<int> n_per_axis);

  const Domain& domain() const { return domain_; }
  int dim() const { return domain_.dim(); }
  int n(int axis) const { return n_[static_cast<std::size_t>(axis)]; }
  double h(int axis) const { return h_[static_cast<std::size_t>(axis)]; }
  std::size_t size() const { return size_; }
  /// Product of the spacings, the quadrature weight of one node.
  double cell_volume() const { return cell_volume_; }

  std::size_t index(int i, int j = 0) const {
    return static_cast<std::size_t>(j) * static_cast<std::size_t>(n_[0]) + static_cast<std::size_t>(i);
  }
  Point node(std::size_t k) const;
  /// Per-axis integer coordinates of node k.
  std::array<int, 2> coords(std::size_t k) const;

  Field zeros() const { return Field(size_, 0.0); }
  Field sample(const std::function<double(Point)>& fn) const;

  /// Throws InvalidArgument unless u has one entry per interior node.
  void check_conformal(std::span<const double> u) const;

 private:
  Domain domain_;
  std::array<int, 2> n_{1, 1};
  std::array<double, 2> h_{1.0, 1.0};
  std::size_t size_ = 0;
  double cell_volume_ = 1.0;
};

Grid build_grid(const Domain& domain, std::vector<int> n_per_axis);

/// -Δ_h u with the 3-point (1D) or 5-point (2D) stencil.
Field apply_laplacian(const Grid& grid, std::span<const double> u);
void apply_laplacian(const Grid& grid, std::span<const double> u, std::span<double> out);

/// Fourth-order accurate -Δ on nodes at least two cells from the boundary
/// (5-point-per-axis stencil). Other nodes are set to NaN.
Field apply_laplacian_fourth_order(const Grid& grid, std::span<const double> u);

/// True for nodes at least `cells` cells away from every boundary face.
bool is_deep_interior(const Grid& grid, std::size_t k, int cells);

struct Lambda1 {
  double continuous = 0.0;
  double discrete = 0.0;
  int iterations = 0;
};

/// Continuous value from the box formula; discrete value by inverse power
/// iteration on -Δ_h to relative tolerance 1e-10.
Lambda1 lambda1(const Grid& grid);

struct Norms {
  double l2 = 0.0;
  double h10 = 0.0;
  double linf = 0.0;
};

Norms norms(const Grid& grid, std::span<const double> u);
double l2_norm(const Grid& grid, std::span<const double> u);
/// sqrt of the sum of squared forward differences over every cell, boundary
/// cells included, weighted by the cell volume.
double h10_norm(const Grid& grid, std::span<const double> u);
double linf_norm(std::span<const double> u);
/// Largest absolute forward difference quotient over all cells and axes.
double gradient_linf(const Grid& grid, std::span<const double> u);

double dot(std::span<const double> a, std::span<const double> b);
/// Discrete L2 inner product, dot(a, b) times the cell volume.
double inner(const Grid& grid, std::span<const double> a, std::span<const double> b);

}  // namespace kirchhoff
