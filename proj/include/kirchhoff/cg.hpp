#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "kirchhoff/grid.hpp"

namespace kirchhoff::linalg {

struct CgOutcome {
  int iterations = 0;
  double relative_residual = 0.0;
  bool converged = false;
};

/// Preconditioned conjugate gradients for an SPD operator `apply(in, out)`.
/// `x` holds the initial guess on entry. An empty `inv_diag` means no
/// preconditioner. Stops when |b - Ax|_2 <= rel_tol * |b|_2.
template <class Apply>
CgOutcome conjugate_gradient(const Apply& apply, std::span<const double> b, std::span<double> x, double rel_tol,
                             int max_iter, std::span<const double> inv_diag = {}) {
  const std::size_t n = b.size();
  CgOutcome out;
  const double b_norm = std::sqrt(dot(b, b));
  if (b_norm == 0.0) {
    for (auto& v : x) v = 0.0;
    out.converged = true;
    return out;
  }

  std::vector<double> r(n), z(n), p(n), q(n);
  apply(std::span<const double>(x.data(), n), std::span<double>(q));
  for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - q[i];

  auto precondition = [&] {
    if (inv_diag.empty()) {
      z = r;
    } else {
      for (std::size_t i = 0; i < n; ++i) z[i] = inv_diag[i] * r[i];
    }
  };

  double r_norm = std::sqrt(dot(r, r));
  if (r_norm <= rel_tol * b_norm) {
    out.relative_residual = r_norm / b_norm;
    out.converged = true;
    return out;
  }

  precondition();
  p = z;
  double rz = dot(r, z);
  for (int it = 1; it <= max_iter; ++it) {
    apply(std::span<const double>(p), std::span<double>(q));
    const double pq = dot(p, q);
    if (!(pq > 0.0)) break;  // lost positive definiteness or breakdown
    const double alpha = rz / pq;
    for (std::size_t i = 0; i < n; ++i) {
      x[i] += alpha * p[i];
      r[i] -= alpha * q[i];
    }
    r_norm = std::sqrt(dot(r, r));
    out.iterations = it;
    out.relative_residual = r_norm / b_norm;
    if (r_norm <= rel_tol * b_norm) {
      out.converged = true;
      return out;
    }
    precondition();
    const double rz_next = dot(r, z);
    const double beta = rz_next / rz;
    rz = rz_next;
    for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
  }

  // The recurrence residual drifts; confirm with the true residual.
  apply(std::span<const double>(x.data(), n), std::span<double>(q));
  for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - q[i];
  out.relative_residual = std::sqrt(dot(r, r)) / b_norm;
  out.converged = out.relative_residual <= rel_tol;
  return out;
}

}  // namespace kirchhoff::linalg
