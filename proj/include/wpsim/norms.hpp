#pragma once

#include <cmath>

#include "wpsim/grid.hpp"

namespace wpsim {

enum class NormKind { L2, Linf, H2Seminorm, Lq };

/// Delta_h at interior nodes with the plain stencil, zero on the boundary.
/// Needs no closure, so it is usable as a norm ingredient for any field.
template <typename Scalar>
Vector<Scalar> interior_laplacian(const Vector<Scalar>& f, const Grid<Scalar>& grid) {
  Vector<Scalar> out = Vector<Scalar>::Zero(f.size());
  for (std::size_t n = 0; n < grid.size(); ++n) {
    if (grid.on_boundary(n)) continue;
    const int i = grid.ix(n), j = grid.iy(n);
    const Scalar hx = grid.spacing(0);
    Scalar v = (f[grid.index(i - 1, j)] - 2 * f[n] + f[grid.index(i + 1, j)]) / (hx * hx);
    if (grid.dim() == 2) {
      const Scalar hy = grid.spacing(1);
      v += (f[grid.index(i, j - 1)] - 2 * f[n] + f[grid.index(i, j + 1)]) / (hy * hy);
    }
    out[n] = v;
  }
  return out;
}

/// Trapezoidal-weighted discrete norms. `q` is only used for NormKind::Lq.
template <typename Scalar>
Scalar discrete_norm(const Vector<Scalar>& f, const Grid<Scalar>& grid, NormKind which, Scalar q = Scalar(2)) {
  switch (which) {
    case NormKind::Linf:
      return f.size() ? f.cwiseAbs().maxCoeff() : Scalar(0);
    case NormKind::L2:
      return std::sqrt((grid.weights().array() * f.array().square()).sum());
    case NormKind::Lq:
      return std::pow((grid.weights().array() * f.array().abs().pow(q)).sum(), Scalar(1) / q);
    case NormKind::H2Seminorm:
      return discrete_norm(interior_laplacian(f, grid), grid, NormKind::L2);
  }
  return Scalar(0);
}

/// Surrogate for the W^2_q norm used by the decay diagnostics: L2 + H2 seminorm.
template <typename Scalar>
Scalar w2_surrogate(const Vector<Scalar>& f, const Grid<Scalar>& grid) {
  return discrete_norm(f, grid, NormKind::L2) + discrete_norm(f, grid, NormKind::H2Seminorm);
}

/// ||grad_h f||^2 from forward differences along every grid edge, each edge
/// weighted by the cell measure. For fields vanishing on the boundary this
/// equals -(Delta_h f, f) in the trapezoidal inner product.
template <typename Scalar>
Scalar gradient_energy(const Vector<Scalar>& f, const Grid<Scalar>& grid) {
  Scalar cell = grid.spacing(0);
  if (grid.dim() == 2) cell *= grid.spacing(1);
  Scalar sum = 0;
  for (std::size_t n = 0; n < grid.size(); ++n) {
    const int i = grid.ix(n), j = grid.iy(n);
    if (i + 1 < grid.nx()) {
      const Scalar d = (f[grid.index(i + 1, j)] - f[n]) / grid.spacing(0);
      sum += d * d;
    }
    if (grid.dim() == 2 && j + 1 < grid.ny()) {
      const Scalar d = (f[grid.index(i, j + 1)] - f[n]) / grid.spacing(1);
      sum += d * d;
    }
  }
  return cell * sum;
}

/// E = 1/2 ||v||^2 + 1/2 a2 ||grad_h u||^2, the energy of the linear damped
/// wave equation with constant coefficients.
template <typename Scalar>
Scalar wave_energy(const Vector<Scalar>& u, const Vector<Scalar>& v, const Grid<Scalar>& grid, Scalar a2) {
  const Scalar lv = discrete_norm(v, grid, NormKind::L2);
  return Scalar(0.5) * lv * lv + Scalar(0.5) * a2 * gradient_energy(u, grid);
}

}  // namespace wpsim
