#pragma once

#include <functional>

#include "wpsim/grid.hpp"

namespace wpsim {

/// Boundary operator: trace (Dirichlet) or outward normal derivative (Neumann).
enum class BoundaryKind { Dirichlet = 0, Neumann = 1 };

inline BoundaryKind boundary_kind(int index) {
  if (index != 0 && index != 1) throw std::invalid_argument("boundary index must be 0 or 1");
  return index == 0 ? BoundaryKind::Dirichlet : BoundaryKind::Neumann;
}

/// Time-dependent boundary data g(t, x, y) per face, with its time derivative.
///
/// For Dirichlet closures the value is the prescribed trace; for Neumann
/// closures it is the prescribed outward normal derivative.
template <typename Scalar>
struct BoundaryData {
  using Fn = std::function<Scalar(Scalar t, Scalar x, Scalar y, Face face)>;
  Fn value;
  Fn rate;

  static BoundaryData zero() { return {}; }
  static BoundaryData constant(Scalar c) {
    return {[c](Scalar, Scalar, Scalar, Face) { return c; },
            [](Scalar, Scalar, Scalar, Face) { return Scalar(0); }};
  }

  bool is_zero() const { return !value && !rate; }

  /// Values over grid.boundary_entries() at time t.
  Vector<Scalar> sample(const Grid<Scalar>& grid, Scalar t) const { return sample_fn(grid, t, value); }
  /// Time derivatives over grid.boundary_entries() at time t.
  Vector<Scalar> sample_rate(const Grid<Scalar>& grid, Scalar t) const { return sample_fn(grid, t, rate); }

 private:
  static Vector<Scalar> sample_fn(const Grid<Scalar>& grid, Scalar t, const Fn& f) {
    const auto& entries = grid.boundary_entries();
    Vector<Scalar> out = Vector<Scalar>::Zero(static_cast<Eigen::Index>(entries.size()));
    if (!f) return out;
    for (std::size_t e = 0; e < entries.size(); ++e)
      out[e] = f(t, grid.x(entries[e].node), grid.y(entries[e].node), entries[e].face);
    return out;
  }
};

/// Boundary operators and data for the pressure (index j) and the
/// temperature (index ell).
template <typename Scalar>
struct BoundaryConditionSpec {
  int j = 0;
  int ell = 0;
  BoundaryData<Scalar> g;
  BoundaryData<Scalar> h;

  BoundaryKind u_kind() const { return boundary_kind(j); }
  BoundaryKind theta_kind() const { return boundary_kind(ell); }

  /// Homogeneous data for u and theta = (1 - ell) theta_a, the setting of
  /// the equilibrium analysis.
  static BoundaryConditionSpec ambient(int j, int ell, Scalar theta_a) {
    BoundaryConditionSpec bc;
    bc.j = j;
    bc.ell = ell;
    if (ell == 0) bc.h = BoundaryData<Scalar>::constant(theta_a);
    return bc;
  }
};

}  // namespace wpsim
