#pragma once

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseLU>

#include <algorithm>
#include <limits>
#include <optional>
#include <vector>

#include "wpsim/errors.hpp"
#include "wpsim/laplacian.hpp"
#include "wpsim/model.hpp"

namespace wpsim {

enum class TimeScheme { BackwardEuler, Trapezoidal };

/// Implicit weight of the one-step theta method: 1 for backward Euler,
/// 1/2 for the trapezoidal rule.
template <typename Scalar>
constexpr Scalar implicit_weight(TimeScheme s) {
  return s == TimeScheme::BackwardEuler ? Scalar(1) : Scalar(0.5);
}

/// 1e-10, or a few hundred ulps for short scalar types.
template <typename Scalar>
Scalar default_solve_tol() {
  return std::max(Scalar(1e-10), Scalar(1000) * std::numeric_limits<Scalar>::epsilon());
}

/// Sparse solve to a normwise backward error of `tol`,
/// |A x - b| <= tol (|A| |x| + |b|) in the max norm: LU below `direct_limit`
/// unknowns, ILUT-preconditioned BiCGSTAB above.
template <typename Scalar>
Vector<Scalar> sparse_solve(const Eigen::SparseMatrix<Scalar>& a, const Vector<Scalar>& rhs,
                            Scalar tol = default_solve_tol<Scalar>(),
                            Eigen::Index direct_limit = 20000) {
  const Scalar rhs_norm = rhs.norm();
  if (rhs_norm == Scalar(0)) return Vector<Scalar>::Zero(rhs.size());
  Vector<Scalar> x;
  if (a.rows() < direct_limit) {
    Eigen::SparseLU<Eigen::SparseMatrix<Scalar>> lu;
    lu.analyzePattern(a);
    lu.factorize(a);
    if (lu.info() != Eigen::Success) throw LinearSolveFailure(std::numeric_limits<double>::infinity());
    x = lu.solve(rhs);
  } else {
    Eigen::BiCGSTAB<Eigen::SparseMatrix<Scalar>, Eigen::IncompleteLUT<Scalar>> it;
    it.setTolerance(tol * Scalar(0.1));
    it.setMaxIterations(static_cast<int>(std::max<Eigen::Index>(1000, a.rows() / 4)));
    it.compute(a);
    x = it.solve(rhs);
  }
  const Scalar a_norm = (a.cwiseAbs() * Vector<Scalar>::Ones(a.cols())).maxCoeff();
  const Scalar scale = a_norm * x.template lpNorm<Eigen::Infinity>() + rhs.template lpNorm<Eigen::Infinity>();
  const Scalar rel = (a * x - rhs).template lpNorm<Eigen::Infinity>() / scale;
  if (!(rel <= tol)) throw LinearSolveFailure(static_cast<double>(rel));
  return x;
}

/// Frozen coefficients of the linearised Westervelt problem in rate form,
///
///   v_t = a1 Delta v + a2 Delta u + e_u u + e_v v + f2,   u_t = v.
///
/// The zeroth-order terms e_u, e_v are zero for the pure linear problem and
/// carry the nonlinearity's linearisation inside Newton.
template <typename Scalar>
struct FrozenCoefficients {
  Vector<Scalar> a1;  ///< frozen diffusivity, strictly positive
  Vector<Scalar> a2;  ///< frozen squared sound speed
  Vector<Scalar> e_u;
  Vector<Scalar> e_v;

  static FrozenCoefficients constant(std::size_t nodes, Scalar a1, Scalar a2) {
    FrozenCoefficients f;
    f.a1 = Vector<Scalar>::Constant(static_cast<Eigen::Index>(nodes), a1);
    f.a2 = Vector<Scalar>::Constant(static_cast<Eigen::Index>(nodes), a2);
    return f;
  }

  /// Lower bound alpha of a1; must be positive.
  Scalar alpha() const { return a1.minCoeff(); }

  void validate(std::size_t nodes) const {
    const auto n = static_cast<Eigen::Index>(nodes);
    if (a1.size() != n || a2.size() != n) throw std::invalid_argument("frozen coefficients must be nodal fields");
    if ((e_u.size() != 0 && e_u.size() != n) || (e_v.size() != 0 && e_v.size() != n))
      throw std::invalid_argument("frozen zeroth-order terms must be nodal fields");
    if (!(alpha() > 0)) throw std::invalid_argument("frozen diffusivity a1 must be bounded below by alpha > 0");
  }
};

/// Boundary data of one step: face values at the step start and end. For a
/// Dirichlet closure these are traces of u and v = u_t; for Neumann, outward
/// normal derivatives. Empty vectors mean homogeneous data.
template <typename Scalar>
struct StepBoundary {
  Vector<Scalar> u_start, u_end, v_start, v_end;
};

template <typename Scalar>
struct HeatBoundary {
  Vector<Scalar> start, end;
};

namespace detail {

template <typename Scalar>
Vector<Scalar> or_zero(const Vector<Scalar>& v, std::size_t n) {
  return v.size() ? v : Vector<Scalar>::Zero(static_cast<Eigen::Index>(n));
}

template <typename Scalar>
Vector<Scalar> apply_with_data(const DiscreteOperator<Scalar>& op, const Vector<Scalar>& full,
                               const Vector<Scalar>& data) {
  return op.kind() == BoundaryKind::Dirichlet ? op.apply(full) : op.apply(full, data);
}

}  // namespace detail

/// Appends the rate-form block
///
///   [ I/dt        -w I                  ]  (u rows)
///   [ -w(a2 L+e_u)  I/dt - w(a1 L + e_v) ]  (v rows)
///
/// over the free nodes of `op` at the given row/column offsets.
template <typename Scalar>
void linwest_block(std::vector<Eigen::Triplet<Scalar>>& t, const FrozenCoefficients<Scalar>& fro,
                   const DiscreteOperator<Scalar>& op, Scalar dt, Scalar w, Eigen::Index off_u, Eigen::Index off_v) {
  const auto& l = op.matrix();
  const auto& nodes = op.free_nodes();
  for (Eigen::Index i = 0; i < l.outerSize(); ++i) {
    const std::size_t node = nodes[static_cast<std::size_t>(i)];
    t.emplace_back(off_u + i, off_u + i, Scalar(1) / dt);
    t.emplace_back(off_u + i, off_v + i, -w);
    Scalar diag_v = Scalar(1) / dt, diag_u = 0;
    if (fro.e_v.size()) diag_v -= w * fro.e_v[node];
    if (fro.e_u.size()) diag_u -= w * fro.e_u[node];
    for (typename SparseMatrix<Scalar>::InnerIterator it(l, i); it; ++it) {
      const Scalar lij = it.value();
      if (it.col() == i) {
        diag_v -= w * fro.a1[node] * lij;
        diag_u -= w * fro.a2[node] * lij;
      } else {
        t.emplace_back(off_v + i, off_v + it.col(), -w * fro.a1[node] * lij);
        t.emplace_back(off_v + i, off_u + it.col(), -w * fro.a2[node] * lij);
      }
    }
    t.emplace_back(off_v + i, off_v + i, diag_v);
    if (diag_u != Scalar(0)) t.emplace_back(off_v + i, off_u + i, diag_u);
  }
}

/// Appends the rate-form heat block I/dt - w (kappa_a L - rho_b C_b W) / (rho_a C_a).
template <typename Scalar>
void heat_block(std::vector<Eigen::Triplet<Scalar>>& t, const PhysicalParams<Scalar>& p,
                const DiscreteOperator<Scalar>& op, Scalar dt, Scalar w, Eigen::Index off) {
  const auto& l = op.matrix();
  const Scalar inv_cap = Scalar(1) / p.capacity();
  for (Eigen::Index i = 0; i < l.outerSize(); ++i) {
    Scalar diag = Scalar(1) / dt + w * p.perfusion() * inv_cap;
    for (typename SparseMatrix<Scalar>::InnerIterator it(l, i); it; ++it) {
      if (it.col() == i)
        diag -= w * p.kappa_a * inv_cap * it.value();
      else
        t.emplace_back(off + i, off + it.col(), -w * p.kappa_a * inv_cap * it.value());
    }
    t.emplace_back(off + i, off + i, diag);
  }
}

/// One step of rho_a C_a theta_t - kappa_a Delta theta + rho_b C_b W theta = f1
/// with f1 frozen over the step. Returns the full nodal field.
template <typename Scalar>
Vector<Scalar> heat_step(const Vector<Scalar>& theta, Scalar dt, const PhysicalParams<Scalar>& params,
                         const DiscreteOperator<Scalar>& op, const Vector<Scalar>& f1,
                         TimeScheme scheme = TimeScheme::BackwardEuler, const HeatBoundary<Scalar>& bdata = {}) {
  if (!(dt > 0)) throw std::invalid_argument("heat_step: dt must be > 0");
  const std::size_t n_entries = op.grid().boundary_entries().size();
  const Scalar w = implicit_weight<Scalar>(scheme);
  const Scalar inv_cap = Scalar(1) / params.capacity();
  const Vector<Scalar> h0 = detail::or_zero(bdata.start, n_entries);
  const Vector<Scalar> h1 = detail::or_zero(bdata.end, n_entries);

  Vector<Scalar> theta0 = theta;
  if (op.kind() == BoundaryKind::Dirichlet && bdata.start.size()) op.impose_dirichlet(h0, theta0);

  Vector<Scalar> rhs = op.gather(theta0) / dt + op.gather(f1) * inv_cap + w * params.kappa_a * inv_cap * op.correction(h1);
  if (w < Scalar(1)) {
    const Vector<Scalar> lap0 = detail::apply_with_data(op, theta0, h0);
    rhs += (Scalar(1) - w) * inv_cap * op.gather(params.kappa_a * lap0 - params.perfusion() * theta0);
  }

  std::vector<Eigen::Triplet<Scalar>> t;
  heat_block(t, params, op, dt, w, 0);
  const auto n = static_cast<Eigen::Index>(op.free_size());
  Eigen::SparseMatrix<Scalar> a(n, n);
  a.setFromTriplets(t.begin(), t.end());

  Vector<Scalar> out = theta0;
  if (op.kind() == BoundaryKind::Dirichlet) op.impose_dirichlet(h1, out);
  op.scatter(sparse_solve(a, rhs), out);
  return out;
}

/// One step of the frozen-coefficient linearised Westervelt problem
/// u_tt - a1 Delta u_t - a2 Delta u = f2 in first-order form z = (u, u_t),
/// solved as a single block system for (u_new, v_new).
template <typename Scalar>
std::pair<Vector<Scalar>, Vector<Scalar>> linwest_step(const Vector<Scalar>& u, const Vector<Scalar>& v, Scalar dt,
                                                       const FrozenCoefficients<Scalar>& fro,
                                                       const DiscreteOperator<Scalar>& op, const Vector<Scalar>& f2,
                                                       TimeScheme scheme = TimeScheme::BackwardEuler,
                                                       const StepBoundary<Scalar>& bdata = {}) {
  if (!(dt > 0)) throw std::invalid_argument("linwest_step: dt must be > 0");
  fro.validate(op.grid().size());
  const std::size_t n_entries = op.grid().boundary_entries().size();
  const Scalar w = implicit_weight<Scalar>(scheme);
  const auto n = static_cast<Eigen::Index>(op.free_size());

  Vector<Scalar> u0 = u, v0 = v;
  if (op.kind() == BoundaryKind::Dirichlet) {
    if (bdata.u_start.size()) op.impose_dirichlet(bdata.u_start, u0);
    if (bdata.v_start.size()) op.impose_dirichlet(bdata.v_start, v0);
  }
  const Vector<Scalar> gu1 = detail::or_zero(bdata.u_end, n_entries);
  const Vector<Scalar> gv1 = detail::or_zero(bdata.v_end, n_entries);

  const Vector<Scalar> a1 = op.gather(fro.a1), a2 = op.gather(fro.a2);
  Vector<Scalar> rhs(2 * n);
  rhs.head(n) = op.gather(u0) / dt;
  rhs.tail(n) = op.gather(v0) / dt + op.gather(f2) +
                w * (a1.cwiseProduct(op.correction(gv1)) + a2.cwiseProduct(op.correction(gu1)));
  if (w < Scalar(1)) {
    const Vector<Scalar> lu0 = detail::apply_with_data(op, u0, detail::or_zero(bdata.u_start, n_entries));
    const Vector<Scalar> lv0 = detail::apply_with_data(op, v0, detail::or_zero(bdata.v_start, n_entries));
    Vector<Scalar> acc0 = fro.a1.cwiseProduct(lv0) + fro.a2.cwiseProduct(lu0);
    if (fro.e_u.size()) acc0 += fro.e_u.cwiseProduct(u0);
    if (fro.e_v.size()) acc0 += fro.e_v.cwiseProduct(v0);
    rhs.head(n) += (Scalar(1) - w) * op.gather(v0);
    rhs.tail(n) += (Scalar(1) - w) * op.gather(acc0);
  }

  std::vector<Eigen::Triplet<Scalar>> t;
  linwest_block(t, fro, op, dt, w, 0, n);
  Eigen::SparseMatrix<Scalar> a(2 * n, 2 * n);
  a.setFromTriplets(t.begin(), t.end());
  const Vector<Scalar> z = sparse_solve(a, rhs);

  Vector<Scalar> u1 = u0, v1 = v0;
  if (op.kind() == BoundaryKind::Dirichlet) {
    op.impose_dirichlet(gu1, u1);
    op.impose_dirichlet(gv1, v1);
  }
  op.scatter(Vector<Scalar>(z.head(n)), u1);
  op.scatter(Vector<Scalar>(z.tail(n)), v1);
  return {u1, v1};
}

}  // namespace wpsim
