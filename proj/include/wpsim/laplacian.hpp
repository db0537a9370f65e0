#pragma once

#include <Eigen/SparseCore>

#include <vector>

#include "wpsim/boundary.hpp"
#include "wpsim/grid.hpp"

namespace wpsim {

template <typename Scalar>
using SparseMatrix = Eigen::SparseMatrix<Scalar, Eigen::RowMajor>;

/// Which field an operator was assembled for; only recorded for reports.
enum class FieldRole { Pressure, Temperature };

/// Second-order finite-difference Laplacian on a box with a Dirichlet or
/// Neumann closure.
///
/// Unknowns are the "free" nodes: interior nodes under Dirichlet, all nodes
/// under Neumann (ghost-node closure). Inhomogeneous boundary data enters
/// through an affine correction, so that on free nodes
///
///   (Delta_h f)_free = matrix() * f_free + correction(data).
///
/// The Dirichlet matrix is symmetric. The Neumann matrix is symmetric with
/// respect to the trapezoidal inner product, i.e. diag(w) * matrix() is
/// symmetric, and its rows sum to zero.
template <typename Scalar>
class DiscreteOperator {
 public:
  DiscreteOperator() = default;

  const Grid<Scalar>& grid() const { return *grid_; }
  BoundaryKind kind() const { return kind_; }
  FieldRole role() const { return role_; }

  const SparseMatrix<Scalar>& matrix() const { return free_; }
  std::size_t free_size() const { return free_nodes_.size(); }
  /// Node index of each free unknown.
  const std::vector<std::size_t>& free_nodes() const { return free_nodes_; }
  /// Free index of a node, or -1 for a Dirichlet boundary node.
  long free_index(std::size_t node) const { return free_index_[node]; }
  /// Trapezoidal weights restricted to free nodes.
  const Vector<Scalar>& free_weights() const { return free_weights_; }

  Vector<Scalar> gather(const Vector<Scalar>& full) const {
    Vector<Scalar> out(static_cast<Eigen::Index>(free_nodes_.size()));
    for (std::size_t k = 0; k < free_nodes_.size(); ++k) out[k] = full[free_nodes_[k]];
    return out;
  }
  void scatter(const Vector<Scalar>& free, Vector<Scalar>& full) const {
    for (std::size_t k = 0; k < free_nodes_.size(); ++k) full[free_nodes_[k]] = free[k];
  }

  /// Affine contribution of boundary data sampled over grid.boundary_entries().
  Vector<Scalar> correction(const Vector<Scalar>& entry_values) const {
    Vector<Scalar> out = Vector<Scalar>::Zero(static_cast<Eigen::Index>(free_nodes_.size()));
    const auto& entries = grid_->boundary_entries();
    if (kind_ == BoundaryKind::Dirichlet) {
      Vector<Scalar> trace = Vector<Scalar>::Zero(static_cast<Eigen::Index>(grid_->size()));
      impose_dirichlet(entry_values, trace);
      out = coupling_ * trace;
    } else {
      for (std::size_t e = 0; e < entries.size(); ++e) {
        const long k = free_index_[entries[e].node];
        out[k] += Scalar(2) * entry_values[static_cast<Eigen::Index>(e)] / grid_->normal_spacing(entries[e].face);
      }
    }
    return out;
  }

  /// Writes Dirichlet trace data into the boundary nodes of a full field.
  /// Corner nodes take the value of the first face listing them.
  void impose_dirichlet(const Vector<Scalar>& entry_values, Vector<Scalar>& full) const {
    const auto& entries = grid_->boundary_entries();
    std::vector<bool> done(grid_->size(), false);
    for (std::size_t e = 0; e < entries.size(); ++e) {
      const std::size_t n = entries[e].node;
      if (done[n]) continue;
      full[n] = entry_values[static_cast<Eigen::Index>(e)];
      done[n] = true;
    }
  }

  /// Delta_h applied to a full nodal field. Dirichlet fields carry their own
  /// boundary values; Neumann fields take the outward normal derivative data
  /// (empty means homogeneous). Dirichlet boundary rows of the result are 0.
  Vector<Scalar> apply(const Vector<Scalar>& full, const Vector<Scalar>& neumann_data = {}) const {
    Vector<Scalar> out = Vector<Scalar>::Zero(full.size());
    Vector<Scalar> free = free_ * gather(full);
    if (kind_ == BoundaryKind::Dirichlet) {
      free += coupling_ * full;
    } else if (neumann_data.size() > 0) {
      free += correction(neumann_data);
    }
    scatter(free, out);
    return out;
  }

  static DiscreteOperator assemble(const Grid<Scalar>& grid, BoundaryKind kind, FieldRole role);

 private:
  const Grid<Scalar>* grid_ = nullptr;
  BoundaryKind kind_ = BoundaryKind::Dirichlet;
  FieldRole role_ = FieldRole::Pressure;
  SparseMatrix<Scalar> free_;
  // free rows x all nodes, boundary columns only (Dirichlet affine part)
  SparseMatrix<Scalar> coupling_;
  std::vector<std::size_t> free_nodes_;
  std::vector<long> free_index_;
  Vector<Scalar> free_weights_;
};

template <typename Scalar>
DiscreteOperator<Scalar> DiscreteOperator<Scalar>::assemble(const Grid<Scalar>& grid, BoundaryKind kind,
                                                            FieldRole role) {
  if (grid.dim() != 1 && grid.dim() != 2) throw UnsupportedDim(grid.dim());
  DiscreteOperator op;
  op.grid_ = &grid;
  op.kind_ = kind;
  op.role_ = role;

  const std::size_t n_nodes = grid.size();
  op.free_index_.assign(n_nodes, -1);
  for (std::size_t n = 0; n < n_nodes; ++n) {
    if (kind == BoundaryKind::Neumann || !grid.on_boundary(n)) {
      op.free_index_[n] = static_cast<long>(op.free_nodes_.size());
      op.free_nodes_.push_back(n);
    }
  }
  const Vector<Scalar> w = grid.weights();
  op.free_weights_ = op.gather(w);

  using Triplet = Eigen::Triplet<Scalar>;
  std::vector<Triplet> inner, boundary;
  inner.reserve(op.free_nodes_.size() * (1 + 2 * grid.dim()));

  for (std::size_t k = 0; k < op.free_nodes_.size(); ++k) {
    const std::size_t n = op.free_nodes_[k];
    const int i[2] = {grid.ix(n), grid.iy(n)};
    Scalar diag = 0;
    for (int a = 0; a < grid.dim(); ++a) {
      const Scalar inv_h2 = Scalar(1) / (grid.spacing(a) * grid.spacing(a));
      const int count = grid.nodes(a);
      diag -= Scalar(2) * inv_h2;
      for (int side : {-1, 1}) {
        int nb[2] = {i[0], i[1]};
        nb[a] += side;
        if (nb[a] < 0 || nb[a] >= count) {
          // Ghost node mirrored through the boundary node (Neumann only):
          // the interior neighbour on the other side gets double weight.
          continue;
        }
        Scalar coeff = inv_h2;
        const bool mirrored = (i[a] == 0 || i[a] == count - 1);
        if (mirrored) coeff *= Scalar(2);
        const std::size_t m = grid.index(nb[0], nb[1]);
        const long km = op.free_index_[m];
        if (km >= 0) {
          inner.emplace_back(static_cast<int>(k), static_cast<int>(km), coeff);
        } else {
          boundary.emplace_back(static_cast<int>(k), static_cast<int>(m), coeff);
        }
      }
    }
    inner.emplace_back(static_cast<int>(k), static_cast<int>(k), diag);
  }

  const auto nf = static_cast<Eigen::Index>(op.free_nodes_.size());
  op.free_.resize(nf, nf);
  op.free_.setFromTriplets(inner.begin(), inner.end());
  op.free_.makeCompressed();
  op.coupling_.resize(nf, static_cast<Eigen::Index>(n_nodes));
  op.coupling_.setFromTriplets(boundary.begin(), boundary.end());
  op.coupling_.makeCompressed();
  return op;
}

/// Assembles the 3-point (1D) or 5-point (2D) Laplacian.
///
/// The grid must outlive the operator.
template <typename Scalar>
DiscreteOperator<Scalar> build_laplacian(const Grid<Scalar>& grid, BoundaryKind kind,
                                         FieldRole role = FieldRole::Pressure) {
  return DiscreteOperator<Scalar>::assemble(grid, kind, role);
}

/// Builds the operator for u (closure j) or theta (closure ell) of a
/// boundary specification.
template <typename Scalar>
DiscreteOperator<Scalar> build_laplacian(const Grid<Scalar>& grid, const BoundaryConditionSpec<Scalar>& bc,
                                         FieldRole role) {
  return build_laplacian(grid, role == FieldRole::Pressure ? bc.u_kind() : bc.theta_kind(), role);
}

}  // namespace wpsim
