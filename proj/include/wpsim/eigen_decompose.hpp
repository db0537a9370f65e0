#pragma once

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <vector>

#include "wpsim/errors.hpp"
#include "wpsim/laplacian.hpp"

namespace wpsim {

template <typename Scalar>
struct EigenPair {
  Scalar value;          ///< eigenvalue of -Delta_h (nonnegative)
  Vector<Scalar> vector; ///< full nodal field, unit discrete L2 norm
};

enum class EigenMethod { Automatic, Dense, SubspaceIteration };

namespace detail {

// -D A D^{-1} with D = diag(sqrt(w)): symmetric for both closures.
template <typename Scalar>
Eigen::SparseMatrix<Scalar> symmetrized_negative(const DiscreteOperator<Scalar>& op) {
  const Vector<Scalar> sw = op.free_weights().array().sqrt();
  Eigen::SparseMatrix<Scalar> k = -(sw.asDiagonal() * Eigen::SparseMatrix<Scalar>(op.matrix()) *
                                    sw.cwiseInverse().asDiagonal());
  // remove round-off asymmetry
  Eigen::SparseMatrix<Scalar> kt = k.transpose();
  return (k + kt) * Scalar(0.5);
}

}  // namespace detail

/// The `count` smallest eigenpairs of -Delta_h, ascending, with eigenvectors
/// normalised in the trapezoidal L2 norm and a positive mean sign convention.
template <typename Scalar>
std::vector<EigenPair<Scalar>> eigen_decompose(const DiscreteOperator<Scalar>& op, int count,
                                               EigenMethod method = EigenMethod::Automatic,
                                               Scalar tol = Scalar(1e-12), int max_iter = 1000) {
  using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  const auto n = static_cast<Eigen::Index>(op.free_size());
  count = static_cast<int>(std::min<Eigen::Index>(count, n));
  if (count <= 0) return {};
  const Eigen::SparseMatrix<Scalar> k = detail::symmetrized_negative(op);

  if (method == EigenMethod::Automatic) method = n <= 2500 ? EigenMethod::Dense : EigenMethod::SubspaceIteration;

  Vector<Scalar> values(count);
  Mat vectors(n, count);
  if (method == EigenMethod::Dense) {
    const Mat dense(k);
    Eigen::SelfAdjointEigenSolver<Mat> es(dense);
    if (es.info() != Eigen::Success) throw ConvergenceFailure("dense symmetric eigensolver failed");
    values = es.eigenvalues().head(count);
    vectors = es.eigenvectors().leftCols(count);
  } else {
    // Shift-invert subspace iteration with Rayleigh-Ritz projection.
    const int block = std::min<int>(static_cast<int>(n), count + std::max(count, 8));
    Eigen::SparseMatrix<Scalar> shifted = k;
    const Scalar shift = Scalar(1);
    for (Eigen::Index i = 0; i < n; ++i) shifted.coeffRef(i, i) += shift;
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<Scalar>> ldlt(shifted);
    if (ldlt.info() != Eigen::Success) throw ConvergenceFailure("shift-invert factorisation failed");

    Mat x(n, block);
    for (Eigen::Index c = 0; c < block; ++c)
      for (Eigen::Index r = 0; r < n; ++r)
        x(r, c) = Scalar(1) + Scalar((r * (c + 1) * 7919 + 13 * c) % 101) / Scalar(101);
    bool converged = false;
    for (int it = 0; it < max_iter && !converged; ++it) {
      x = ldlt.solve(x);
      Eigen::HouseholderQR<Mat> qr(x);
      x = qr.householderQ() * Mat::Identity(n, block);
      Mat h = x.transpose() * (k * x);
      Eigen::SelfAdjointEigenSolver<Mat> small((h + h.transpose()) * Scalar(0.5));
      x = x * small.eigenvectors();
      values = small.eigenvalues().head(count);
      converged = true;
      for (int c = 0; c < count; ++c) {
        const Scalar res = (k * x.col(c) - values[c] * x.col(c)).norm();
        if (res > tol * std::max(Scalar(1), std::abs(values[c])) * Scalar(100)) {
          converged = false;
          break;
        }
      }
    }
    if (!converged) throw ConvergenceFailure("subspace iteration stalled after " + std::to_string(max_iter) + " sweeps");
    vectors = x.leftCols(count);
  }

  const Vector<Scalar> sw = op.free_weights().array().sqrt();
  std::vector<EigenPair<Scalar>> out;
  out.reserve(count);
  for (int c = 0; c < count; ++c) {
    Vector<Scalar> free = vectors.col(c).cwiseQuotient(sw);
    const Scalar norm = std::sqrt((op.free_weights().array() * free.array().square()).sum());
    free /= norm;
    if ((op.free_weights().array() * free.array()).sum() < Scalar(0)) free = -free;
    Vector<Scalar> full = Vector<Scalar>::Zero(static_cast<Eigen::Index>(op.grid().size()));
    op.scatter(free, full);
    out.push_back({values[c], std::move(full)});
  }
  return out;
}

}  // namespace wpsim
