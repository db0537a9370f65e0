#pragma once

#include <Eigen/Core>

#include <array>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "wpsim/errors.hpp"

namespace wpsim {

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Boundary faces of a box, in a fixed order.
enum class Face { XLo = 0, XHi = 1, YLo = 2, YHi = 3 };

inline const char* face_name(Face f) {
  switch (f) {
    case Face::XLo: return "xlo";
    case Face::XHi: return "xhi";
    case Face::YLo: return "ylo";
    case Face::YHi: return "yhi";
  }
  return "?";
}

/// One (boundary node, face) incidence. Corner nodes appear once per face.
struct BoundaryEntry {
  std::size_t node;
  Face face;
};

/// Tensor-product grid of a box in one or two dimensions.
///
/// Nodes include the boundary and are numbered lexicographically with x
/// varying fastest: index = i + nx * j.
template <typename Scalar>
class Grid {
 public:
  Grid(std::vector<Scalar> lower, std::vector<Scalar> upper,
       std::vector<int> nodes)
      : lower_(std::move(lower)), upper_(std::move(upper)), nodes_(std::move(nodes)) {
    const int d = static_cast<int>(nodes_.size());
    if (d != 1 && d != 2) throw UnsupportedDim(d);
    if (static_cast<int>(lower_.size()) != d || static_cast<int>(upper_.size()) != d)
      throw std::invalid_argument("grid: extents and node counts disagree in dimension");
    for (int a = 0; a < d; ++a) {
      if (nodes_[a] < 3) throw std::invalid_argument("grid: need at least 3 nodes per axis");
      if (!(upper_[a] > lower_[a])) throw std::invalid_argument("grid: empty extent");
      spacing_[a] = (upper_[a] - lower_[a]) / Scalar(nodes_[a] - 1);
    }
    build_boundary();
  }

  /// Unit-interval style convenience constructor for 1D.
  static Grid line(Scalar lo, Scalar hi, int n) { return Grid({lo}, {hi}, {n}); }
  static Grid box(Scalar xlo, Scalar xhi, int nx, Scalar ylo, Scalar yhi, int ny) {
    return Grid({xlo, ylo}, {xhi, yhi}, {nx, ny});
  }

  int dim() const { return static_cast<int>(nodes_.size()); }
  int nodes(int axis) const { return nodes_[axis]; }
  Scalar spacing(int axis) const { return spacing_[axis]; }
  Scalar lower(int axis) const { return lower_[axis]; }
  Scalar upper(int axis) const { return upper_[axis]; }
  Scalar extent(int axis) const { return upper_[axis] - lower_[axis]; }

  std::size_t size() const {
    std::size_t n = 1;
    for (int c : nodes_) n *= static_cast<std::size_t>(c);
    return n;
  }

  int nx() const { return nodes_[0]; }
  int ny() const { return dim() == 2 ? nodes_[1] : 1; }

  std::size_t index(int i, int j = 0) const {
    return static_cast<std::size_t>(i) + static_cast<std::size_t>(nx()) * static_cast<std::size_t>(j);
  }
  int ix(std::size_t n) const { return static_cast<int>(n % static_cast<std::size_t>(nx())); }
  int iy(std::size_t n) const { return static_cast<int>(n / static_cast<std::size_t>(nx())); }

  Scalar x(std::size_t n) const { return lower_[0] + spacing_[0] * Scalar(ix(n)); }
  Scalar y(std::size_t n) const { return dim() == 2 ? lower_[1] + spacing_[1] * Scalar(iy(n)) : Scalar(0); }

  bool on_boundary(std::size_t n) const { return on_boundary_[n]; }

  /// All (node, face) incidences on the boundary, faces in enum order.
  const std::vector<BoundaryEntry>& boundary_entries() const { return entries_; }

  /// Trapezoidal quadrature weights (products of 1D weights).
  Vector<Scalar> weights() const {
    Vector<Scalar> w(size());
    for (std::size_t n = 0; n < size(); ++n) {
      Scalar wx = spacing_[0] * ((ix(n) == 0 || ix(n) == nx() - 1) ? Scalar(0.5) : Scalar(1));
      Scalar wy = Scalar(1);
      if (dim() == 2) wy = spacing_[1] * ((iy(n) == 0 || iy(n) == ny() - 1) ? Scalar(0.5) : Scalar(1));
      w[n] = wx * wy;
    }
    return w;
  }

  /// Samples f(x, y) at every node.
  template <typename F>
  Vector<Scalar> sample(F&& f) const {
    Vector<Scalar> out(size());
    for (std::size_t n = 0; n < size(); ++n) out[n] = f(x(n), y(n));
    return out;
  }

  /// Spacing normal to a face.
  Scalar normal_spacing(Face f) const {
    return (f == Face::XLo || f == Face::XHi) ? spacing_[0] : spacing_[1];
  }

 private:
  void build_boundary() {
    on_boundary_.assign(size(), false);
    entries_.clear();
    auto add = [&](std::size_t n, Face f) {
      on_boundary_[n] = true;
      entries_.push_back({n, f});
    };
    for (int j = 0; j < ny(); ++j) add(index(0, j), Face::XLo);
    for (int j = 0; j < ny(); ++j) add(index(nx() - 1, j), Face::XHi);
    if (dim() == 2) {
      for (int i = 0; i < nx(); ++i) add(index(i, 0), Face::YLo);
      for (int i = 0; i < nx(); ++i) add(index(i, ny() - 1), Face::YHi);
    }
  }

  std::vector<Scalar> lower_, upper_;
  std::vector<int> nodes_;
  std::array<Scalar, 2> spacing_{};
  std::vector<bool> on_boundary_;
  std::vector<BoundaryEntry> entries_;
};

}  // namespace wpsim
