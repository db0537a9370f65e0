#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <random>

#include "oracles/mode_recurrence.hpp"
#include "wpsim/eigen_decompose.hpp"
#include "wpsim/laplacian.hpp"

using namespace wpsim;
using Vec = Vector<double>;

TEST_CASE("grid geometry and boundary entries") {
  const auto g = Grid<double>::line(0, 2, 5);
  CHECK(g.size() == 5);
  CHECK(g.spacing(0) == doctest::Approx(0.5));
  CHECK(g.boundary_entries().size() == 2);
  CHECK(g.weights().sum() == doctest::Approx(2.0));
  CHECK(g.on_boundary(0));
  CHECK_FALSE(g.on_boundary(2));

  const auto b = Grid<double>::box(0, 1, 5, 0, 2, 9);
  CHECK(b.size() == 45);
  CHECK(b.weights().sum() == doctest::Approx(2.0));
  // corners appear once per face
  CHECK(b.boundary_entries().size() == 2 * 9 + 2 * 5);
  CHECK(b.x(b.index(4, 8)) == doctest::Approx(1.0));
  CHECK(b.y(b.index(4, 8)) == doctest::Approx(2.0));
}

TEST_CASE("unsupported dimensions are rejected") {
  CHECK_THROWS_AS(Grid<double>({0, 0, 0}, {1, 1, 1}, {3, 3, 3}), UnsupportedDim);
  CHECK_THROWS(Grid<double>::line(0, 1, 2));
}

TEST_CASE("1D eigenvalues match the tridiagonal closed form") {
  const int n = 41;
  const auto g = Grid<double>::line(0, M_PI, n);
  const auto dir = eigen_decompose(build_laplacian(g, BoundaryKind::Dirichlet), 6);
  const auto neu = eigen_decompose(build_laplacian(g, BoundaryKind::Neumann), 6);
  for (int k = 0; k < 6; ++k) {
    CHECK(dir[k].value == doctest::Approx(oracle::tridiagonal_eigenvalue(k + 1, n, M_PI)).epsilon(1e-12));
    CHECK(neu[k].value == doctest::Approx(oracle::tridiagonal_eigenvalue(k, n, M_PI)).scale(1).epsilon(1e-12));
  }
  // continuum limit lambda_1 = 1 within O(h^2)
  const double h = M_PI / (n - 1);
  CHECK(std::abs(dir[0].value - 1.0) < h * h);
}

TEST_CASE("2D Dirichlet eigenvalues are sums of 1D ones") {
  const auto g = Grid<double>::box(0, M_PI, 17, 0, 2 * M_PI, 33);
  const auto ev = eigen_decompose(build_laplacian(g, BoundaryKind::Dirichlet), 3);
  const double lx1 = oracle::tridiagonal_eigenvalue(1, 17, M_PI);
  const double ly1 = oracle::tridiagonal_eigenvalue(1, 33, 2 * M_PI);
  const double ly2 = oracle::tridiagonal_eigenvalue(2, 33, 2 * M_PI);
  const double ly3 = oracle::tridiagonal_eigenvalue(3, 33, 2 * M_PI);
  CHECK(ev[0].value == doctest::Approx(lx1 + ly1).epsilon(1e-12));
  CHECK(ev[1].value == doctest::Approx(lx1 + ly2).epsilon(1e-12));
  CHECK(ev[2].value == doctest::Approx(lx1 + ly3).epsilon(1e-12));
}

TEST_CASE("quadratics are reproduced exactly with inhomogeneous data") {
  // f = x^2 - 3x + 2 on (0.5, 2): Delta f = 2
  const auto g = Grid<double>::line(0.5, 2.0, 11);
  const Vec f = g.sample([](double x, double) { return x * x - 3 * x + 2; });
  const auto& entries = g.boundary_entries();

  SUBCASE("Dirichlet") {
    const auto op = build_laplacian(g, BoundaryKind::Dirichlet);
    const Vec lap = op.apply(f);
    for (std::size_t n = 1; n + 1 < g.size(); ++n) CHECK(lap[n] == doctest::Approx(2.0).epsilon(1e-10));
    Vec trace(entries.size());
    for (std::size_t e = 0; e < entries.size(); ++e) trace[e] = f[entries[e].node];
    const Vec via_matrix = op.matrix() * op.gather(f) + op.correction(trace);
    CHECK((via_matrix - op.gather(lap)).cwiseAbs().maxCoeff() < 1e-10);
  }
  SUBCASE("Neumann") {
    const auto op = build_laplacian(g, BoundaryKind::Neumann);
    Vec flux(entries.size());
    for (std::size_t e = 0; e < entries.size(); ++e) {
      const double x = g.x(entries[e].node);
      const double df = 2 * x - 3;
      flux[e] = entries[e].face == Face::XLo ? -df : df;
    }
    const Vec lap = op.apply(f, flux);
    for (std::size_t n = 0; n < g.size(); ++n) CHECK(lap[n] == doctest::Approx(2.0).epsilon(1e-9));
  }
}

TEST_CASE("2D Neumann closure handles corners") {
  // f = x^2 + y^2: Delta f = 4 everywhere including corners
  const auto g = Grid<double>::box(0, 1, 9, 0, 1.5, 7);
  const auto op = build_laplacian(g, BoundaryKind::Neumann);
  const Vec f = g.sample([](double x, double y) { return x * x + y * y; });
  const auto& entries = g.boundary_entries();
  Vec flux(entries.size());
  for (std::size_t e = 0; e < entries.size(); ++e) {
    const double x = g.x(entries[e].node), y = g.y(entries[e].node);
    switch (entries[e].face) {
      case Face::XLo: flux[e] = -2 * x; break;
      case Face::XHi: flux[e] = 2 * x; break;
      case Face::YLo: flux[e] = -2 * y; break;
      case Face::YHi: flux[e] = 2 * y; break;
    }
  }
  const Vec lap = op.apply(f, flux);
  CHECK((lap.array() - 4.0).abs().maxCoeff() < 1e-9);
}

// Property tests over random grids: Dirichlet symmetry, Neumann symmetry in
// the trapezoidal inner product, zero row sums, negative semi-definiteness.
TEST_CASE("structural invariants on random grids") {
  std::mt19937 rng(12345);
  std::uniform_int_distribution<int> nodes(3, 14);
  std::uniform_real_distribution<double> ext(0.2, 5.0);
  for (int trial = 0; trial < 40; ++trial) {
    const bool two_d = trial % 2 == 1;
    const auto g = two_d ? Grid<double>::box(0, ext(rng), nodes(rng), -1, -1 + ext(rng), nodes(rng))
                         : Grid<double>::line(0, ext(rng), nodes(rng));
    const auto d = build_laplacian(g, BoundaryKind::Dirichlet);
    const Eigen::MatrixXd a = Eigen::MatrixXd(d.matrix());
    CHECK((a - a.transpose()).cwiseAbs().maxCoeff() <= 1e-9 * a.cwiseAbs().maxCoeff());

    const auto n = build_laplacian(g, BoundaryKind::Neumann);
    const Eigen::MatrixXd b = Eigen::MatrixXd(n.matrix());
    const Eigen::MatrixXd wb = n.free_weights().asDiagonal() * b;
    CHECK((wb - wb.transpose()).cwiseAbs().maxCoeff() <= 1e-9 * wb.cwiseAbs().maxCoeff());
    CHECK(b.rowwise().sum().cwiseAbs().maxCoeff() <= 1e-9 * b.cwiseAbs().maxCoeff());

    const Eigen::VectorXd x = Eigen::VectorXd::Random(static_cast<Eigen::Index>(d.free_size()));
    CHECK(x.dot(a * x) <= 1e-12);
  }
}

TEST_CASE("operator built from a boundary specification picks the closure") {
  const auto g = Grid<double>::line(0, 1, 9);
  const auto bc = BoundaryConditionSpec<double>::ambient(1, 0, 2.0);
  CHECK(build_laplacian(g, bc, FieldRole::Pressure).kind() == BoundaryKind::Neumann);
  CHECK(build_laplacian(g, bc, FieldRole::Temperature).kind() == BoundaryKind::Dirichlet);
  CHECK(build_laplacian(g, bc, FieldRole::Temperature).free_size() == 7);
  CHECK(bc.h.sample(g, 0.3)[0] == doctest::Approx(2.0));
  CHECK_THROWS(boundary_kind(2));
}
