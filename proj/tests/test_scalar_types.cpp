#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "oracles/mode_recurrence.hpp"
#include "wpsim/eigen_decompose.hpp"
#include "wpsim/timestepper.hpp"

using namespace wpsim;

TEST_CASE_TEMPLATE("core instantiates for other scalar types", T, float, long double) {
  using Vec = Vector<T>;
  const auto g = Grid<T>::line(T(0), T(M_PI), 17);
  const auto op = build_laplacian(g, BoundaryKind::Dirichlet);
  const auto ev = eigen_decompose(op, 2, EigenMethod::Dense, T(1e-6));
  const double tol = std::is_same_v<T, float> ? 1e-4 : 1e-12;
  CHECK(static_cast<double>(ev[0].value) ==
        doctest::Approx(oracle::tridiagonal_eigenvalue(1, 17, M_PI)).epsilon(tol));

  const auto fro = FrozenCoefficients<T>::constant(17, T(0.3), T(1));
  const Vec zero = Vec::Zero(17);
  const auto [u, v] = linwest_step(ev[0].vector, zero, T(0.01), fro, op, zero, TimeScheme::Trapezoidal);
  (void)v;
  CHECK(static_cast<double>(u.norm()) > 0);

  Model<T> model;
  model.coeffs.k = Coefficient<T>::constant(T(0.5));
  const auto bc = BoundaryConditionSpec<T>::ambient(0, 0, T(1));
  const auto ops = Operators<T>::build(g, bc);
  State<T> s{Vec(T(0.1) * ev[0].vector), zero, Vec::Ones(17), T(0)};
  StepperConfig<T> cfg;
  cfg.newton_tol = std::is_same_v<T, float> ? T(1e-4) : T(1e-12);
  const auto r = nonlinear_step(s, T(0.01), TimeScheme::BackwardEuler, cfg, model, ops, bc);
  CHECK(r.iterations >= 1);
  CHECK(static_cast<double>(r.min_m) > 0.9);
}
