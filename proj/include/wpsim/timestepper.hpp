#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "wpsim/linear_solvers.hpp"
#include "wpsim/model.hpp"

namespace wpsim {

template <typename Scalar>
struct State {
  Vector<Scalar> u;      ///< acoustic pressure
  Vector<Scalar> v;      ///< u_t
  Vector<Scalar> theta;  ///< temperature
  Scalar t = 0;
};

template <typename Scalar>
struct StepperConfig {
  Scalar dt = Scalar(1e-2);
  Scalar dt_min = Scalar(1e-6);
  Scalar newton_tol = Scalar(1e-10);
  int newton_max = 20;
  TimeScheme scheme = TimeScheme::Trapezoidal;
  Scalar m_min = Scalar(1e-6);
  int max_halvings = 8;
  /// Record every n-th accepted base step (the initial and final states are always kept).
  int sample_every = 1;
  /// Number of initial backward-Euler steps taken before a trapezoidal run.
  int startup_backward_euler = 0;

  void validate() const {
    if (!(dt_min > 0)) throw std::invalid_argument("dt_min must be > 0");
    if (!(dt >= dt_min)) throw std::invalid_argument("dt must be >= dt_min");
    if (!(newton_tol > 0)) throw std::invalid_argument("newton_tol must be > 0");
    if (newton_max < 1) throw std::invalid_argument("newton_max must be >= 1");
    if (max_halvings < 0) throw std::invalid_argument("max_halvings must be >= 0");
    if (sample_every < 1) throw std::invalid_argument("sample_every must be >= 1");
    if (startup_backward_euler < 0) throw std::invalid_argument("startup_backward_euler must be >= 0");
  }
};

/// Discrete Laplacians for u (closure j) and theta (closure ell) on one grid.
template <typename Scalar>
struct Operators {
  DiscreteOperator<Scalar> u;
  DiscreteOperator<Scalar> theta;

  const Grid<Scalar>& grid() const { return u.grid(); }

  static Operators build(const Grid<Scalar>& grid, const BoundaryConditionSpec<Scalar>& bc) {
    return {build_laplacian(grid, bc, FieldRole::Pressure), build_laplacian(grid, bc, FieldRole::Temperature)};
  }
};

/// Boundary data of all three fields sampled at one time instant.
template <typename Scalar>
struct BoundarySample {
  Vector<Scalar> u, v, theta;

  static BoundarySample at(const BoundaryConditionSpec<Scalar>& bc, const Grid<Scalar>& grid, Scalar t) {
    return {bc.g.sample(grid, t), bc.g.sample_rate(grid, t), bc.h.sample(grid, t)};
  }
};

struct StepRecord {
  double t = 0;   ///< time at the end of the step
  double dt = 0;
  int newton_iterations = 0;
  std::vector<double> residuals;
  double min_m = 0;  ///< min over nodes of 1 - 2 k(theta) u at the accepted state
  int halving_level = 0;
  bool backward_euler = false;
};

template <typename Scalar>
struct Trajectory {
  std::vector<State<Scalar>> samples;
  std::vector<double> sample_min_m;
  std::vector<StepRecord> steps;
  std::vector<std::string> warnings;
};

namespace detail {

template <typename Scalar>
Scalar weighted_norm(const Vector<Scalar>& r, const Vector<Scalar>& w) {
  return std::sqrt((w.array() * r.array().square()).sum());
}

/// Nodal right-hand sides of the first-order system and their ingredients.
template <typename Scalar>
struct Rates {
  Vector<Scalar> m, accel, heat, lap_u, lap_v, lap_theta;
};

template <typename Scalar>
Rates<Scalar> evaluate_rates(const Vector<Scalar>& u, const Vector<Scalar>& v, const Vector<Scalar>& theta,
                             Scalar t, const Model<Scalar>& model, const Operators<Scalar>& ops,
                             const BoundarySample<Scalar>& bs) {
  Rates<Scalar> r;
  r.lap_u = apply_with_data(ops.u, u, bs.u);
  r.lap_v = apply_with_data(ops.u, v, bs.v);
  r.lap_theta = apply_with_data(ops.theta, theta, bs.theta);
  Vector<Scalar> fu, ft;
  const Vector<Scalar>* pfu = nullptr;
  const Vector<Scalar>* pft = nullptr;
  if (model.forcing) {
    fu = Vector<Scalar>::Zero(u.size());
    ft = Vector<Scalar>::Zero(u.size());
    model.forcing(t, fu, ft);
    pfu = &fu;
    pft = &ft;
  }
  r.m = parabolicity_factor(u, theta, model.coeffs);
  r.accel = westervelt_accel(u, v, theta, r.lap_u, r.lap_v, model.coeffs, model.m_min, pfu);
  r.heat = pennes_rate(theta, v, r.lap_theta, model.params, model.source, pft);
  return r;
}

template <typename Scalar>
void impose_all(const Operators<Scalar>& ops, const BoundarySample<Scalar>& bs, Vector<Scalar>& u, Vector<Scalar>& v,
                Vector<Scalar>& theta) {
  if (ops.u.kind() == BoundaryKind::Dirichlet) {
    ops.u.impose_dirichlet(bs.u, u);
    ops.u.impose_dirichlet(bs.v, v);
  }
  if (ops.theta.kind() == BoundaryKind::Dirichlet) ops.theta.impose_dirichlet(bs.theta, theta);
}

}  // namespace detail

/// Outcome of one implicit step attempt.
template <typename Scalar>
struct StepResult {
  State<Scalar> state;
  int iterations = 0;
  std::vector<double> residuals;
  Scalar min_m = 0;
};

/// One step of the coupled system with a fixed step size, solved by Newton's
/// method with the exact Jacobian. Unknowns are the free nodes of u, v and
/// theta; Dirichlet nodes take the boundary data at the new time. Throws
/// ParabolicityLost if an iterate leaves the guard and NewtonDivergence if
/// the residual does not reach newton_tol * max(1, |known terms|) within
/// cfg.newton_max updates.
template <typename Scalar>
StepResult<Scalar> nonlinear_step(const State<Scalar>& s, Scalar dt, TimeScheme scheme, const StepperConfig<Scalar>& cfg,
                                  const Model<Scalar>& model, const Operators<Scalar>& ops,
                                  const BoundaryConditionSpec<Scalar>& bc) {
  const auto& grid = ops.grid();
  const Scalar w = implicit_weight<Scalar>(scheme);
  const Scalar t1 = s.t + dt;
  const auto nu = static_cast<Eigen::Index>(ops.u.free_size());
  const auto nt = static_cast<Eigen::Index>(ops.theta.free_size());
  const Eigen::Index n = 2 * nu + nt;

  const auto b0 = BoundarySample<Scalar>::at(bc, grid, s.t);
  const auto b1 = BoundarySample<Scalar>::at(bc, grid, t1);

  Model<Scalar> guarded = model;
  guarded.m_min = cfg.m_min;

  // Explicit part of the theta-method.
  Vector<Scalar> old_u = ops.u.gather(s.u) / dt, old_v = ops.u.gather(s.v) / dt,
                 old_t = ops.theta.gather(s.theta) / dt;
  if (w < Scalar(1)) {
    const auto r0 = detail::evaluate_rates(s.u, s.v, s.theta, s.t, guarded, ops, b0);
    old_u += (Scalar(1) - w) * ops.u.gather(s.v);
    old_v += (Scalar(1) - w) * ops.u.gather(r0.accel);
    old_t += (Scalar(1) - w) * ops.theta.gather(r0.heat);
  }

  Vector<Scalar> weights(n);
  weights << ops.u.free_weights(), ops.u.free_weights(), ops.theta.free_weights();

  // Round-off in the residual scales with the known terms |z_old|/dt, so
  // the tolerance is taken relative to them once they exceed 1.
  Vector<Scalar> known(n);
  known << old_u, old_v, old_t;
  const Scalar tol = cfg.newton_tol * std::max(Scalar(1), detail::weighted_norm(known, weights));

  StepResult<Scalar> out;
  Vector<Scalar> u = s.u, v = s.v, th = s.theta;
  detail::impose_all(ops, b1, u, v, th);

  const auto& co = model.coeffs;
  for (;;) {
    const auto r1 = detail::evaluate_rates(u, v, th, t1, guarded, ops, b1);
    Vector<Scalar> f(n);
    f.segment(0, nu) = ops.u.gather(u) / dt - w * ops.u.gather(v) - old_u;
    f.segment(nu, nu) = ops.u.gather(v) / dt - w * ops.u.gather(r1.accel) - old_v;
    f.segment(2 * nu, nt) = ops.theta.gather(th) / dt - w * ops.theta.gather(r1.heat) - old_t;
    const Scalar res = detail::weighted_norm(f, weights);
    out.residuals.push_back(static_cast<double>(res));
    if (out.iterations >= 1 && res <= tol) {
      out.min_m = r1.m.minCoeff();
      break;
    }
    if (out.iterations >= cfg.newton_max || !std::isfinite(static_cast<double>(res)))
      throw NewtonDivergence(out.iterations, out.residuals);

    // Jacobian of the rate-form residual at the current iterate.
    const Vector<Scalar> inv_m = r1.m.cwiseInverse();
    const Vector<Scalar> k = co.k.map(th);
    FrozenCoefficients<Scalar> fro;
    fro.a1 = co.b.map(th).cwiseProduct(inv_m);
    fro.a2 = co.c.map(th).array().square().matrix().cwiseProduct(inv_m);
    if (!co.k.is_constant() || co.k(Scalar(0)) != Scalar(0)) {
      fro.e_u = (Scalar(2) * k.array() * r1.accel.array() * inv_m.array()).matrix();
      fro.e_v = (Scalar(4) * k.array() * v.array() * inv_m.array()).matrix();
    }
    std::vector<Eigen::Triplet<Scalar>> trip;
    trip.reserve(static_cast<std::size_t>(ops.u.matrix().nonZeros() * 2 + 2 * nu + ops.theta.matrix().nonZeros() + 2 * nt));
    linwest_block(trip, fro, ops.u, dt, w, 0, nu);
    heat_block(trip, model.params, ops.theta, dt, w, 2 * nu);

    const bool theta_dependent = !co.c.is_constant() || !co.b.is_constant() || !co.k.is_constant();
    if (theta_dependent) {
      const Vector<Scalar> c = co.c.map(th), dc = co.c.map_derivative(th), db = co.b.map_derivative(th),
                           dk = co.k.map_derivative(th);
      for (Eigen::Index i = 0; i < nu; ++i) {
        const std::size_t node = ops.u.free_nodes()[static_cast<std::size_t>(i)];
        const long col = ops.theta.free_index(node);
        if (col < 0) continue;
        const Scalar d = (Scalar(2) * c[node] * dc[node] * r1.lap_u[node] + db[node] * r1.lap_v[node] +
                          Scalar(2) * dk[node] * v[node] * v[node] + Scalar(2) * dk[node] * u[node] * r1.accel[node]) *
                         inv_m[node];
        if (d != Scalar(0)) trip.emplace_back(nu + i, 2 * nu + col, -w * d);
      }
    }
    if (!model.source.frozen() && model.source.kind() != SourceModel<Scalar>::Kind::Zero) {
      const Vector<Scalar> dq = model.source.evaluate_derivative(v) / model.params.capacity();
      for (Eigen::Index i = 0; i < nt; ++i) {
        const std::size_t node = ops.theta.free_nodes()[static_cast<std::size_t>(i)];
        const long col = ops.u.free_index(node);
        if (col < 0 || dq[node] == Scalar(0)) continue;
        trip.emplace_back(2 * nu + i, nu + col, -w * dq[node]);
      }
    }
    Eigen::SparseMatrix<Scalar> jac(n, n);
    jac.setFromTriplets(trip.begin(), trip.end());
    const Vector<Scalar> delta = sparse_solve(jac, Vector<Scalar>(-f));

    Vector<Scalar> fu = ops.u.gather(u) + delta.segment(0, nu);
    Vector<Scalar> fv = ops.u.gather(v) + delta.segment(nu, nu);
    Vector<Scalar> ft = ops.theta.gather(th) + delta.segment(2 * nu, nt);
    ops.u.scatter(fu, u);
    ops.u.scatter(fv, v);
    ops.theta.scatter(ft, th);
    ++out.iterations;
  }
  out.state = {u, v, th, t1};
  return out;
}

/// Declared integrability exponents of the solution class.
struct Exponents {
  double p = 2, q = 2, r = 2, s = 2;
};

struct CompatibilityCondition {
  std::string name;
  bool required = false;
  double mismatch = 0;  ///< max over boundary entries of |B f - data|
  bool satisfied = false;
  /// "passed", "failed" (required and violated) or "not-required".
  std::string status() const {
    if (!required) return "not-required";
    return satisfied ? "passed" : "failed";
  }
};

struct CompatibilityReport {
  std::vector<CompatibilityCondition> conditions;
  bool ok() const {
    for (const auto& c : conditions)
      if (c.required && !c.satisfied) return false;
    return true;
  }
};

/// Boundary operator applied to a nodal field over grid.boundary_entries():
/// the trace, or a second-order one-sided outward normal derivative.
template <typename Scalar>
Vector<Scalar> boundary_operator(const Vector<Scalar>& f, const Grid<Scalar>& grid, BoundaryKind kind) {
  const auto& entries = grid.boundary_entries();
  Vector<Scalar> out(static_cast<Eigen::Index>(entries.size()));
  for (std::size_t e = 0; e < entries.size(); ++e) {
    const std::size_t n = entries[e].node;
    if (kind == BoundaryKind::Dirichlet) {
      out[e] = f[n];
      continue;
    }
    const Face face = entries[e].face;
    const int axis = (face == Face::XLo || face == Face::XHi) ? 0 : 1;
    const int dir = (face == Face::XLo || face == Face::YLo) ? 1 : -1;  // inward step
    int i[2] = {grid.ix(n), grid.iy(n)};
    auto at = [&](int step) {
      int j[2] = {i[0], i[1]};
      j[axis] += dir * step;
      return f[grid.index(j[0], j[1])];
    };
    // outward derivative = -(inward derivative)
    out[e] = -(Scalar(-3) * at(0) + Scalar(4) * at(1) - at(2)) / (Scalar(2) * grid.spacing(axis));
  }
  return out;
}

/// Compatibility of initial and boundary data at t = 0:
///   B_j u0 = g(0) always; B_j u1 = g_t(0) when 1 - j/2 - 1/(2q) > 1/p;
///   B_ell theta0 = h(0) when 1 - ell/2 - 1/(2s) > 1/r.
template <typename Scalar>
CompatibilityReport check_compatibility(const State<Scalar>& s0, const Grid<Scalar>& grid,
                                        const BoundaryConditionSpec<Scalar>& bc, const Exponents& ex = {},
                                        double tol = 1e-8) {
  auto mismatch = [&](const Vector<Scalar>& f, BoundaryKind kind, const Vector<Scalar>& data) {
    const Vector<Scalar> bf = boundary_operator(f, grid, kind);
    return bf.size() ? static_cast<double>((bf - data).cwiseAbs().maxCoeff()) : 0.0;
  };
  const double j = bc.j, ell = bc.ell;
  CompatibilityReport rep;
  CompatibilityCondition c0{"u0_trace", true, mismatch(s0.u, bc.u_kind(), bc.g.sample(grid, s0.t)), false};
  CompatibilityCondition c1{"u1_trace", 1 - j / 2 - 1 / (2 * ex.q) > 1 / ex.p,
                            mismatch(s0.v, bc.u_kind(), bc.g.sample_rate(grid, s0.t)), false};
  CompatibilityCondition c2{"theta0_trace", 1 - ell / 2 - 1 / (2 * ex.s) > 1 / ex.r,
                            mismatch(s0.theta, bc.theta_kind(), bc.h.sample(grid, s0.t)), false};
  for (auto* c : {&c0, &c1, &c2}) {
    c->satisfied = c->mismatch <= tol;
    rep.conditions.push_back(*c);
  }
  return rep;
}

/// Options of integrate beyond the stepper configuration.
template <typename Scalar>
struct IntegrateOptions {
  Exponents exponents;
  /// Called after every accepted step (including halved sub-steps).
  std::function<void(const State<Scalar>&)> on_step;
};

namespace detail {

template <typename Scalar>
void advance(State<Scalar>& s, Scalar dt, int level, bool backward_euler, const StepperConfig<Scalar>& cfg,
             const Model<Scalar>& model, const Operators<Scalar>& ops, const BoundaryConditionSpec<Scalar>& bc,
             Trajectory<Scalar>& traj, const IntegrateOptions<Scalar>& opt) {
  const TimeScheme scheme = backward_euler ? TimeScheme::BackwardEuler : cfg.scheme;
  try {
    auto r = nonlinear_step(s, dt, scheme, cfg, model, ops, bc);
    s = std::move(r.state);
    traj.steps.push_back({static_cast<double>(s.t), static_cast<double>(dt), r.iterations, std::move(r.residuals),
                          static_cast<double>(r.min_m), level, scheme == TimeScheme::BackwardEuler});
    if (opt.on_step) opt.on_step(s);
  } catch (const NumericalFailure& e) {
    const Scalar half = dt / Scalar(2);
    if (level >= cfg.max_halvings || half < cfg.dt_min) {
      // rethrow preserving the dynamic type, tagged with the failure time
      auto tag = [&](auto ex) {
        ex.time = static_cast<double>(s.t);
        throw ex;
      };
      if (auto* p = dynamic_cast<const ParabolicityLost*>(&e)) tag(*p);
      if (auto* p = dynamic_cast<const NewtonDivergence*>(&e)) {
        // Near a crossing m^2 falls linearly, so m / (2 |m_t|) is the time left.
        // A step that cannot be completed within a few of those is the
        // degeneracy itself rather than a solver weakness.
        const auto r = evaluate_rates(s.u, s.v, s.theta, s.t, model, ops, BoundarySample<Scalar>::at(bc, ops.grid(), s.t));
        const Vector<Scalar> m_t = Scalar(-2) * (model.coeffs.k.map(s.theta).cwiseProduct(s.v) +
                                                 model.coeffs.k.map_derivative(s.theta).cwiseProduct(r.heat).cwiseProduct(s.u));
        for (Eigen::Index i = 0; i < r.m.size(); ++i) {
          if (m_t[i] < 0 && r.m[i] / (Scalar(-2) * m_t[i]) < Scalar(4) * dt)
            tag(ParabolicityLost(static_cast<std::size_t>(i), static_cast<double>(r.m[i])));
        }
        tag(*p);
      }
      if (auto* p = dynamic_cast<const LinearSolveFailure*>(&e)) tag(*p);
      throw;
    }
    advance(s, half, level + 1, backward_euler, cfg, model, ops, bc, traj, opt);
    advance(s, half, level + 1, backward_euler, cfg, model, ops, bc, traj, opt);
  }
}

template <typename Scalar>
Trajectory<Scalar> integrate_pass(const State<Scalar>& s0, Scalar t_end, const StepperConfig<Scalar>& cfg,
                                  const Model<Scalar>& model, const Operators<Scalar>& ops,
                                  const BoundaryConditionSpec<Scalar>& bc, const IntegrateOptions<Scalar>& opt) {
  Trajectory<Scalar> traj;
  State<Scalar> s = s0;
  auto min_m = [&](const State<Scalar>& st) {
    return static_cast<double>(parabolicity_factor(st.u, st.theta, model.coeffs).minCoeff());
  };
  {
    const Vector<Scalar> m = parabolicity_factor(s.u, s.theta, model.coeffs);
    try {
      check_parabolicity(m, cfg.m_min);
    } catch (ParabolicityLost& e) {
      e.time = static_cast<double>(s.t);
      throw;
    }
  }
  traj.samples.push_back(s);
  traj.sample_min_m.push_back(min_m(s));
  const Scalar span = t_end - s0.t;
  if (!(span > 0)) return traj;
  const long steps = std::max<long>(1, static_cast<long>(std::ceil(static_cast<double>(span / cfg.dt) - 1e-9)));
  const Scalar dt = span / Scalar(steps);

  bool warned_b = false;
  for (long k = 0; k < steps; ++k) {
    const bool be = cfg.scheme == TimeScheme::BackwardEuler || k < cfg.startup_backward_euler;
    advance(s, dt, 0, be, cfg, model, ops, bc, traj, opt);
    s.t = s0.t + Scalar(k + 1) * dt;  // avoid drift from repeated addition
    if (!warned_b && model.b0 > 0 && !model.coeffs.b.is_constant()) {
      if (model.coeffs.b.map(s.theta).minCoeff() < model.b0) {
        traj.warnings.push_back("b(theta) fell below b0 = " + std::to_string(static_cast<double>(model.b0)) +
                                " at t = " + std::to_string(static_cast<double>(s.t)));
        warned_b = true;
      }
    }
    if ((k + 1) % cfg.sample_every == 0 || k + 1 == steps) {
      traj.samples.push_back(s);
      traj.sample_min_m.push_back(min_m(s));
    }
  }
  return traj;
}

}  // namespace detail

/// Integrates the coupled system from s0 to t_end with uniform base steps
/// (the last step is not shortened: dt is adjusted so steps divide the span)
/// and up to cfg.max_halvings recursive halvings of any failing step.
///
/// The time-averaged source is realised in two passes: the first uses the
/// pointwise law C v^2 and accumulates int v^2 dt over the averaging
/// horizon; the second runs with the resulting frozen field.
template <typename Scalar>
Trajectory<Scalar> integrate(const State<Scalar>& s0, Scalar t_end, const StepperConfig<Scalar>& cfg,
                             const Model<Scalar>& model, const Operators<Scalar>& ops,
                             const BoundaryConditionSpec<Scalar>& bc, const IntegrateOptions<Scalar>& opt = {}) {
  cfg.validate();
  const auto compat = check_compatibility(s0, ops.grid(), bc, opt.exponents);
  std::vector<std::string> warnings;
  for (const auto& c : compat.conditions)
    if (c.required && !c.satisfied)
      warnings.push_back("compatibility condition " + c.name + " violated (mismatch " + std::to_string(c.mismatch) + ")");

  Trajectory<Scalar> traj;
  if (model.source.kind() == SourceModel<Scalar>::Kind::TimeAveragedQuadratic && !model.source.frozen()) {
    const Scalar horizon = std::min(model.source.averaging_horizon(), t_end - s0.t);
    Vector<Scalar> integral = Vector<Scalar>::Zero(s0.v.size());
    Vector<Scalar> prev_sq = s0.v.array().square().matrix();
    Scalar prev_t = s0.t;
    IntegrateOptions<Scalar> first = opt;
    first.on_step = [&](const State<Scalar>& st) {
      if (prev_t >= s0.t + horizon) return;
      const Vector<Scalar> sq = st.v.array().square().matrix();
      integral += (st.t - prev_t) * Scalar(0.5) * (sq + prev_sq);
      prev_sq = sq;
      prev_t = st.t;
    };
    detail::integrate_pass(s0, s0.t + horizon, cfg, model, ops, bc, first);
    Model<Scalar> frozen = model;
    const Scalar span = prev_t - s0.t;
    frozen.source.freeze(span > 0 ? Vector<Scalar>(model.source.amplitude() / span * integral)
                                  : Vector<Scalar>(model.source.amplitude() * prev_sq));
    traj = detail::integrate_pass(s0, t_end, cfg, frozen, ops, bc, opt);
  } else {
    traj = detail::integrate_pass(s0, t_end, cfg, model, ops, bc, opt);
  }
  warnings.insert(warnings.end(), traj.warnings.begin(), traj.warnings.end());
  traj.warnings = std::move(warnings);
  return traj;
}

}  // namespace wpsim
