#include "wpsim/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <sstream>

namespace wpsim {

namespace {

double l2(const Field& f, const Grid<double>& g) { return discrete_norm(f, g, NormKind::L2); }

Eigen::SparseMatrix<double> to_col_major(const SparseMatrix<double>& a) { return Eigen::SparseMatrix<double>(a); }

}  // namespace

EquilibriumResult compute_equilibrium(const Grid<double>& grid, int j, int ell, const Model<double>& model,
                                      std::optional<double> r) {
  const auto& p = model.params;
  EquilibriumResult eq;
  eq.j = j;
  eq.ell = ell;
  const auto n = static_cast<Eigen::Index>(grid.size());
  const double level = j == 1 ? r.value_or(0.0) : 0.0;
  if (j == 1) eq.r = level;
  eq.u_star = Field::Constant(n, level);

  const double beta = p.perfusion();
  if (ell == 1 && beta == 0)
    throw SingularSteadyProblem("steady heat operator is singular: W = 0 with a Neumann temperature closure");

  const auto op = build_laplacian(grid, boundary_kind(ell), FieldRole::Temperature);
  const std::size_t entries = grid.boundary_entries().size();
  const Field data = ell == 0 ? Field::Constant(static_cast<Eigen::Index>(entries), p.theta_a)
                              : Field::Zero(static_cast<Eigen::Index>(entries));
  const double q0 = model.source.at_zero();

  // (kappa L - beta I) theta = -beta theta_a - Q(0) - kappa * correction
  Eigen::SparseMatrix<double> a = to_col_major(op.matrix()) * p.kappa_a;
  for (Eigen::Index i = 0; i < a.rows(); ++i) a.coeffRef(i, i) -= beta;
  const Field rhs = Field::Constant(a.rows(), -beta * p.theta_a - q0) - p.kappa_a * op.correction(data);
  eq.theta_star = Field::Zero(n);
  if (ell == 0) op.impose_dirichlet(data, eq.theta_star);
  op.scatter(sparse_solve(a, rhs, 1e-12), eq.theta_star);

  const Field c = model.coeffs.c.map(eq.theta_star);
  if (!(c.array().square().minCoeff() > 0)) throw std::invalid_argument("c(theta*)^2 must be positive at the equilibrium");

  // Residuals through the model's own rate operators.
  const auto u_op = build_laplacian(grid, boundary_kind(j), FieldRole::Pressure);
  const Field zero = Field::Zero(n);
  Model<double> steady = model;
  steady.forcing = nullptr;
  const Field lap_u = u_op.apply(eq.u_star);
  const Field acc = westervelt_accel(eq.u_star, zero, eq.theta_star, lap_u, zero, model.coeffs,
                                     std::numeric_limits<double>::lowest());
  const Field heat = pennes_rate(eq.theta_star, zero, op.apply(eq.theta_star, ell == 1 ? data : Field()), p,
                                 model.source) * p.capacity();
  eq.u_residual = l2(acc.cwiseProduct(parabolicity_factor(eq.u_star, eq.theta_star, model.coeffs)), grid);
  Field heat_free = Field::Zero(n);
  op.scatter(op.gather(heat), heat_free);
  eq.theta_residual = l2(heat_free, grid);
  return eq;
}

std::vector<std::complex<double>> SpectrumResult::rates() const {
  std::vector<std::complex<double>> out;
  for (const auto& m : modes) {
    out.push_back(m.wave_plus);
    out.push_back(m.wave_minus);
  }
  for (const auto& m : modes) out.emplace_back(m.heat, 0.0);
  return out;
}

double SpectrumResult::omega0_for(const std::vector<int>& wave_modes, const std::vector<int>& heat_modes) const {
  double top = -std::numeric_limits<double>::infinity();
  for (int k : wave_modes) {
    const auto& m = modes.at(static_cast<std::size_t>(k));
    top = std::max({top, m.wave_plus.real(), m.wave_minus.real()});
  }
  for (int k : heat_modes) top = std::max(top, modes.at(static_cast<std::size_t>(k)).heat);
  return -top;
}

SpectrumResult linearized_spectrum(const EquilibriumResult& eq, const Grid<double>& grid, const Model<double>& model,
                                   int modes) {
  const auto& p = model.params;
  const auto& co = model.coeffs;
  const auto u_op = build_laplacian(grid, boundary_kind(eq.j), FieldRole::Pressure);
  const auto t_op = build_laplacian(grid, boundary_kind(eq.ell), FieldRole::Temperature);
  const auto eu = eigen_decompose(u_op, modes);
  const auto et = eigen_decompose(t_op, modes);

  SpectrumResult out;
  const double ta = p.theta_a;
  out.parabolicity = 1.0 - 2.0 * co.k(ta) * eq.r.value_or(0.0);
  out.q_prime0 = model.source.derivative(0.0);
  const double b = co.b(ta), c2 = co.c(ta) * co.c(ta), m = out.parabolicity;
  const std::size_t count = std::min(eu.size(), et.size());
  double top = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < count; ++k) {
    ModeRates r;
    r.mode = static_cast<int>(k);
    r.lambda_u = eu[k].value;
    r.lambda_theta = et[k].value;
    const double lam = r.lambda_u;
    const std::complex<double> disc = std::sqrt(std::complex<double>(b * b * lam * lam - 4.0 * m * c2 * lam, 0.0));
    r.wave_plus = (-b * lam + disc) / (2.0 * m);
    r.wave_minus = (-b * lam - disc) / (2.0 * m);
    r.heat = -(p.kappa_a * r.lambda_theta + p.perfusion()) / p.capacity();
    top = std::max({top, r.wave_plus.real(), r.wave_minus.real(), r.heat});
    out.modes.push_back(r);
  }
  out.omega0 = -top;
  return out;
}

std::vector<int> excited_modes(const Field& f, const std::vector<EigenPair<double>>& basis, const Grid<double>& grid,
                               double rel_tol) {
  const Field w = grid.weights();
  std::vector<double> coef;
  double top = 0;
  for (const auto& e : basis) {
    coef.push_back(std::abs((w.array() * f.array() * e.vector.array()).sum()));
    top = std::max(top, coef.back());
  }
  std::vector<int> out;
  if (top == 0) return out;
  for (std::size_t k = 0; k < coef.size(); ++k)
    if (coef[k] > rel_tol * top) out.push_back(static_cast<int>(k));
  return out;
}

DecayFit fit_decay(const std::vector<double>& t, const std::vector<double>& y, double skip_fraction) {
  if (t.size() != y.size()) throw std::invalid_argument("fit_decay: time and signal lengths differ");
  if (!(skip_fraction >= 0 && skip_fraction < 1)) throw std::invalid_argument("fit_decay: skip fraction must be in [0, 1)");
  DecayFit fit;
  fit.times = t;
  fit.signal = y;
  const auto first = static_cast<std::size_t>(std::floor(skip_fraction * static_cast<double>(t.size())));
  std::vector<double> xs, ys;
  for (std::size_t i = first; i < t.size(); ++i)
    if (y[i] > 0 && std::isfinite(y[i])) {
      xs.push_back(t[i]);
      ys.push_back(std::log(y[i]));
    }
  if (xs.size() < 10)
    throw std::invalid_argument("fit_decay: need at least 10 positive samples after the transient window, got " +
                                std::to_string(xs.size()));
  const double nn = static_cast<double>(xs.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= nn;
  my /= nn;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  if (sxx == 0) throw std::invalid_argument("fit_decay: window has zero time extent");
  const double slope = sxy / sxx;
  const double intercept = my - slope * mx;
  double ss_res = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double e = ys[i] - (intercept + slope * xs[i]);
    ss_res += e * e;
  }
  fit.r_squared = syy > 0 ? 1.0 - ss_res / syy : 1.0;
  fit.omega = -slope;
  fit.C = std::exp(intercept);
  fit.window_start = xs.front();
  fit.window_end = xs.back();
  fit.samples_used = xs.size();
  if (slope >= 0 && fit.r_squared > 0.9) throw NonDecayingSignal(slope, fit.r_squared);
  return fit;
}

std::vector<double> decay_signal(const Trajectory<double>& traj, const EquilibriumResult& eq, const Grid<double>& grid,
                                 const DecayNorms& norms) {
  auto nrm = [&](const Field& f) { return norms.include_h2 ? w2_surrogate(f, grid) : l2(f, grid); };
  std::vector<double> out;
  out.reserve(traj.samples.size());
  for (const auto& s : traj.samples)
    out.push_back(nrm(s.u - eq.u_star) + nrm(s.v) + nrm(s.theta - eq.theta_star));
  return out;
}

DecayFit fit_decay(const Trajectory<double>& traj, const EquilibriumResult& eq, const Grid<double>& grid,
                   const DecayNorms& norms, double skip_fraction) {
  std::vector<double> t;
  t.reserve(traj.samples.size());
  for (const auto& s : traj.samples) t.push_back(s.t);
  return fit_decay(t, decay_signal(traj, eq, grid, norms), skip_fraction);
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("loglog_slope needs >= 2 matching points");
  double mx = 0, my = 0;
  const double n = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = std::log(x[i]) - mx;
    sxx += dx * dx;
    sxy += dx * (std::log(y[i]) - my);
  }
  return sxy / sxx;
}

SmoothingReport smoothing_probe(const State<double>& s0, const Grid<double>& grid,
                                const BoundaryConditionSpec<double>& bc, const Model<double>& model,
                                const StepperConfig<double>& cfg, const SmoothingOptions& opt) {
  if (opt.dts.size() < 2) throw std::invalid_argument("smoothing_probe needs at least two step sizes");
  if (!(opt.tau > 0)) throw std::invalid_argument("smoothing_probe: tau must be > 0");
  auto run = [&](double dt) {
    const long k = std::lround(opt.tau / dt);
    if (k < 2) throw std::invalid_argument("smoothing_probe: tau must span at least two steps");
    StepperConfig<double> c = cfg;
    c.dt = dt;
    c.dt_min = std::min(cfg.dt_min, dt);
    c.sample_every = 1;
    const Operators<double> ops = Operators<double>::build(grid, bc);
    const auto traj = integrate(s0, s0.t + static_cast<double>(k + 2) * dt, c, model, ops, bc);
    auto f = [&](long i) -> const Field& {
      const auto& s = traj.samples.at(static_cast<std::size_t>(i));
      return opt.field == ProbeField::Pressure ? s.u : s.theta;
    };
    auto nrm = [&](const Field& x) { return discrete_norm(x, grid, opt.norm); };
    SmoothingLevel lv;
    lv.dt = dt;
    lv.d2_start = nrm(f(0) - 2 * f(1) + f(2)) / (dt * dt);
    lv.d3_start = nrm(-f(0) + 3 * f(1) - 3 * f(2) + f(3)) / (dt * dt * dt);
    lv.d2_tau = nrm(f(k - 1) - 2 * f(k) + f(k + 1)) / (dt * dt);
    lv.d3_tau = nrm(-f(k - 2) + 2 * f(k - 1) - 2 * f(k + 1) + f(k + 2)) / (2 * dt * dt * dt);
    return lv;
  };
  std::vector<std::future<SmoothingLevel>> jobs;
  for (double dt : opt.dts) jobs.push_back(std::async(std::launch::async, run, dt));
  SmoothingReport rep;
  for (auto& j : jobs) rep.levels.push_back(j.get());

  std::vector<double> inv, a, b, c, d;
  for (const auto& lv : rep.levels) {
    inv.push_back(1.0 / lv.dt);
    a.push_back(lv.d2_start);
    b.push_back(lv.d3_start);
    c.push_back(lv.d2_tau);
    d.push_back(lv.d3_tau);
  }
  rep.exponent_d2_start = loglog_slope(inv, a);
  rep.exponent_d3_start = loglog_slope(inv, b);
  rep.exponent_d2_tau = loglog_slope(inv, c);
  rep.exponent_d3_tau = loglog_slope(inv, d);
  rep.smoothing_confirmed = rep.exponent_d3_tau < 0.2 && rep.exponent_d3_start > 0.5;
  return rep;
}

namespace {

SweepEvaluation evaluate_amplitude(double amp, const DataShape& data, double t_end, const Operators<double>& ops,
                                   const BoundaryConditionSpec<double>& bc, const Model<double>& model,
                                   const StepperConfig<double>& cfg) {
  SweepEvaluation ev;
  ev.amplitude = amp;
  try {
    const State<double> s0 = data(amp);
    integrate(s0, t_end, cfg, model, ops, bc);
    ev.success = true;
  } catch (const NumericalFailure& e) {
    ev.failure = e.kind();
    ev.failure_time = e.time;
  }
  return ev;
}

}  // namespace

SweepReport smallness_sweep(const DataShape& data, double t_end, const Grid<double>& grid,
                            const BoundaryConditionSpec<double>& bc, const Model<double>& model,
                            const StepperConfig<double>& cfg, const SweepOptions& opt) {
  if (!(opt.a_lo > 0 && opt.a_hi > opt.a_lo)) throw std::invalid_argument("sweep needs 0 < a_lo < a_hi");
  if (!(opt.rel_tol > 0)) throw std::invalid_argument("sweep rel_tol must be > 0");
  const Operators<double> ops = Operators<double>::build(grid, bc);
  SweepReport rep;
  rep.t_end = t_end;
  auto eval = [&](double a) {
    rep.history.push_back(evaluate_amplitude(a, data, t_end, ops, bc, model, cfg));
    return rep.history.back();
  };

  const auto lo_ev = eval(opt.a_lo);
  if (!lo_ev.success) {
    throw BracketInvalid("lower amplitude " + std::to_string(opt.a_lo) + " already fails (" + lo_ev.failure + ")");
  }
  auto hi_ev = eval(opt.a_hi);
  double lo = opt.a_lo, hi = opt.a_hi;
  if (hi_ev.success) {
    rep.threshold_found = false;
    rep.delta_hat = hi;
    rep.bracket_lo = rep.bracket_hi = hi;
  } else {
    std::string mode_hi = hi_ev.failure;
    for (int it = 0; it < opt.max_bisections && (hi - lo) / hi >= opt.rel_tol; ++it) {
      const double mid = hi > 2 * lo ? std::sqrt(lo * hi) : 0.5 * (lo + hi);
      const auto ev = eval(mid);
      if (ev.success) {
        lo = mid;
      } else {
        hi = mid;
        mode_hi = ev.failure;
      }
    }
    rep.threshold_found = true;
    rep.delta_hat = lo;
    rep.bracket_lo = lo;
    rep.bracket_hi = hi;
    rep.failure_mode_above = mode_hi;
  }

  auto sorted = rep.history;
  std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) { return a.amplitude < b.amplitude; });
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    if (sorted[i].success) continue;
    for (std::size_t k = i + 1; k < sorted.size(); ++k) {
      if (!sorted[k].success) continue;
      std::ostringstream os;
      os << "amplitude " << sorted[i].amplitude << " fails but " << sorted[k].amplitude << " succeeds";
      rep.monotonicity_violations.push_back(os.str());
    }
  }
  rep.monotone = rep.monotonicity_violations.empty();
  return rep;
}

std::vector<SweepReport> smallness_sweep(const DataShape& data, const std::vector<double>& t_ends,
                                         const Grid<double>& grid, const BoundaryConditionSpec<double>& bc,
                                         const Model<double>& model, const StepperConfig<double>& cfg,
                                         const SweepOptions& opt) {
  std::vector<std::future<SweepReport>> jobs;
  for (double t : t_ends)
    jobs.push_back(std::async(std::launch::async, [&, t] { return smallness_sweep(data, t, grid, bc, model, cfg, opt); }));
  std::vector<SweepReport> out;
  for (auto& j : jobs) out.push_back(j.get());
  return out;
}

// ------------------------------------------------------------------------ MMS

namespace {

struct ExactDerivatives {
  Expression u, ut, utt, lap_u, lap_ut, th, tht, lap_th;

  explicit ExactDerivatives(const MmsProblem& p) {
    u = p.u_exact;
    ut = u.derivative('t');
    utt = ut.derivative('t');
    lap_u = u.derivative('x').derivative('x') + u.derivative('y').derivative('y');
    lap_ut = ut.derivative('x').derivative('x') + ut.derivative('y').derivative('y');
    th = p.theta_exact;
    tht = th.derivative('t');
    lap_th = th.derivative('x').derivative('x') + th.derivative('y').derivative('y');
  }
};

Field sample(const Expression& e, const Grid<double>& g, double t) {
  return g.sample([&](double x, double y) { return e(t, x, y); });
}

BoundaryData<double> expression_data(const Expression& f, int kind) {
  if (kind == 0) {
    const Expression ft = f.derivative('t');
    return {[f](double t, double x, double y, Face) { return f(t, x, y); },
            [ft](double t, double x, double y, Face) { return ft(t, x, y); }};
  }
  const Expression fx = f.derivative('x'), fy = f.derivative('y');
  const Expression fxt = fx.derivative('t'), fyt = fy.derivative('t');
  auto normal = [](const Expression& dx, const Expression& dy) {
    return [dx, dy](double t, double x, double y, Face face) {
      switch (face) {
        case Face::XLo: return -dx(t, x, y);
        case Face::XHi: return dx(t, x, y);
        case Face::YLo: return -dy(t, x, y);
        case Face::YHi: return dy(t, x, y);
      }
      return 0.0;
    };
  };
  return {normal(fx, fy), normal(fxt, fyt)};
}

}  // namespace

BoundaryConditionSpec<double> manufactured_boundary(const MmsProblem& p) {
  BoundaryConditionSpec<double> bc;
  bc.j = p.j;
  bc.ell = p.ell;
  bc.g = expression_data(p.u_exact, p.j);
  bc.h = expression_data(p.theta_exact, p.ell);
  return bc;
}

State<double> manufactured_state(const MmsProblem& p, const Grid<double>& grid, double t) {
  const ExactDerivatives d(p);
  return {sample(d.u, grid, t), sample(d.ut, grid, t), sample(d.th, grid, t), t};
}

Forcing<double> manufactured_forcing(const MmsProblem& p, const Grid<double>& grid, const Operators<double>* ops) {
  if (p.model.source.kind() == SourceModel<double>::Kind::TimeAveragedQuadratic)
    throw std::invalid_argument("manufactured forcing needs a pointwise source law");
  const ExactDerivatives d(p);
  const Model<double> model = p.model;
  const BoundaryConditionSpec<double> bc = manufactured_boundary(p);
  return [d, model, bc, &grid, ops](double t, Field& fu, Field& ft) {
    const Field u = sample(d.u, grid, t), ut = sample(d.ut, grid, t), utt = sample(d.utt, grid, t);
    const Field th = sample(d.th, grid, t), tht = sample(d.tht, grid, t);
    Field lap_u, lap_ut, lap_th;
    if (ops) {
      const auto bs = BoundarySample<double>::at(bc, grid, t);
      lap_u = detail::apply_with_data(ops->u, u, bs.u);
      lap_ut = detail::apply_with_data(ops->u, ut, bs.v);
      lap_th = detail::apply_with_data(ops->theta, th, bs.theta);
    } else {
      lap_u = sample(d.lap_u, grid, t);
      lap_ut = sample(d.lap_ut, grid, t);
      lap_th = sample(d.lap_th, grid, t);
    }
    const auto& co = model.coeffs;
    const auto& pp = model.params;
    const Field m = parabolicity_factor(u, th, co);
    const Field c = co.c.map(th), b = co.b.map(th), k = co.k.map(th);
    fu = (m.array() * utt.array() - c.array().square() * lap_u.array() - b.array() * lap_ut.array() -
          2.0 * k.array() * ut.array().square())
             .matrix();
    ft = (pp.capacity() * tht.array() - pp.kappa_a * lap_th.array() + pp.perfusion() * (th.array() - pp.theta_a))
             .matrix() -
         model.source.evaluate(ut);
  };
}

namespace {

MmsLevel run_mms_level(const MmsProblem& p, int nodes, double dt, TimeScheme scheme, bool semi_discrete) {
  const Grid<double> grid = Grid<double>::line(p.lower, p.upper, nodes);
  const BoundaryConditionSpec<double> bc = manufactured_boundary(p);
  const Operators<double> ops = Operators<double>::build(grid, bc);
  Model<double> model = p.model;
  model.forcing = manufactured_forcing(p, grid, semi_discrete ? &ops : nullptr);
  StepperConfig<double> cfg = p.stepper;
  cfg.dt = dt;
  cfg.dt_min = std::min(cfg.dt_min, dt);
  cfg.scheme = scheme;
  cfg.sample_every = 1 << 30;
  const State<double> s0 = manufactured_state(p, grid, 0.0);
  const auto traj = integrate(s0, p.t_end, cfg, model, ops, bc);
  const State<double> exact = manufactured_state(p, grid, p.t_end);
  const auto& s = traj.samples.back();
  MmsLevel lv;
  lv.nodes = nodes;
  lv.h = grid.spacing(0);
  lv.dt = dt;
  lv.err_u = l2(s.u - exact.u, grid);
  lv.err_theta = l2(s.theta - exact.theta, grid);
  return lv;
}

}  // namespace

MmsReport mms_convergence(const MmsProblem& p, const MmsLadder& ladder) {
  if (ladder.nodes.size() < 2 || ladder.dts.size() < 2) throw std::invalid_argument("MMS ladders need >= 2 levels");
  std::vector<std::future<MmsLevel>> space, time;
  for (int n : ladder.nodes)
    space.push_back(std::async(std::launch::async, run_mms_level, std::cref(p), n, ladder.spatial_dt,
                               TimeScheme::Trapezoidal, false));
  for (double dt : ladder.dts)
    time.push_back(std::async(std::launch::async, run_mms_level, std::cref(p), ladder.temporal_nodes, dt,
                              ladder.temporal_scheme, ladder.semi_discrete_temporal));
  MmsReport rep;
  for (auto& f : space) rep.spatial.push_back(f.get());
  for (auto& f : time) rep.temporal.push_back(f.get());

  auto orders = [](const std::vector<MmsLevel>& lv, bool spatial, double& total, double& ou, double& ot) {
    std::vector<double> x, e, eu, et;
    for (const auto& l : lv) {
      x.push_back(spatial ? l.h : l.dt);
      e.push_back(l.err());
      eu.push_back(l.err_u);
      et.push_back(l.err_theta);
    }
    total = loglog_slope(x, e);
    ou = loglog_slope(x, eu);
    ot = loglog_slope(x, et);
  };
  orders(rep.spatial, true, rep.spatial_order, rep.spatial_order_u, rep.spatial_order_theta);
  orders(rep.temporal, false, rep.temporal_order, rep.temporal_order_u, rep.temporal_order_theta);
  return rep;
}

}  // namespace wpsim
