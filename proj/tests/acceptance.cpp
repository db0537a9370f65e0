// Acceptance checks: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <cstdio>
#include <functional>
#include <sstream>
#include <string>

#include "oracles/mode_recurrence.hpp"
#include "wpsim/analysis.hpp"

using namespace wpsim;
using Vec = Vector<double>;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(int id, const std::string& name, const std::function<Outcome()>& check) {
  Outcome o;
  try {
    o = check();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  if (!o.pass) ++failures;
  std::printf("[%s] criterion %d: %s -- %s\n", o.pass ? "PASS" : "FAIL", id, name.c_str(), o.detail.c_str());
  std::fflush(stdout);
}

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

// 1. equilibria: residual < 1e-10 and drift < 1e-8 per unit time over [0, 10]
Outcome equilibrium() {
  const auto g = Grid<double>::line(0, M_PI, 33);
  Model<double> model;
  model.params.W = 0.5;
  model.params.theta_a = 1.5;
  model.coeffs.c = Coefficient<double>::affine(1.0, 0.1);
  model.coeffs.b = Coefficient<double>::constant(0.5);
  model.coeffs.k = Coefficient<double>::constant(0.5);
  model.source = SourceModel<double>::pointwise_quadratic(1.0);
  StepperConfig<double> cfg;
  cfg.dt = 0.05;
  double worst_res = 0, worst_drift = 0;
  for (int j : {0, 1}) {
    for (int ell : {0, 1}) {
      const auto eq = compute_equilibrium(g, j, ell, model, j == 1 ? std::optional<double>(0.2) : std::nullopt);
      worst_res = std::max({worst_res, eq.u_residual, eq.theta_residual});
      const auto bc = BoundaryConditionSpec<double>::ambient(j, ell, model.params.theta_a);
      const auto ops = Operators<double>::build(g, bc);
      const State<double> s{eq.u_star, Vec::Zero(33), eq.theta_star, 0};
      const auto traj = integrate(s, 10.0, cfg, model, ops, bc);
      for (const auto& st : traj.samples) {
        const double dev = discrete_norm(Vec(st.u - eq.u_star), g, NormKind::L2) +
                           discrete_norm(st.v, g, NormKind::L2) +
                           discrete_norm(Vec(st.theta - eq.theta_star), g, NormKind::L2);
        if (st.t > 0) worst_drift = std::max(worst_drift, dev / st.t);
      }
    }
  }
  return {worst_res < 1e-10 && worst_drift < 1e-8,
          fmt("max residual %.2e (< 1e-10), max drift rate %.2e (< 1e-8)", worst_res, worst_drift)};
}

// 2. linear problem against the per-mode discrete recurrences
Outcome linear_oracle() {
  const int n = 65;
  const auto g = Grid<double>::line(0, M_PI, n);
  Model<double> model;
  model.coeffs.c = Coefficient<double>::constant(1.0);
  model.coeffs.b = Coefficient<double>::constant(0.2);
  model.params.kappa_a = 0.05;
  model.params.W = 0.2;
  model.params.theta_a = 1.0;
  const auto bc = BoundaryConditionSpec<double>::ambient(0, 0, 1.0);
  const auto ops = Operators<double>::build(g, bc);
  const auto ev = eigen_decompose(ops.u, 5);
  const double dt = 0.01;
  const double cu[5] = {1.0, -0.5, 0.25, 0.3, -0.1}, cv[5] = {0.2, 0.4, -0.3, 0.0, 0.5}, ct[5] = {0.5, 0.2, -0.1, 0.05, 0.3};
  State<double> s{Vec::Zero(n), Vec::Zero(n), Vec::Ones(n), 0};
  for (int k = 0; k < 5; ++k) {
    s.u += cu[k] * ev[k].vector;
    s.v += cv[k] * ev[k].vector;
    s.theta += ct[k] * ev[k].vector;
  }
  StepperConfig<double> cfg;
  cfg.dt = dt;
  const auto traj = integrate(s, 1.0, cfg, model, ops, bc);
  const auto& end = traj.samples.back();

  Vec u = Vec::Zero(n), v = Vec::Zero(n), th = Vec::Ones(n);
  for (int k = 0; k < 5; ++k) {
    oracle::WaveMode mode{ev[k].value, 0.2, 1.0, 0.5, dt};
    double a = cu[k], b = cv[k], h = ct[k];
    const double f = oracle::heat_factor(0.05 * ev[k].value + 0.2, dt, 0.5);
    for (int step = 0; step < 100; ++step) {
      mode.step(a, b);
      h *= f;
    }
    u += a * ev[k].vector;
    v += b * ev[k].vector;
    th += h * ev[k].vector;
  }
  const double err = std::max({(end.u - u).norm() / u.norm(), (end.v - v).norm() / v.norm(),
                               (end.theta - th).norm() / (th.array() - 1.0).matrix().norm()});
  return {err < 1e-8 && traj.steps.size() == 100, fmt("max relative error %.2e over 100 steps (< 1e-8)", err)};
}

// 3. manufactured solution: order 2 +- 0.2 in h and dt, 1 +- 0.2 for backward Euler
Outcome mms() {
  MmsProblem p;
  p.model.params.W = 0.5;
  p.model.coeffs.c = Coefficient<double>::affine(1.0, 0.1);
  p.model.coeffs.b = Coefficient<double>::affine(0.5, 0.05);
  p.model.coeffs.k = Coefficient<double>::constant(0.2);
  p.model.source = SourceModel<double>::pointwise_quadratic(0.5);
  p.u_exact = Expression::parse("sin(x)*cos(t)");
  p.theta_exact = Expression::parse("1 + 0.1*sin(x)*exp(-t)");
  MmsLadder trap;
  MmsLadder be = trap;
  be.temporal_scheme = TimeScheme::BackwardEuler;
  be.dts = {0.02, 0.01, 0.005, 0.0025};
  be.nodes = {17, 33};
  const auto a = mms_convergence(p, trap);
  const auto b = mms_convergence(p, be);
  const bool levels = a.spatial.size() >= 4 && a.temporal.size() >= 4 && b.temporal.size() >= 4 &&
                      trap.nodes.back() <= 512;
  const bool ok = levels && std::abs(a.spatial_order - 2) <= 0.2 && std::abs(a.temporal_order - 2) <= 0.2 &&
                  std::abs(b.temporal_order - 1) <= 0.2;
  return {ok, fmt("spatial %.3f, temporal trapezoidal %.3f, temporal backward Euler %.3f", a.spatial_order,
                  a.temporal_order, b.temporal_order)};
}

// 4. decay rate against the spectral prediction, closer for smaller data
Outcome decay() {
  const int n = 65;
  const auto g = Grid<double>::line(0, M_PI, n);
  Model<double> model;
  model.coeffs.b = Coefficient<double>::constant(3.0);
  model.coeffs.c = Coefficient<double>::affine(1.0, 0.05);
  model.coeffs.k = Coefficient<double>::constant(1.0);
  model.params.rho_a = 0.5;
  model.params.kappa_a = 1.0;
  model.params.W = 1.0;
  model.params.theta_a = 1.0;
  model.source = SourceModel<double>::pointwise_quadratic(1.0);
  const auto bc = BoundaryConditionSpec<double>::ambient(0, 0, 1.0);
  const auto ops = Operators<double>::build(g, bc);
  const auto eq = compute_equilibrium(g, 0, 0, model);
  const auto sp = linearized_spectrum(eq, g, model, 8);
  const auto eu = eigen_decompose(ops.u, 8);
  StepperConfig<double> cfg;
  cfg.dt = 0.02;
  cfg.sample_every = 5;

  std::ostringstream os;
  bool ok = true;
  double prev_dev = 1e300;
  for (double amp : {1e-2, 1e-3}) {
    const Vec shape = g.sample([](double x, double) { return std::sin(x); });
    const State<double> s{Vec(amp * shape), Vec::Zero(n), eq.theta_star, 0};
    const auto wave = excited_modes(Vec(s.u - eq.u_star), eu, g);
    const double omega0 = sp.omega0_for(wave, {});
    const auto traj = integrate(s, 30.0, cfg, model, ops, bc);
    const auto fit = fit_decay(traj, eq, g);
    const double dev = std::abs(fit.omega - omega0);
    ok = ok && fit.r_squared > 0.99 && dev <= 0.15 * omega0 && dev < prev_dev;
    os << fmt("A=%.0e: omega %.6f vs omega0 %.6f, R^2 %.6f; ", amp, fit.omega, omega0, fit.r_squared);
    prev_dev = dev;
  }
  os << fmt("global omega0 %.4f", sp.omega0);
  return {ok, os.str()};
}

// 5. loss of parabolicity: uniform Neumann blow-up time and Dirichlet threshold sweep
Outcome parabolicity() {
  std::ostringstream os;
  bool ok = true;
  {
    const auto g = Grid<double>::line(0, 1, 9);
    Model<double> model;
    model.coeffs.k = Coefficient<double>::constant(1.0);
    const auto bc = BoundaryConditionSpec<double>::ambient(1, 1, 1.0);
    const auto ops = Operators<double>::build(g, bc);
    const State<double> s{Vec::Constant(9, 0.1), Vec::Constant(9, 0.4), Vec::Ones(9), 0};
    const double t_star = (1 - 2 * 0.1) / (4 * 0.4);  // m^2 is linear in t
    StepperConfig<double> cfg;
    cfg.dt = 0.005;
    try {
      integrate(s, 1.0, cfg, model, ops, bc);
      ok = false;
      os << "uniform Neumann run did not fail; ";
    } catch (const ParabolicityLost& e) {
      ok = ok && e.time > 0.97 * t_star && e.time <= t_star;
      os << fmt("uniform Neumann: ParabolicityLost at t=%.4f (t*=%.4f); ", e.time, t_star);
    }
  }
  {
    const auto g = Grid<double>::line(0, M_PI, 33);
    Model<double> model;
    model.coeffs.k = Coefficient<double>::constant(1.0);
    model.coeffs.b = Coefficient<double>::constant(0.1);
    const auto bc = BoundaryConditionSpec<double>::ambient(0, 0, 1.0);
    DataShape data = [&g](double a) {
      return State<double>{Vec::Zero(33), g.sample([a](double x, double) { return a * std::sin(x); }), Vec::Ones(33), 0};
    };
    StepperConfig<double> cfg;
    cfg.dt = 0.01;
    const auto reps = smallness_sweep(data, {1.0, 2.0, 4.0}, g, bc, model, cfg, SweepOptions{0.01, 2.0, 0.01, 60});
    double prev = 1e300;
    for (const auto& r : reps) {
      const double width = (r.bracket_hi - r.bracket_lo) / r.bracket_hi;
      ok = ok && r.threshold_found && width < 0.01 && r.delta_hat <= prev && r.failure_mode_above == "ParabolicityLost";
      os << fmt("T=%.0f: delta %.4f (width %.2f%%); ", r.t_end, r.delta_hat, 100 * width);
      prev = r.delta_hat;
    }
  }
  return {ok, os.str()};
}

// 6. parabolic smoothing: bounded third differences at tau, growing at 0+
Outcome smoothing() {
  const int n = 513;
  const auto g = Grid<double>::line(0, M_PI, n);
  Model<double> model;
  model.coeffs.k = Coefficient<double>::constant(0.5);
  const auto bc = BoundaryConditionSpec<double>::ambient(0, 0, 1.0);
  const State<double> s{Vec::Zero(n), g.sample([](double x, double) { return 0.1 * std::max(0.0, 1 - std::abs(x - 1.5) / 0.5); }),
                        Vec::Ones(n), 0};
  StepperConfig<double> cfg;
  cfg.scheme = TimeScheme::BackwardEuler;
  const auto r = smoothing_probe(s, g, bc, model, cfg, SmoothingOptions{});
  return {r.exponent_d3_tau < 0.2 && r.exponent_d3_start > 0.5,
          fmt("d3 exponent at tau %.3f (< 0.2), at 0+ %.3f (> 0.5); d2 at tau %.3f, at 0+ %.3f", r.exponent_d3_tau,
              r.exponent_d3_start, r.exponent_d2_tau, r.exponent_d2_start)};
}

// 7. discrete energy of the linear problem is nonincreasing under backward Euler
Outcome energy() {
  const auto g = Grid<double>::box(0, 1, 21, 0, 1, 21);
  const auto op = build_laplacian(g, BoundaryKind::Dirichlet);
  const double a2 = 2.0;
  const auto fro = FrozenCoefficients<double>::constant(g.size(), 0.1, a2);
  Vec u = g.sample([](double x, double y) { return std::sin(M_PI * x) * std::sin(M_PI * y) + 0.5 * x * (1 - x) * y * (1 - y) * (x - 0.3); });
  Vec v = g.sample([](double x, double y) { return std::sin(2 * M_PI * x) * std::sin(3 * M_PI * y); });
  const Vec zero = Vec::Zero(u.size());
  double e = wave_energy(u, v, g, a2), worst = -1e300;
  const double e0 = e;
  for (int k = 0; k < 1000; ++k) {
    std::tie(u, v) = linwest_step(u, v, 0.01, fro, op, zero, TimeScheme::BackwardEuler);
    const double next = wave_energy(u, v, g, a2);
    worst = std::max(worst, next - e);
    e = next;
  }
  return {worst <= 1e-12, fmt("max per-step increase %.2e (<= 1e-12), energy %.3e -> %.3e", worst, e0, e)};
}

// 8. compatibility flags for p = q = r = s = 2
Outcome compatibility() {
  const auto g = Grid<double>::line(0, M_PI, 33);
  const Exponents ex{2, 2, 2, 2};
  std::ostringstream os;
  bool ok = true;
  for (int j : {0, 1}) {
    for (int ell : {0, 1}) {
      const auto bc = BoundaryConditionSpec<double>::ambient(j, ell, 1.0);
      // u1 violates homogeneous data for either closure
      const State<double> s{Vec::Zero(33), g.sample([](double x, double) { return 1 + x; }), Vec::Ones(33), 0};
      const auto rep = check_compatibility(s, g, bc, ex);
      const bool u1_required = j == 0, th_required = ell == 0;
      ok = ok && rep.conditions[0].status() == "passed" && rep.conditions[1].required == u1_required &&
           rep.conditions[2].required == th_required &&
           rep.conditions[1].status() == (u1_required ? "failed" : "not-required") &&
           rep.conditions[2].status() == (th_required ? "passed" : "not-required");
      os << "j=" << j << ",ell=" << ell << ": " << rep.conditions[0].status() << "/" << rep.conditions[1].status()
         << "/" << rep.conditions[2].status() << "; ";
    }
  }
  return {ok, os.str()};
}

}  // namespace

int main() {
  report(1, "equilibria are steady", equilibrium);
  report(2, "linear problem matches the modal recurrences", linear_oracle);
  report(3, "manufactured-solution convergence orders", mms);
  report(4, "decay rate matches the spectral bound", decay);
  report(5, "parabolicity loss and smallness threshold", parabolicity);
  report(6, "parabolic smoothing of rough data", smoothing);
  report(7, "energy dissipation of the linear scheme", energy);
  report(8, "compatibility conditions", compatibility);
  std::printf("%d of 8 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
