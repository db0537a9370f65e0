#include "wpsim/run.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <random>

namespace wpsim {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

json field_json(const Field& f) { return std::vector<double>(f.data(), f.data() + f.size()); }

json complex_json(std::complex<double> z) { return {{"re", z.real()}, {"im", z.imag()}}; }

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

void write_series(const fs::path& dir, const Trajectory<double>& traj, const Grid<double>& grid,
                  const Field& theta_ref, bool fields) {
  std::ostringstream os;
  os << std::setprecision(17);
  os << "time,u_l2,v_l2,theta_dev_l2,u_linf,theta_dev_linf,min_m\n";
  for (std::size_t i = 0; i < traj.samples.size(); ++i) {
    const auto& s = traj.samples[i];
    const Field dev = s.theta - theta_ref;
    os << s.t << ',' << discrete_norm(s.u, grid, NormKind::L2) << ',' << discrete_norm(s.v, grid, NormKind::L2) << ','
       << discrete_norm(dev, grid, NormKind::L2) << ',' << discrete_norm(s.u, grid, NormKind::Linf) << ','
       << discrete_norm(dev, grid, NormKind::Linf) << ',' << traj.sample_min_m[i] << '\n';
  }
  write_text(dir / "series.csv", os.str());
  if (!fields) return;
  std::ostringstream fo;
  fo << std::setprecision(17) << "time,node,x,y,u,v,theta\n";
  for (const auto& s : traj.samples)
    for (std::size_t n = 0; n < grid.size(); ++n)
      fo << s.t << ',' << n << ',' << grid.x(n) << ',' << grid.y(n) << ',' << s.u[n] << ',' << s.v[n] << ','
         << s.theta[n] << '\n';
  write_text(dir / "fields.csv", fo.str());
}

json trajectory_summary(const Trajectory<double>& traj, const Grid<double>& grid, const Field& theta_ref) {
  const auto& s = traj.samples.back();
  int max_newton = 0;
  double sum_newton = 0, min_m = 1e300;
  int halvings = 0;
  for (const auto& st : traj.steps) {
    max_newton = std::max(max_newton, st.newton_iterations);
    sum_newton += st.newton_iterations;
    min_m = std::min(min_m, st.min_m);
    halvings = std::max(halvings, st.halving_level);
  }
  return {{"t_final", s.t},
          {"samples", traj.samples.size()},
          {"steps", traj.steps.size()},
          {"newton_iterations_mean", traj.steps.empty() ? 0.0 : sum_newton / static_cast<double>(traj.steps.size())},
          {"newton_iterations_max", max_newton},
          {"max_halving_level", halvings},
          {"min_parabolicity_factor", traj.steps.empty() ? traj.sample_min_m.front() : min_m},
          {"final",
           {{"u_l2", discrete_norm(s.u, grid, NormKind::L2)},
            {"v_l2", discrete_norm(s.v, grid, NormKind::L2)},
            {"theta_dev_l2", discrete_norm(Field(s.theta - theta_ref), grid, NormKind::L2)},
            {"u_linf", discrete_norm(s.u, grid, NormKind::Linf)}}},
          {"warnings", traj.warnings}};
}

json compatibility_json(const CompatibilityReport& rep, const Exponents& ex) {
  json conds = json::array();
  for (const auto& c : rep.conditions)
    conds.push_back({{"name", c.name}, {"required", c.required}, {"mismatch", c.mismatch}, {"status", c.status()}});
  return {{"exponents", {{"p", ex.p}, {"q", ex.q}, {"r", ex.r}, {"s", ex.s}}}, {"conditions", conds}, {"ok", rep.ok()}};
}

json equilibrium_json(const EquilibriumResult& eq) {
  json j = {{"j", eq.j},
            {"ell", eq.ell},
            {"u_star", field_json(eq.u_star)},
            {"theta_star", field_json(eq.theta_star)},
            {"u_residual", eq.u_residual},
            {"theta_residual", eq.theta_residual}};
  if (eq.r) j["r"] = *eq.r;
  return j;
}

json spectrum_json(const SpectrumResult& sp) {
  json modes = json::array();
  for (const auto& m : sp.modes)
    modes.push_back({{"mode", m.mode},
                     {"lambda_u", m.lambda_u},
                     {"lambda_theta", m.lambda_theta},
                     {"wave_plus", complex_json(m.wave_plus)},
                     {"wave_minus", complex_json(m.wave_minus)},
                     {"heat", m.heat}});
  return {{"modes", modes},
          {"parabolicity_factor", sp.parabolicity},
          {"q_prime0", sp.q_prime0},
          {"block_triangular", true},
          {"omega0", sp.omega0}};
}

Model<double> model_of(const RunConfig& cfg) {
  Model<double> m = cfg.model;
  m.m_min = cfg.stepper.m_min;
  return m;
}

/// Unit-norm combination of the first `count` eigenvectors with seeded
/// Gaussian weights decaying like 1/k.
Field random_combination(const DiscreteOperator<double>& op, int count, std::mt19937_64& rng, const Grid<double>& grid) {
  const auto basis = eigen_decompose(op, count);
  std::normal_distribution<double> normal(0.0, 1.0);
  Field f = Field::Zero(static_cast<Eigen::Index>(grid.size()));
  for (std::size_t k = 0; k < basis.size(); ++k) f += normal(rng) / static_cast<double>(k + 1) * basis[k].vector;
  const double n = discrete_norm(f, grid, NormKind::L2);
  return n > 0 ? Field(f / n) : f;
}

}  // namespace

State<double> initial_state(const RunConfig& cfg, const Grid<double>& grid, const Operators<double>& ops,
                            double amplitude, const EquilibriumResult* around) {
  const auto& in = cfg.initial;
  const double ta = cfg.model.params.theta_a;
  const auto n = static_cast<Eigen::Index>(grid.size());
  State<double> s;
  s.t = 0;
  Field du = Field::Zero(n), dv = Field::Zero(n), dth = Field::Zero(n);
  if (in.type == "expressions") {
    du = grid.sample([&](double x, double y) { return in.u0(0, x, y); });
    dv = grid.sample([&](double x, double y) { return in.u1(0, x, y); });
    dth = grid.sample([&](double x, double y) { return (*in.theta0)(0, x, y) - ta; });
  } else if (in.type == "eigenfunction") {
    const auto eu = eigen_decompose(ops.u, in.mode);
    const auto et = eigen_decompose(ops.theta, in.mode);
    if (static_cast<int>(eu.size()) < in.mode || static_cast<int>(et.size()) < in.mode)
      throw ConfigError("initial.mode", "exceeds the number of discrete modes");
    du = in.u0_coef * eu.back().vector;
    dv = in.u1_coef * eu.back().vector;
    dth = in.theta_coef * et.back().vector;
  } else {
    std::mt19937_64 rng(cfg.seed);
    du = in.u0_coef * random_combination(ops.u, in.modes, rng, grid);
    dv = in.u1_coef * random_combination(ops.u, in.modes, rng, grid);
    dth = in.theta_coef * random_combination(ops.theta, in.modes, rng, grid);
  }
  const double a = amplitude * in.amplitude;
  s.u = a * du;
  s.v = a * dv;
  s.theta = Field::Constant(n, ta) + a * dth;
  if (around) {
    s.u += around->u_star;
    s.theta += around->theta_star - Field::Constant(n, ta);
  }
  return s;
}

json run_experiment(const RunConfig& cfg, const std::string& out_dir, bool fields) {
  const Grid<double> grid = cfg.grid.build();
  const BoundaryConditionSpec<double> bc = cfg.boundary();
  const Operators<double> ops = Operators<double>::build(grid, bc);
  const Model<double> model = model_of(cfg);
  const auto& ep = cfg.params;
  const Field ambient = Field::Constant(static_cast<Eigen::Index>(grid.size()), cfg.model.params.theta_a);
  IntegrateOptions<double> iopt;
  iopt.exponents = cfg.exponents;
  json rep = {{"experiment", cfg.experiment}, {"config_warnings", cfg.warnings}};

  if (cfg.experiment == "simulate") {
    const auto s0 = initial_state(cfg, grid, ops, 1.0);
    rep["compatibility"] = compatibility_json(check_compatibility(s0, grid, bc, cfg.exponents), cfg.exponents);
    const auto traj = integrate(s0, cfg.t_end, cfg.stepper, model, ops, bc, iopt);
    rep["trajectory"] = trajectory_summary(traj, grid, ambient);
    if (!out_dir.empty()) write_series(out_dir, traj, grid, ambient, fields);
  } else if (cfg.experiment == "check") {
    const auto s0 = initial_state(cfg, grid, ops, 1.0);
    rep["compatibility"] = compatibility_json(check_compatibility(s0, grid, bc, cfg.exponents), cfg.exponents);
  } else if (cfg.experiment == "equilibrium") {
    rep["equilibrium"] = equilibrium_json(compute_equilibrium(grid, cfg.j, cfg.ell, model, ep.r));
  } else if (cfg.experiment == "spectrum") {
    const auto eq = compute_equilibrium(grid, cfg.j, cfg.ell, model, ep.r);
    rep["equilibrium"] = equilibrium_json(eq);
    rep["spectrum"] = spectrum_json(linearized_spectrum(eq, grid, model, ep.spectrum_modes));
  } else if (cfg.experiment == "decay") {
    const auto eq = compute_equilibrium(grid, cfg.j, cfg.ell, model, ep.r);
    const auto sp = linearized_spectrum(eq, grid, model, ep.spectrum_modes);
    const auto s0 = initial_state(cfg, grid, ops, 1.0, &eq);
    const auto traj = integrate(s0, cfg.t_end, cfg.stepper, model, ops, bc, iopt);
    DecayFit fit = fit_decay(traj, eq, grid, DecayNorms{ep.include_h2}, ep.skip_fraction);
    const auto eu = eigen_decompose(ops.u, ep.spectrum_modes);
    const auto et = eigen_decompose(ops.theta, ep.spectrum_modes);
    auto wave = excited_modes(Field(s0.u - eq.u_star), eu, grid);
    for (int k : excited_modes(s0.v, eu, grid))
      if (std::find(wave.begin(), wave.end(), k) == wave.end()) wave.push_back(k);
    const auto heat = excited_modes(Field(s0.theta - eq.theta_star), et, grid);
    if (!wave.empty() || !heat.empty()) fit.omega0 = sp.omega0_for(wave, heat);
    fit.omega0_global = sp.omega0;
    rep["equilibrium"] = {{"u_residual", eq.u_residual}, {"theta_residual", eq.theta_residual}};
    rep["spectrum"] = spectrum_json(sp);
    rep["fit"] = {{"omega", fit.omega},
                  {"C", fit.C},
                  {"r_squared", fit.r_squared},
                  {"window", {fit.window_start, fit.window_end}},
                  {"samples_used", fit.samples_used},
                  {"excited_wave_modes", wave},
                  {"excited_heat_modes", heat},
                  {"omega0", fit.omega0 ? json(*fit.omega0) : json(nullptr)},
                  {"omega0_global", *fit.omega0_global}};
    if (fit.omega0) rep["fit"]["relative_deviation"] = std::abs(fit.omega - *fit.omega0) / *fit.omega0;
    rep["trajectory"] = trajectory_summary(traj, grid, eq.theta_star);
    if (!out_dir.empty()) write_series(out_dir, traj, grid, eq.theta_star, fields);
  } else if (cfg.experiment == "smoothing") {
    const auto s0 = initial_state(cfg, grid, ops, 1.0);
    const auto r = smoothing_probe(s0, grid, bc, model, cfg.stepper, ep.smoothing);
    json levels = json::array();
    for (const auto& l : r.levels)
      levels.push_back({{"dt", l.dt},
                        {"d2_start", l.d2_start},
                        {"d3_start", l.d3_start},
                        {"d2_tau", l.d2_tau},
                        {"d3_tau", l.d3_tau}});
    rep["smoothing"] = {{"tau", ep.smoothing.tau},
                        {"field", ep.smoothing.field == ProbeField::Pressure ? "u" : "theta"},
                        {"levels", levels},
                        {"exponent_d2_start", r.exponent_d2_start},
                        {"exponent_d3_start", r.exponent_d3_start},
                        {"exponent_d2_tau", r.exponent_d2_tau},
                        {"exponent_d3_tau", r.exponent_d3_tau},
                        {"smoothing_confirmed", r.smoothing_confirmed}};
  } else if (cfg.experiment == "sweep") {
    DataShape shape = [&](double a) { return initial_state(cfg, grid, ops, a); };
    const auto reps = smallness_sweep(shape, ep.sweep_t_ends, grid, bc, model, cfg.stepper, ep.sweep);
    json arr = json::array();
    for (const auto& r : reps) {
      json hist = json::array();
      for (const auto& h : r.history)
        hist.push_back({{"amplitude", h.amplitude},
                        {"success", h.success},
                        {"failure", h.failure},
                        {"failure_time", h.failure_time}});
      arr.push_back({{"t_end", r.t_end},
                     {"threshold_found", r.threshold_found},
                     {"result", r.threshold_found ? "threshold bracketed" : "no finite threshold detected"},
                     {"delta_hat", r.delta_hat},
                     {"bracket", {r.bracket_lo, r.bracket_hi}},
                     {"bracket_relative_width", r.bracket_hi > 0 ? (r.bracket_hi - r.bracket_lo) / r.bracket_hi : 0.0},
                     {"failure_mode_above", r.failure_mode_above},
                     {"monotone_in_amplitude", r.monotone},
                     {"monotonicity_violations", r.monotonicity_violations},
                     {"history", hist}});
    }
    // delta_hat(T) should not increase with T
    std::vector<std::pair<double, double>> by_t;
    for (const auto& r : reps) by_t.emplace_back(r.t_end, r.delta_hat);
    std::sort(by_t.begin(), by_t.end());
    bool nonincreasing = true;
    for (std::size_t i = 1; i < by_t.size(); ++i) nonincreasing = nonincreasing && by_t[i].second <= by_t[i - 1].second;
    rep["sweep"] = {{"runs", arr}, {"delta_nonincreasing_in_t", nonincreasing}};
  } else if (cfg.experiment == "mms") {
    MmsProblem p;
    p.lower = cfg.grid.lower[0];
    p.upper = cfg.grid.upper[0];
    p.j = cfg.j;
    p.ell = cfg.ell;
    p.model = model;
    p.model.forcing = nullptr;
    p.u_exact = Expression::parse(ep.mms_u);
    p.theta_exact = Expression::parse(ep.mms_theta);
    p.t_end = ep.mms_t_end;
    p.stepper = cfg.stepper;
    const auto r = mms_convergence(p, ep.mms);
    auto levels = [](const std::vector<MmsLevel>& lv) {
      json a = json::array();
      for (const auto& l : lv)
        a.push_back({{"nodes", l.nodes}, {"h", l.h}, {"dt", l.dt}, {"err_u", l.err_u}, {"err_theta", l.err_theta}});
      return a;
    };
    rep["mms"] = {{"spatial", levels(r.spatial)},
                  {"temporal", levels(r.temporal)},
                  {"temporal_scheme", ep.mms.temporal_scheme == TimeScheme::Trapezoidal ? "trapezoidal" : "backward_euler"},
                  {"spatial_order", r.spatial_order},
                  {"spatial_order_u", r.spatial_order_u},
                  {"spatial_order_theta", r.spatial_order_theta},
                  {"temporal_order", r.temporal_order},
                  {"temporal_order_u", r.temporal_order_u},
                  {"temporal_order_theta", r.temporal_order_theta}};
  }
  return rep;
}

json failure_json(const std::exception& e) {
  json j = {{"status", "failed"}, {"message", e.what()}};
  if (const auto* err = dynamic_cast<const Error*>(&e)) {
    j["error"] = err->kind();
  } else if (dynamic_cast<const std::invalid_argument*>(&e)) {
    j["error"] = "InvalidArgument";
  } else {
    j["error"] = "InternalError";
  }
  if (const auto* nf = dynamic_cast<const NumericalFailure*>(&e)) j["time"] = nf->time;
  if (const auto* p = dynamic_cast<const ParabolicityLost*>(&e)) {
    j["node"] = p->node;
    j["m"] = p->m;
  }
  if (const auto* p = dynamic_cast<const NewtonDivergence*>(&e)) {
    j["iterations"] = p->iterations;
    j["residual_history"] = p->residual_history;
  }
  if (const auto* p = dynamic_cast<const LinearSolveFailure*>(&e)) j["residual"] = p->residual;
  if (const auto* p = dynamic_cast<const NonDecayingSignal*>(&e)) {
    j["slope"] = p->slope;
    j["r_squared"] = p->r_squared;
  }
  if (const auto* p = dynamic_cast<const ConfigError*>(&e)) {
    j["key"] = p->key;
    j["constraint"] = p->constraint;
  }
  return j;
}

int run(RunConfig cfg, const RunOptions& opt) {
  if (opt.out_dir) {
    cfg.out_dir = *opt.out_dir;
    cfg.echo["output"]["dir"] = cfg.out_dir;
  }
  if (opt.seed) {
    cfg.seed = *opt.seed;
    cfg.echo["seed"] = cfg.seed;
  }
  const bool fields = opt.fields || cfg.fields;
  cfg.echo["output"]["fields"] = fields;
  const fs::path dir(cfg.out_dir);
  fs::create_directories(dir);
  if (!opt.quiet)
    for (const auto& w : cfg.warnings) std::cerr << "warning: " << w << '\n';

  const auto start = std::chrono::steady_clock::now();
  int code = kExitOk;
  json report, failure;
  try {
    report = run_experiment(cfg, dir.string(), fields);
  } catch (const ConfigError& e) {
    code = kExitConfig;
    failure = failure_json(e);
  } catch (const NumericalFailure& e) {
    code = kExitNumerical;
    failure = failure_json(e);
  } catch (const std::exception& e) {
    code = kExitInternal;
    failure = failure_json(e);
  }
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  std::vector<std::string> artifacts{"manifest.json"};
  if (code == kExitOk) {
    write_text(dir / "report.json", report.dump(2) + "\n");
    artifacts.push_back("report.json");
    if (fs::exists(dir / "series.csv")) artifacts.push_back("series.csv");
    if (fs::exists(dir / "fields.csv")) artifacts.push_back("fields.csv");
  } else {
    write_text(dir / "failure.json", failure.dump(2) + "\n");
    artifacts.push_back("failure.json");
    std::cerr << failure.dump() << '\n';
  }
  json manifest = {{"tool", "wpsim"},
                   {"version", kVersion},
                   {"experiment", cfg.experiment},
                   {"seed", cfg.seed},
                   {"argv", opt.argv},
                   {"config", cfg.echo},
                   {"config_warnings", cfg.warnings},
                   {"build",
                    {{"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                   std::to_string(EIGEN_MINOR_VERSION)},
                     {"compiler", __VERSION__},
                     {"cplusplus", __cplusplus}}},
                   {"exit_code", code},
                   {"artifacts", artifacts},
                   {"timings", {{"wall_seconds", wall}}}};
  write_text(dir / "manifest.json", manifest.dump(2) + "\n");
  if (!opt.quiet && code == kExitOk) std::cout << report.dump(2) << '\n';
  return code;
}

}  // namespace wpsim
