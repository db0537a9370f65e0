#include "wpsim/config.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

namespace wpsim {

using nlohmann::json;

namespace {

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

/// Typed reader over one JSON object. Records every value it hands out,
/// defaults included, and rejects keys it was never asked about.
class Section {
 public:
  Section(const json* node, std::string path) : node_(node), path_(std::move(path)) {
    if (node_ && !node_->is_null() && !node_->is_object()) throw ConfigError(path_, "expected an object");
    if (node_ && node_->is_null()) node_ = nullptr;
  }

  bool has(const std::string& key) const { return node_ && node_->contains(key); }

  template <typename T>
  T get(const std::string& key, const T& def) {
    seen_.insert(key);
    if (!has(key)) {
      echo_[key] = def;
      return def;
    }
    T v = convert<T>(node_->at(key), key);
    echo_[key] = v;
    return v;
  }

  template <typename T>
  std::optional<T> optional(const std::string& key) {
    seen_.insert(key);
    if (!has(key)) return std::nullopt;
    T v = convert<T>(node_->at(key), key);
    echo_[key] = v;
    return v;
  }

  const json* raw(const std::string& key) {
    seen_.insert(key);
    return has(key) ? &node_->at(key) : nullptr;
  }

  Section sub(const std::string& key) {
    seen_.insert(key);
    return Section(has(key) ? &node_->at(key) : nullptr, join(path_, key));
  }

  void put(const std::string& key, json value) { echo_[key] = std::move(value); }
  std::string key_path(const std::string& key) const { return join(path_, key); }

  json finish() {
    if (node_)
      for (const auto& [k, v] : node_->items())
        if (!seen_.count(k)) throw ConfigError(join(path_, k), "unknown key");
    return echo_;
  }

 private:
  template <typename T>
  T convert(const json& v, const std::string& key) const {
    try {
      if constexpr (std::is_same_v<T, double>) {
        if (!v.is_number()) throw ConfigError(join(path_, key), "expected a number");
      } else if constexpr (std::is_integral_v<T> && !std::is_same_v<T, bool>) {
        if (!v.is_number_integer()) throw ConfigError(join(path_, key), "expected an integer");
      } else if constexpr (std::is_same_v<T, bool>) {
        if (!v.is_boolean()) throw ConfigError(join(path_, key), "expected true or false");
      } else if constexpr (std::is_same_v<T, std::string>) {
        if (!v.is_string()) throw ConfigError(join(path_, key), "expected a string");
      }
      return v.get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(join(path_, key), std::string("wrong type: ") + e.what());
    }
  }

  const json* node_;
  std::string path_;
  json echo_ = json::object();
  std::set<std::string> seen_;
};

Expression parse_expr(const std::string& text, const std::string& key) {
  try {
    return Expression::parse(text);
  } catch (const ExpressionError& e) {
    throw ConfigError(key, e.what());
  }
}

Coefficient<double> parse_coefficient(const json* node, const std::string& key, double def, json& echo) {
  if (!node) {
    echo = {{"type", "constant"}, {"value", def}};
    return Coefficient<double>::constant(def);
  }
  if (node->is_number()) {
    echo = {{"type", "constant"}, {"value", node->get<double>()}};
    return Coefficient<double>::constant(node->get<double>());
  }
  Section s(node, key);
  const auto type = s.get<std::string>("type", "constant");
  Coefficient<double> c = Coefficient<double>::constant(def);
  if (type == "constant") {
    c = Coefficient<double>::constant(s.get<double>("value", def));
  } else if (type == "affine") {
    c = Coefficient<double>::affine(s.get<double>("a", def), s.get<double>("b", 0.0));
  } else if (type == "exponential") {
    c = Coefficient<double>::exponential(s.get<double>("a", def), s.get<double>("b", 0.0));
  } else if (type == "table") {
    const auto th = s.get<std::vector<double>>("theta", {});
    const auto vals = s.get<std::vector<double>>("values", {});
    try {
      c = Coefficient<double>::table(th, vals);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(key, e.what());
    }
  } else {
    throw ConfigError(join(key, "type"), "must be constant, affine, exponential or table");
  }
  echo = s.finish();
  return c;
}

SourceModel<double> parse_source(Section& s) {
  const auto type = s.get<std::string>("type", "zero");
  try {
    if (type == "zero") return SourceModel<double>::zero();
    if (type == "quadratic") return SourceModel<double>::pointwise_quadratic(s.get<double>("C", 1.0));
    if (type == "time_averaged") {
      const double C = s.get<double>("C", 1.0);
      return SourceModel<double>::time_averaged_quadratic(C, s.get<double>("T_avg", 1.0));
    }
    if (type == "table") {
      const auto vs = s.get<std::vector<double>>("v", {});
      return SourceModel<double>::table(vs, s.get<std::vector<double>>("Q", {}));
    }
  } catch (const std::invalid_argument& e) {
    throw ConfigError(s.key_path("type"), e.what());
  }
  throw ConfigError(s.key_path("type"), "must be zero, quadratic, time_averaged or table");
}

DataExpression parse_data(Section& s, const std::string& key, const std::string& def) {
  DataExpression d;
  d.all = parse_expr(s.get<std::string>(key, def), s.key_path(key));
  const std::pair<const char*, Face> faces[] = {
      {"_xlo", Face::XLo}, {"_xhi", Face::XHi}, {"_ylo", Face::YLo}, {"_yhi", Face::YHi}};
  for (const auto& [suffix, face] : faces)
    if (auto text = s.optional<std::string>(key + suffix)) d.faces[face] = parse_expr(*text, s.key_path(key + suffix));
  return d;
}

TimeScheme parse_scheme(const std::string& s, const std::string& key) {
  if (s == "trapezoidal") return TimeScheme::Trapezoidal;
  if (s == "backward_euler" || s == "backward-euler") return TimeScheme::BackwardEuler;
  throw ConfigError(key, "must be trapezoidal or backward_euler");
}

std::string number(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

/// min of f over [lo, hi] by dense sampling plus the table breakpoints.
double range_min(const Coefficient<double>& f, double lo, double hi) {
  double m = std::min(f(lo), f(hi));
  for (int i = 1; i < 400; ++i) m = std::min(m, f(lo + (hi - lo) * i / 400.0));
  return m;
}

}  // namespace

Grid<double> GridSpec::build() const { return Grid<double>(lower, upper, nodes); }

BoundaryData<double> DataExpression::data() const {
  auto pick = [f = faces, a = all](Face face) -> const Expression& {
    const auto it = f.find(face);
    return it == f.end() ? a : it->second;
  };
  std::map<Face, Expression> values, rates;
  for (Face face : {Face::XLo, Face::XHi, Face::YLo, Face::YHi}) {
    values[face] = pick(face);
    rates[face] = pick(face).derivative('t');
  }
  return {[values](double t, double x, double y, Face face) { return values.at(face)(t, x, y); },
          [rates](double t, double x, double y, Face face) { return rates.at(face)(t, x, y); }};
}

BoundaryConditionSpec<double> RunConfig::boundary() const {
  BoundaryConditionSpec<double> bc;
  bc.j = j;
  bc.ell = ell;
  bc.g = g.data();
  bc.h = h.data();
  return bc;
}

RunConfig parse_config(const json& doc, const std::optional<std::string>& experiment) {
  RunConfig cfg;
  Section root(&doc, "");
  cfg.experiment = root.get<std::string>("experiment", "simulate");
  if (experiment) {
    cfg.experiment = *experiment;
    root.put("experiment", cfg.experiment);
  }
  const auto& names = experiment_names();
  if (std::find(names.begin(), names.end(), cfg.experiment) == names.end())
    throw ConfigError("experiment", "unknown experiment '" + cfg.experiment + "'");
  cfg.seed = root.get<std::uint64_t>("seed", 0);

  {  // grid
    Section s = root.sub("grid");
    cfg.grid.lower = s.get<std::vector<double>>("lower", cfg.grid.lower);
    cfg.grid.upper = s.get<std::vector<double>>("upper", cfg.grid.upper);
    cfg.grid.nodes = s.get<std::vector<int>>("nodes", cfg.grid.nodes);
    const std::size_t d = cfg.grid.nodes.size();
    if (d != 1 && d != 2) throw ConfigError("grid.nodes", "dimension must be 1 or 2");
    if (cfg.grid.lower.size() != d || cfg.grid.upper.size() != d)
      throw ConfigError("grid", "lower, upper and nodes must have the same length");
    for (std::size_t a = 0; a < d; ++a) {
      if (cfg.grid.nodes[a] < 3) throw ConfigError("grid.nodes", "need at least 3 nodes per axis");
      if (!(cfg.grid.upper[a] > cfg.grid.lower[a])) throw ConfigError("grid.upper", "must exceed grid.lower");
    }
    root.put("grid", s.finish());
  }

  auto& p = cfg.model.params;
  {  // physical
    Section s = root.sub("physical");
    p.rho_a = s.get("rho_a", 1.0);
    p.C_a = s.get("C_a", 1.0);
    p.kappa_a = s.get("kappa_a", 1.0);
    p.rho_b = s.get("rho_b", 1.0);
    p.C_b = s.get("C_b", 1.0);
    p.W = s.get("W", 1.0);
    p.theta_a = s.get("theta_a", 1.0);
    try {
      p.validate();
    } catch (const std::invalid_argument& e) {
      const std::string msg = e.what();
      throw ConfigError("physical." + msg.substr(0, msg.find(' ')), msg);
    }
    root.put("physical", s.finish());
  }

  {  // coefficients
    Section s = root.sub("coefficients");
    json ec, eb, ek;
    cfg.model.coeffs.c = parse_coefficient(s.raw("c"), "coefficients.c", 1.0, ec);
    cfg.model.coeffs.b = parse_coefficient(s.raw("b"), "coefficients.b", 1.0, eb);
    cfg.model.coeffs.k = parse_coefficient(s.raw("k"), "coefficients.k", 0.0, ek);
    s.put("c", ec);
    s.put("b", eb);
    s.put("k", ek);
    const auto range = s.get<std::vector<double>>("theta_range", {0.5 * p.theta_a, 2.0 * p.theta_a});
    if (range.size() != 2 || !(range[1] >= range[0])) throw ConfigError("coefficients.theta_range", "must be [lo, hi] with lo <= hi");
    cfg.theta_range = {range[0], range[1]};
    const double bmin = range_min(cfg.model.coeffs.b, range[0], range[1]);
    const auto b0 = s.optional<double>("b0");
    const std::string hyp = "positivity hypothesis b(theta) >= b0 > 0 on theta_range [" + number(range[0]) + ", " +
                            number(range[1]) + "]";
    if (b0 && !(*b0 > 0)) throw ConfigError("coefficients.b0", "violates the " + hyp);
    if (!(bmin > 0) || (b0 && bmin < *b0))
      throw ConfigError("coefficients.b", "violates the " + hyp + " (min b = " + number(bmin) + ")");
    cfg.model.b0 = b0.value_or(bmin);
    cfg.c0 = s.optional<double>("c0");
    const bool stability = cfg.experiment == "equilibrium" || cfg.experiment == "spectrum" || cfg.experiment == "decay";
    if (stability || cfg.c0) {
      const double c0 = cfg.c0.value_or(0.0);
      if (cfg.c0 && !(c0 > 0)) throw ConfigError("coefficients.c0", "must be > 0");
      // c changing sign means c^2 touches zero somewhere between samples
      const auto& c = cfg.model.coeffs.c;
      const double cmin = range_min(c, range[0], range[1]);
      const double cmax = -range_min(Coefficient<double>::custom([c](double t) { return -c(t); }), range[0], range[1]);
      const double c2min = cmin <= 0 && cmax >= 0 ? 0.0 : std::min(cmin * cmin, cmax * cmax);
      if (!(c2min > 0) || c2min < c0)
        throw ConfigError("coefficients.c", "requires c(theta)^2 >= c0 > 0 on theta_range (min c^2 = " + number(c2min) + ")");
    }
    cfg.model.m_min = s.get("m_min", 1e-6);
    if (!(cfg.model.m_min > 0 && cfg.model.m_min < 1)) throw ConfigError("coefficients.m_min", "must lie in (0, 1)");
    root.put("coefficients", s.finish());
  }

  {  // source
    Section s = root.sub("source");
    cfg.model.source = parse_source(s);
    root.put("source", s.finish());
  }

  {  // boundary
    Section s = root.sub("boundary");
    cfg.j = s.get("j", 0);
    cfg.ell = s.get("ell", 0);
    if (cfg.j != 0 && cfg.j != 1) throw ConfigError("boundary.j", "must be 0 (Dirichlet) or 1 (Neumann)");
    if (cfg.ell != 0 && cfg.ell != 1) throw ConfigError("boundary.ell", "must be 0 (Dirichlet) or 1 (Neumann)");
    cfg.g = parse_data(s, "g", "0");
    cfg.h = parse_data(s, "h", cfg.ell == 0 ? number(p.theta_a) : "0");
    root.put("boundary", s.finish());
  }

  {  // initial
    Section s = root.sub("initial");
    auto& in = cfg.initial;
    in.type = s.get<std::string>("type", "expressions");
    in.amplitude = s.get("amplitude", 1.0);
    if (in.type == "expressions") {
      in.u0 = parse_expr(s.get<std::string>("u0", "0"), "initial.u0");
      in.u1 = parse_expr(s.get<std::string>("u1", "0"), "initial.u1");
      in.theta0 = parse_expr(s.get<std::string>("theta0", number(p.theta_a)), "initial.theta0");
    } else if (in.type == "eigenfunction") {
      in.mode = s.get("mode", 1);
      if (in.mode < 1) throw ConfigError("initial.mode", "must be >= 1");
      in.u0_coef = s.get("u0", 1.0);
      in.u1_coef = s.get("u1", 0.0);
      in.theta_coef = s.get("theta", 0.0);
    } else if (in.type == "random_modes") {
      in.modes = s.get("modes", 4);
      if (in.modes < 1) throw ConfigError("initial.modes", "must be >= 1");
      in.u0_coef = s.get("u0", 1.0);
      in.u1_coef = s.get("u1", 0.0);
      in.theta_coef = s.get("theta", 0.0);
    } else {
      throw ConfigError("initial.type", "must be expressions, eigenfunction or random_modes");
    }
    root.put("initial", s.finish());
  }

  {  // stepper
    Section s = root.sub("stepper");
    auto& st = cfg.stepper;
    st.dt = s.get("dt", st.dt);
    st.dt_min = s.get("dt_min", st.dt_min);
    st.newton_tol = s.get("newton_tol", st.newton_tol);
    st.newton_max = s.get("newton_max", st.newton_max);
    st.scheme = parse_scheme(s.get<std::string>("scheme", "trapezoidal"), "stepper.scheme");
    st.max_halvings = s.get("max_halvings", st.max_halvings);
    st.sample_every = s.get("sample_every", st.sample_every);
    st.startup_backward_euler = s.get("startup_backward_euler", st.startup_backward_euler);
    st.m_min = cfg.model.m_min;
    cfg.t_end = s.get("t_end", 1.0);
    try {
      st.validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError("stepper", e.what());
    }
    if (!(cfg.t_end > 0)) throw ConfigError("stepper.t_end", "must be > 0");
    root.put("stepper", s.finish());
  }

  {  // exponents
    Section s = root.sub("exponents");
    auto& ex = cfg.exponents;
    ex.p = s.get("p", 2.0);
    ex.q = s.get("q", 2.0);
    ex.r = s.get("r", 2.0);
    ex.s = s.get("s", 2.0);
    for (auto [name, v] : {std::pair{"p", ex.p}, {"q", ex.q}, {"r", ex.r}, {"s", ex.s}})
      if (!(v > 1)) throw ConfigError(std::string("exponents.") + name, "must lie in (1, inf)");
    root.put("exponents", s.finish());
    if (cfg.experiment != "mms" && cfg.experiment != "check") {
      const double d = static_cast<double>(cfg.grid.nodes.size());
      if (!(d / ex.q < 2))
        cfg.warnings.push_back("declared exponents violate d/q<2 (d = " + number(d) + ", q = " + number(ex.q) + ")");
      if (!(2 / ex.r + d / ex.s < 2))
        cfg.warnings.push_back("declared exponents violate 2/r+d/s<2 (r = " + number(ex.r) + ", s = " + number(ex.s) + ")");
    }
  }

  auto& ep = cfg.params;
  {
    Section s = root.sub("equilibrium");
    ep.r = s.optional<double>("r");
    root.put("equilibrium", s.finish());
  }
  {
    Section s = root.sub("spectrum");
    ep.spectrum_modes = s.get("modes", 8);
    if (ep.spectrum_modes < 1) throw ConfigError("spectrum.modes", "must be >= 1");
    root.put("spectrum", s.finish());
  }
  {
    Section s = root.sub("decay");
    ep.skip_fraction = s.get("skip_fraction", 0.2);
    if (!(ep.skip_fraction >= 0 && ep.skip_fraction < 1)) throw ConfigError("decay.skip_fraction", "must lie in [0, 1)");
    const auto norms = s.get<std::string>("norms", "l2_h2");
    if (norms != "l2_h2" && norms != "l2") throw ConfigError("decay.norms", "must be l2_h2 or l2");
    ep.include_h2 = norms == "l2_h2";
    root.put("decay", s.finish());
  }
  {
    Section s = root.sub("smoothing");
    auto& sm = ep.smoothing;
    sm.tau = s.get("tau", sm.tau);
    sm.dts = s.get("dts", sm.dts);
    const auto field = s.get<std::string>("field", "u");
    if (field != "u" && field != "theta") throw ConfigError("smoothing.field", "must be u or theta");
    sm.field = field == "u" ? ProbeField::Pressure : ProbeField::Temperature;
    const auto norm = s.get<std::string>("norm", "linf");
    if (norm != "linf" && norm != "l2") throw ConfigError("smoothing.norm", "must be linf or l2");
    sm.norm = norm == "linf" ? NormKind::Linf : NormKind::L2;
    if (sm.dts.size() < 2) throw ConfigError("smoothing.dts", "need at least two step sizes");
    for (double dt : sm.dts)
      if (!(dt > 0 && sm.tau >= 2 * dt)) throw ConfigError("smoothing.dts", "each dt must be > 0 and <= tau / 2");
    root.put("smoothing", s.finish());
  }
  {
    Section s = root.sub("sweep");
    auto& sw = ep.sweep;
    sw.a_lo = s.get("a_lo", sw.a_lo);
    sw.a_hi = s.get("a_hi", sw.a_hi);
    sw.rel_tol = s.get("rel_tol", sw.rel_tol);
    sw.max_bisections = s.get("max_bisections", sw.max_bisections);
    ep.sweep_t_ends = s.get("t_ends", std::vector<double>{cfg.t_end});
    if (!(sw.a_lo > 0 && sw.a_hi > sw.a_lo)) throw ConfigError("sweep.a_hi", "need 0 < a_lo < a_hi");
    if (!(sw.rel_tol > 0)) throw ConfigError("sweep.rel_tol", "must be > 0");
    if (ep.sweep_t_ends.empty()) throw ConfigError("sweep.t_ends", "must not be empty");
    for (double t : ep.sweep_t_ends)
      if (!(t > 0)) throw ConfigError("sweep.t_ends", "must be > 0");
    root.put("sweep", s.finish());
  }
  {
    Section s = root.sub("mms");
    auto& m = ep.mms;
    ep.mms_u = s.get<std::string>("u_exact", ep.mms_u);
    ep.mms_theta = s.get<std::string>("theta_exact", number(p.theta_a) + " + 0.1*sin(x)*exp(-t)");
    parse_expr(ep.mms_u, "mms.u_exact");
    parse_expr(ep.mms_theta, "mms.theta_exact");
    m.nodes = s.get("nodes", m.nodes);
    m.spatial_dt = s.get("spatial_dt", m.spatial_dt);
    m.temporal_nodes = s.get("temporal_nodes", m.temporal_nodes);
    m.dts = s.get("dts", m.dts);
    m.temporal_scheme = parse_scheme(s.get<std::string>("scheme", "trapezoidal"), "mms.scheme");
    m.semi_discrete_temporal = s.get("semi_discrete_temporal", true);
    ep.mms_t_end = s.get("t_end", 1.0);
    if (m.nodes.size() < 2 || m.dts.size() < 2) throw ConfigError("mms", "nodes and dts need at least two levels");
    for (int n : m.nodes)
      if (n < 3) throw ConfigError("mms.nodes", "need at least 3 nodes");
    if (cfg.experiment == "mms" && cfg.grid.nodes.size() != 1) throw ConfigError("grid", "the mms study is one-dimensional");
    root.put("mms", s.finish());
  }

  {  // output
    Section s = root.sub("output");
    cfg.out_dir = s.get<std::string>("dir", "out");
    cfg.fields = s.get("fields", false);
    root.put("output", s.finish());
  }

  cfg.echo = root.finish();
  return cfg;
}

RunConfig parse_config_file(const std::string& path, const std::optional<std::string>& experiment) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config", "cannot open '" + path + "'");
  json doc;
  try {
    doc = json::parse(in, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    throw ConfigError("config", std::string("malformed JSON: ") + e.what());
  }
  return parse_config(doc, experiment);
}

}  // namespace wpsim
