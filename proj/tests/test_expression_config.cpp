#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdio>
#include <fstream>
#include <random>

#include "wpsim/config.hpp"
#include "wpsim/expression.hpp"

using namespace wpsim;
using nlohmann::json;

TEST_CASE("expressions parse and evaluate") {
  CHECK(Expression::parse("1 + 2*3")(0, 0) == 7);
  CHECK(Expression::parse("2^3^2")(0, 0) == 512);  // right associative
  CHECK(Expression::parse("-x^2")(0, 3) == -9);
  CHECK(Expression::parse("sin(pi/2) * exp(t) + log(y)")(1, 0, 1) == doctest::Approx(std::exp(1.0)));
  CHECK(Expression::parse("1.5e-1 * (x - y)")(0, 2, 1) == doctest::Approx(0.15));
  CHECK(Expression::parse("  cos( x )")(0, 0) == 1);
  CHECK(Expression::parse("3").is_constant());
  CHECK(Expression::parse("2*pi").constant_value() == doctest::Approx(2 * M_PI));
  CHECK_FALSE(Expression::parse("t*0 + x").is_constant());
  CHECK(Expression()(1, 2, 3) == 0);
  // hat profile written with abs
  const auto hat = Expression::parse("(0.5 - abs(x - 1.5) + abs(0.5 - abs(x - 1.5))) / 1");
  CHECK(hat(0, 1.5) == doctest::Approx(1.0));
  CHECK(hat(0, 1.75) == doctest::Approx(0.5));
  CHECK(hat(0, 0.5) == 0);
  CHECK(Expression::parse("sqrt(x)")(0, 9) == 3);
  CHECK(Expression::parse("sqrt(1 + x^2)").derivative('x')(0, 1) == doctest::Approx(1 / std::sqrt(2.0)));
  CHECK(Expression::parse("abs(x)").derivative('x')(0, -2) == -1);
}

TEST_CASE("malformed expressions report the position") {
  auto position = [](const std::string& text) -> long {
    try {
      Expression::parse(text);
    } catch (const ExpressionError& e) {
      return static_cast<long>(e.position);
    }
    return -1;
  };
  CHECK(position("1 + $") == 4);
  CHECK(position("sin(x") == 5);
  CHECK(position("z + 1") == 0);
  CHECK(position("2 +") == 3);
  CHECK(position("(1))") == 3);
  CHECK(position("tan(x)") == 0);
  CHECK_THROWS_AS(Expression::parse(""), std::invalid_argument);
}

// Property: symbolic derivatives agree with central differences, and
// printing then re-parsing preserves values.
TEST_CASE("derivatives and printing on random expressions") {
  std::mt19937 rng(99);
  std::uniform_int_distribution<int> pick(0, 9);
  std::uniform_real_distribution<double> val(-1.0, 1.0);
  const Expression t = Expression::variable('t'), x = Expression::variable('x'), y = Expression::variable('y');

  std::function<Expression(int)> random_expr = [&](int depth) -> Expression {
    if (depth == 0) {
      switch (pick(rng) % 4) {
        case 0: return t;
        case 1: return x;
        case 2: return y;
        default: return Expression::constant(std::round(val(rng) * 100) / 50);
      }
    }
    const Expression a = random_expr(depth - 1);
    switch (pick(rng)) {
      case 0: return a + random_expr(depth - 1);
      case 1: return a - random_expr(depth - 1);
      case 2: return a * random_expr(depth - 1);
      case 3: return a / (Expression::constant(2.5) + sin(random_expr(depth - 1)));
      case 4: return sin(a);
      case 5: return cos(a);
      case 6: return exp(Expression::constant(0.3) * a);
      case 7: return log(Expression::constant(2) + sin(a)) + sqrt(Expression::constant(1.5) + cos(a));
      case 8: return pow(a, Expression::constant(2));
      default: return -a;
    }
  };

  for (int trial = 0; trial < 200; ++trial) {
    const Expression e = random_expr(1 + trial % 4);
    const double pt = 0.3 * val(rng), px = val(rng), py = val(rng);
    const double h = 1e-5;
    const double dt = (e(pt + h, px, py) - e(pt - h, px, py)) / (2 * h);
    const double dx = (e(pt, px + h, py) - e(pt, px - h, py)) / (2 * h);
    const double dy = (e(pt, px, py + h) - e(pt, px, py - h)) / (2 * h);
    const double scale = 1 + std::abs(dt) + std::abs(dx) + std::abs(dy);
    CHECK(std::abs(e.derivative('t')(pt, px, py) - dt) < 1e-6 * scale);
    CHECK(std::abs(e.derivative('x')(pt, px, py) - dx) < 1e-6 * scale);
    CHECK(std::abs(e.derivative('y')(pt, px, py) - dy) < 1e-6 * scale);
    const Expression again = Expression::parse(e.to_string());
    CHECK(again(pt, px, py) == doctest::Approx(e(pt, px, py)).epsilon(1e-12));
  }
}

TEST_CASE("minimal configuration takes the defaults") {
  const auto cfg = parse_config(json::object());
  CHECK(cfg.experiment == "simulate");
  CHECK(cfg.grid.nodes == std::vector<int>{65});
  CHECK(cfg.model.params.W == 1.0);
  CHECK(cfg.theta_range[0] == 0.5);
  CHECK(cfg.theta_range[1] == 2.0);
  CHECK(cfg.stepper.scheme == TimeScheme::Trapezoidal);
  CHECK(cfg.stepper.startup_backward_euler == 0);
  CHECK(cfg.model.source.kind() == SourceModel<double>::Kind::Zero);
  CHECK(cfg.warnings.empty());
  // the echo lists every default
  CHECK(cfg.echo["stepper"]["dt"] == 0.01);
  CHECK(cfg.echo["coefficients"]["b"]["type"] == "constant");
  CHECK(cfg.echo["physical"]["theta_a"] == 1.0);
  const auto bc = cfg.boundary();
  CHECK(bc.h.value(0, 0, 0, Face::XLo) == 1.0);
  CHECK(bc.g.value(0, 0, 0, Face::XLo) == 0.0);
}

TEST_CASE("nonpositive sound diffusivity is rejected") {
  const json doc = json::parse(R"({"coefficients": {"b": {"type": "affine", "a": 0, "b": 1},
                                                     "theta_range": [-1, 1]}})");
  try {
    parse_config(doc);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.key == "coefficients.b");
    CHECK(e.constraint.find("positivity") != std::string::npos);
  }
  // positive on the declared range is fine
  const json ok = json::parse(R"({"coefficients": {"b": {"type": "affine", "a": 0, "b": 1},
                                                    "theta_range": [0.5, 2]}})");
  CHECK(parse_config(ok).model.b0 == doctest::Approx(0.5));
  // declared b0 above the minimum
  const json high = json::parse(R"({"coefficients": {"b": 0.3, "b0": 0.5}})");
  CHECK_THROWS_AS(parse_config(high), ConfigError);
}

TEST_CASE("sound speed lower bound is enforced for the stability experiments") {
  const json doc = json::parse(R"({"coefficients": {"c": {"type": "affine", "a": 1, "b": -1}}})");
  CHECK_NOTHROW(parse_config(doc, std::string("simulate")));
  CHECK_THROWS_AS(parse_config(doc, std::string("decay")), ConfigError);
}

TEST_CASE("exponent warnings") {
  const json doc = json::parse(R"({"grid": {"lower": [0, 0], "upper": [1, 1], "nodes": [9, 9]},
                                   "exponents": {"q": 1.0001, "r": 1.5, "s": 1.5}})");
  const auto cfg = parse_config(doc);
  // q > 1 is enforced, so d/q < 2 holds for d <= 2; only the temperature pair can warn
  REQUIRE(cfg.warnings.size() == 1);
  CHECK(cfg.warnings[0].find("2/r+d/s<2") != std::string::npos);
  CHECK_THROWS_AS(parse_config(json::parse(R"({"exponents": {"p": 1}})")), ConfigError);
}

TEST_CASE("unknown keys and wrong types are named") {
  auto key_of = [](const std::string& text) -> std::string {
    try {
      parse_config(json::parse(text));
    } catch (const ConfigError& e) {
      return e.key;
    }
    return "";
  };
  CHECK(key_of(R"({"stepper": {"dtt": 0.1}})") == "stepper.dtt");
  CHECK(key_of(R"({"nonsense": 1})") == "nonsense");
  CHECK(key_of(R"({"stepper": {"dt": "small"}})") == "stepper.dt");
  CHECK(key_of(R"({"stepper": {"newton_max": 2.5}})") == "stepper.newton_max");
  CHECK(key_of(R"({"boundary": {"j": 2}})") == "boundary.j");
  CHECK(key_of(R"({"boundary": {"g": "sin(x"}})") == "boundary.g");
  CHECK(key_of(R"({"physical": {"W": -1}})") == "physical.W");
  CHECK(key_of(R"({"experiment": "dance"})") == "experiment");
  CHECK(key_of(R"({"source": {"type": "cubic"}})") == "source.type");
  CHECK(key_of(R"({"smoothing": {"tau": 0.01}})") == "smoothing.dts");
  CHECK(key_of(R"({"stepper": {"dt": 1e-9}})") == "stepper");
}

TEST_CASE("experiment override and face-specific boundary data") {
  const json doc = json::parse(R"({"experiment": "mms",
                                   "grid": {"lower": [0, 0], "upper": [1, 2], "nodes": [5, 5]},
                                   "boundary": {"ell": 1, "g": "t*x", "g_xhi": "2*t", "h": "0"}})");
  CHECK_THROWS_AS(parse_config(doc), ConfigError);  // mms is 1D only
  const auto cfg = parse_config(doc, std::string("simulate"));
  CHECK(cfg.experiment == "simulate");
  CHECK(cfg.echo["experiment"] == "simulate");
  const auto bc = cfg.boundary();
  CHECK(bc.ell == 1);
  CHECK(bc.g.value(3, 0.5, 0, Face::YLo) == doctest::Approx(1.5));
  CHECK(bc.g.value(3, 1.0, 0, Face::XHi) == doctest::Approx(6.0));
  CHECK(bc.g.rate(3, 0.5, 0, Face::YLo) == doctest::Approx(0.5));
  CHECK(bc.g.rate(3, 1.0, 0, Face::XHi) == doctest::Approx(2.0));
}

TEST_CASE("comments are allowed in configuration files") {
  const std::string path = "test_config_comments.json";
  {
    std::ofstream out(path);
    out << "{\n  // trapezoidal by default\n  \"stepper\": {\"scheme\": \"backward_euler\"}\n}\n";
  }
  const auto cfg = parse_config_file(path);
  CHECK(cfg.stepper.scheme == TimeScheme::BackwardEuler);
  std::remove(path.c_str());
  CHECK_THROWS_AS(parse_config_file("does/not/exist.json"), ConfigError);
}
