#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "wpsim/analysis.hpp"
#include "wpsim/expression.hpp"

namespace wpsim {

struct GridSpec {
  std::vector<double> lower{0.0};
  std::vector<double> upper{3.14159265358979323846};
  std::vector<int> nodes{65};

  Grid<double> build() const;
};

/// Boundary data given as expressions over (t, x, y), with per-face overrides.
struct DataExpression {
  Expression all;
  std::map<Face, Expression> faces;

  BoundaryData<double> data() const;
};

struct InitialSpec {
  std::string type = "expressions";  ///< expressions | eigenfunction | random_modes
  double amplitude = 1.0;
  // expressions
  Expression u0, u1;
  std::optional<Expression> theta0;  ///< defaults to theta_a
  // eigenfunction
  int mode = 1;
  double u0_coef = 1.0, u1_coef = 0.0, theta_coef = 0.0;
  // random_modes
  int modes = 4;
};

struct ExperimentSpec {
  // equilibrium / spectrum
  std::optional<double> r;
  int spectrum_modes = 8;
  // decay
  double skip_fraction = 0.2;
  bool include_h2 = true;
  // smoothing
  SmoothingOptions smoothing;
  // sweep
  SweepOptions sweep;
  std::vector<double> sweep_t_ends{1.0};
  // mms
  std::string mms_u = "sin(x)*cos(t)";
  std::string mms_theta;  ///< defaults to theta_a + 0.1*sin(x)*exp(-t)
  MmsLadder mms;
  double mms_t_end = 1.0;
};

struct RunConfig {
  std::string experiment = "simulate";
  std::uint64_t seed = 0;
  GridSpec grid;
  Model<double> model;
  std::array<double, 2> theta_range{0, 0};
  std::optional<double> c0;
  int j = 0, ell = 0;
  DataExpression g, h;
  InitialSpec initial;
  StepperConfig<double> stepper;
  double t_end = 1.0;
  Exponents exponents;
  ExperimentSpec params;
  std::string out_dir = "out";
  bool fields = false;

  std::vector<std::string> warnings;
  nlohmann::json echo;  ///< normalised configuration with every default filled in

  BoundaryConditionSpec<double> boundary() const;
};

inline const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> names{"simulate", "equilibrium", "spectrum", "decay",
                                              "smoothing", "sweep",       "mms",      "check"};
  return names;
}

/// Parses and validates a configuration document. Throws ConfigError naming
/// the offending key. `experiment` overrides the document's own selection.
RunConfig parse_config(const nlohmann::json& doc, const std::optional<std::string>& experiment = {});
RunConfig parse_config_file(const std::string& path, const std::optional<std::string>& experiment = {});

}  // namespace wpsim
