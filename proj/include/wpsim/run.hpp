#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "wpsim/config.hpp"

namespace wpsim {

inline constexpr const char* kVersion = "0.1.0";

enum ExitCode { kExitOk = 0, kExitConfig = 2, kExitNumerical = 3, kExitInternal = 4 };

struct RunOptions {
  std::optional<std::string> out_dir;  ///< overrides output.dir
  std::optional<std::uint64_t> seed;   ///< overrides seed
  bool fields = false;                 ///< dump full fields (also enabled by output.fields)
  bool quiet = false;
  std::vector<std::string> argv;
};

/// Initial state of the configured shape at the given amplitude:
/// u = A u0, v = A u1, theta = base + A (theta0 - theta_a), where base is
/// theta_a unless an equilibrium temperature is supplied.
State<double> initial_state(const RunConfig& cfg, const Grid<double>& grid, const Operators<double>& ops,
                            double amplitude, const EquilibriumResult* around = nullptr);

/// Runs the selected experiment and returns its deterministic report.
/// Writes CSV series into `out_dir` when it is non-empty. Throws on failure.
nlohmann::json run_experiment(const RunConfig& cfg, const std::string& out_dir, bool fields);

/// JSON description of an exception, as written to failure.json.
nlohmann::json failure_json(const std::exception& e);

/// Full run: experiment, report.json, manifest.json and failure.json on
/// error. Returns the process exit code.
int run(RunConfig cfg, const RunOptions& opt);

}  // namespace wpsim
