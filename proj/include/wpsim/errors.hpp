#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace wpsim {

/// Root of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  /// Short machine-readable identifier used in failure JSON.
  virtual std::string kind() const { return "Error"; }
};

/// Failures of the numerical method itself (CLI exit code 3).
class NumericalFailure : public Error {
 public:
  using Error::Error;
  /// Simulation time at which the failure was detected, if known.
  double time = -1.0;
};

class ParabolicityLost : public NumericalFailure {
 public:
  ParabolicityLost(std::size_t node_, double m_)
      : NumericalFailure("parabolicity lost at node " + std::to_string(node_) +
                         ": 1 - 2 k(theta) u = " + std::to_string(m_)),
        node(node_),
        m(m_) {}
  std::string kind() const override { return "ParabolicityLost"; }
  std::size_t node;
  double m;
};

class NewtonDivergence : public NumericalFailure {
 public:
  NewtonDivergence(int iterations_, std::vector<double> history_)
      : NumericalFailure("Newton iteration did not converge after " +
                         std::to_string(iterations_) + " iterations"),
        iterations(iterations_),
        residual_history(std::move(history_)) {}
  std::string kind() const override { return "NewtonDivergence"; }
  int iterations;
  std::vector<double> residual_history;
};

class LinearSolveFailure : public NumericalFailure {
 public:
  explicit LinearSolveFailure(double residual_)
      : NumericalFailure("linear solve failed, relative residual " +
                         std::to_string(residual_)),
        residual(residual_) {}
  std::string kind() const override { return "LinearSolveFailure"; }
  double residual;
};

class ConvergenceFailure : public NumericalFailure {
 public:
  using NumericalFailure::NumericalFailure;
  std::string kind() const override { return "ConvergenceFailure"; }
};

class SingularSteadyProblem : public NumericalFailure {
 public:
  using NumericalFailure::NumericalFailure;
  std::string kind() const override { return "SingularSteadyProblem"; }
};

class NonDecayingSignal : public NumericalFailure {
 public:
  NonDecayingSignal(double slope_, double r2_)
      : NumericalFailure("fitted log-norm slope " + std::to_string(slope_) +
                         " is nonnegative (R^2 = " + std::to_string(r2_) + ")"),
        slope(slope_),
        r_squared(r2_) {}
  std::string kind() const override { return "NonDecayingSignal"; }
  double slope;
  double r_squared;
};

class BracketInvalid : public NumericalFailure {
 public:
  using NumericalFailure::NumericalFailure;
  std::string kind() const override { return "BracketInvalid"; }
};

class UnsupportedDim : public Error {
 public:
  explicit UnsupportedDim(int dim)
      : Error("unsupported grid dimension " + std::to_string(dim) +
              " (expected 1 or 2)") {}
  std::string kind() const override { return "UnsupportedDim"; }
};

/// Invalid configuration (CLI exit code 2). Names the offending key.
class ConfigError : public Error {
 public:
  ConfigError(std::string key_, std::string constraint_)
      : Error(key_ + ": " + constraint_),
        key(std::move(key_)),
        constraint(std::move(constraint_)) {}
  std::string kind() const override { return "ConfigError"; }
  std::string key;
  std::string constraint;
};

}  // namespace wpsim
