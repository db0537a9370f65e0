#pragma once

#include <complex>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "wpsim/eigen_decompose.hpp"
#include "wpsim/expression.hpp"
#include "wpsim/norms.hpp"
#include "wpsim/timestepper.hpp"

namespace wpsim {

using Field = Vector<double>;

// ---------------------------------------------------------------- equilibrium

struct EquilibriumResult {
  Field u_star;
  Field theta_star;
  double u_residual = 0;      ///< discrete L2 norm of the steady wave residual
  double theta_residual = 0;  ///< discrete L2 norm of the steady heat residual
  std::optional<double> r;    ///< pressure level of the constant family (Neumann u only)
  int j = 0, ell = 0;
};

/// Steady state with homogeneous pressure data and temperature data
/// (1 - ell) theta_a: u* = 0 (j = 0) or u* = r (j = 1), and theta* solving
/// -kappa_a Delta_h theta + rho_b C_b W (theta - theta_a) = Q(0).
/// Throws SingularSteadyProblem for W = 0 with a Neumann temperature closure.
EquilibriumResult compute_equilibrium(const Grid<double>& grid, int j, int ell, const Model<double>& model,
                                      std::optional<double> r = {});

// ------------------------------------------------------------------ spectrum

struct ModeRates {
  int mode = 0;                       ///< 0-based index of the Laplacian eigenpair
  double lambda_u = 0;                ///< eigenvalue of -Delta_h for the u closure
  double lambda_theta = 0;            ///< eigenvalue of -Delta_h for the theta closure
  std::complex<double> wave_plus;     ///< root of m mu^2 + b lambda mu + c^2 lambda = 0
  std::complex<double> wave_minus;
  double heat = 0;                    ///< -(kappa_a lambda + rho_b C_b W) / (rho_a C_a)
};

struct SpectrumResult {
  std::vector<ModeRates> modes;
  double parabolicity = 1;  ///< m = 1 - 2 k(theta_a) r at the equilibrium
  double q_prime0 = 0;      ///< Q'(0), the only linear coupling between the blocks
  double omega0 = 0;        ///< -max real part over all listed rates
  /// All rates of the listed modes, wave roots first, then heat rates.
  std::vector<std::complex<double>> rates() const;
  /// -max real part over the wave rates of `wave_modes` and the heat rates of `heat_modes`.
  double omega0_for(const std::vector<int>& wave_modes, const std::vector<int>& heat_modes) const;
};

/// Spectrum of the linearisation about an equilibrium, mode by mode. The
/// linearised operator is block lower triangular (the temperature feeds back
/// on the pressure only through terms vanishing at a constant pressure), so
/// its spectrum is the union of the wave and heat blocks.
SpectrumResult linearized_spectrum(const EquilibriumResult& eq, const Grid<double>& grid, const Model<double>& model,
                                   int modes);

/// Indices of the eigenmodes carrying a fraction above `rel_tol` of the
/// largest coefficient of `f` (trapezoidal projection).
std::vector<int> excited_modes(const Field& f, const std::vector<EigenPair<double>>& basis, const Grid<double>& grid,
                               double rel_tol = 1e-6);

// ---------------------------------------------------------------- decay fits

struct DecayFit {
  double omega = 0;      ///< fitted rate, the negated slope of log(signal)
  double C = 0;          ///< fitted prefactor
  double r_squared = 0;
  double window_start = 0, window_end = 0;
  std::size_t samples_used = 0;
  std::optional<double> omega0;         ///< spectral prediction for the excited modes
  std::optional<double> omega0_global;  ///< spectral prediction over all computed modes
  std::vector<double> times, signal;    ///< full series the fit was taken from
};

/// Least-squares fit of log(y) = log(C) - omega t over the samples after the
/// first `skip_fraction` of them. Needs >= 10 positive samples in the window.
/// Throws NonDecayingSignal when the slope is >= 0 with R^2 > 0.9.
DecayFit fit_decay(const std::vector<double>& t, const std::vector<double>& y, double skip_fraction = 0.2);

struct DecayNorms {
  bool include_h2 = true;  ///< L2 + H2-seminorm surrogate instead of plain L2
};

/// Signal |u - u*| + |v| + |theta - theta*| of every trajectory sample.
std::vector<double> decay_signal(const Trajectory<double>& traj, const EquilibriumResult& eq, const Grid<double>& grid,
                                 const DecayNorms& norms = {});

DecayFit fit_decay(const Trajectory<double>& traj, const EquilibriumResult& eq, const Grid<double>& grid,
                   const DecayNorms& norms = {}, double skip_fraction = 0.2);

// ----------------------------------------------------------------- smoothing

enum class ProbeField { Pressure, Temperature };

struct SmoothingOptions {
  double tau = 0.1;
  std::vector<double> dts{0.01, 0.005, 0.0025, 0.00125};
  ProbeField field = ProbeField::Pressure;
  NormKind norm = NormKind::Linf;
};

struct SmoothingLevel {
  double dt = 0;
  double d2_start = 0, d3_start = 0;  ///< one-sided differences at t = 0+
  double d2_tau = 0, d3_tau = 0;      ///< centred differences at t = tau
};

struct SmoothingReport {
  std::vector<SmoothingLevel> levels;
  /// Log-log slopes of each surrogate against 1/dt.
  double exponent_d2_start = 0, exponent_d3_start = 0, exponent_d2_tau = 0, exponent_d3_tau = 0;
  bool smoothing_confirmed = false;  ///< d3 exponent < 0.2 at tau and > 0.5 at 0+
};

/// Second and third time-difference surrogates of u (or theta) at t = 0+
/// and t = tau for a ladder of step sizes, each run on its own thread.
SmoothingReport smoothing_probe(const State<double>& s0, const Grid<double>& grid,
                                const BoundaryConditionSpec<double>& bc, const Model<double>& model,
                                const StepperConfig<double>& cfg, const SmoothingOptions& opt = {});

// --------------------------------------------------------------------- sweep

struct SweepOptions {
  double a_lo = 1e-3;
  double a_hi = 1.0;
  double rel_tol = 0.01;  ///< stop when (hi - lo) / hi < rel_tol
  int max_bisections = 60;
};

struct SweepEvaluation {
  double amplitude = 0;
  bool success = false;
  std::string failure;        ///< error kind, empty on success
  double failure_time = -1;
};

struct SweepReport {
  double t_end = 0;
  bool threshold_found = false;
  double delta_hat = 0;  ///< largest amplitude known to succeed
  double bracket_lo = 0, bracket_hi = 0;
  std::string failure_mode_above;  ///< failure kind at bracket_hi
  std::vector<SweepEvaluation> history;
  bool monotone = true;
  std::vector<std::string> monotonicity_violations;
};

using DataShape = std::function<State<double>(double amplitude)>;

/// Bisection for the largest amplitude whose run reaches t_end without
/// ParabolicityLost or NewtonDivergence. If even a_hi succeeds, the report
/// says no finite threshold was detected. Throws BracketInvalid if a_lo fails.
SweepReport smallness_sweep(const DataShape& data, double t_end, const Grid<double>& grid,
                            const BoundaryConditionSpec<double>& bc, const Model<double>& model,
                            const StepperConfig<double>& cfg, const SweepOptions& opt = {});

/// One sweep per final time, run concurrently.
std::vector<SweepReport> smallness_sweep(const DataShape& data, const std::vector<double>& t_ends,
                                         const Grid<double>& grid, const BoundaryConditionSpec<double>& bc,
                                         const Model<double>& model, const StepperConfig<double>& cfg,
                                         const SweepOptions& opt = {});

// ----------------------------------------------------------------------- MMS

struct MmsProblem {
  double lower = 0, upper = 3.14159265358979323846;  ///< 1D interval
  int j = 0, ell = 0;
  Model<double> model;  ///< forcing is supplied by the harness
  Expression u_exact;
  Expression theta_exact;
  double t_end = 1.0;
  StepperConfig<double> stepper;  ///< dt and scheme are set per level
};

struct MmsLadder {
  std::vector<int> nodes{33, 65, 129, 257};
  double spatial_dt = 1e-3;  ///< trapezoidal step for the spatial study
  int temporal_nodes = 65;
  std::vector<double> dts{0.1, 0.05, 0.025, 0.0125};
  TimeScheme temporal_scheme = TimeScheme::Trapezoidal;
  /// Use the discrete Laplacian of the exact nodal values in the temporal
  /// study's forcing, so the measured error is purely temporal.
  bool semi_discrete_temporal = true;
};

struct MmsLevel {
  int nodes = 0;
  double h = 0, dt = 0;
  double err_u = 0, err_theta = 0;
  double err() const { return err_u + err_theta; }
};

struct MmsReport {
  std::vector<MmsLevel> spatial, temporal;
  double spatial_order = 0, temporal_order = 0;
  double spatial_order_u = 0, spatial_order_theta = 0, temporal_order_u = 0, temporal_order_theta = 0;
};

/// Forcing (f_u, f_theta) making the closed forms exact for the continuous
/// equations, or (semi_discrete) for the spatially discretised ones.
Forcing<double> manufactured_forcing(const MmsProblem& p, const Grid<double>& grid, const Operators<double>* ops = nullptr);

/// Boundary data of the closed forms for closures (j, ell).
BoundaryConditionSpec<double> manufactured_boundary(const MmsProblem& p);

State<double> manufactured_state(const MmsProblem& p, const Grid<double>& grid, double t);

MmsReport mms_convergence(const MmsProblem& p, const MmsLadder& ladder = {});

/// Least-squares slope of log(y) against log(x).
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace wpsim
