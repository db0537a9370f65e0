#pragma once

// Fourier-sine series for the linear heat problem on (0, pi) with zero
// Dirichlet data and a hat-shaped initial perturbation.

#include <cmath>

namespace oracle {

/// hat(x) = max(0, 1 - |x - c| / w); its sine coefficients are
/// b_n = (2/pi) * 2 sin(n c) (1 - cos(n w)) / (n^2 w).
inline double hat_sine_coefficient(int n, double c, double w) {
  return 2 / M_PI * 2 * std::sin(n * c) * (1 - std::cos(n * w)) / (n * n * w);
}

/// theta - theta_a at (t, x) for rho C theta_t = kappa theta_xx - beta theta.
/// `derivative` selects d^k/dt^k of the series.
inline double heat_hat_solution(double t, double x, double c, double w, double kappa, double beta, double capacity,
                                int derivative = 0, int terms = 4000) {
  double sum = 0;
  for (int n = 1; n <= terms; ++n) {
    const double rate = (kappa * n * n + beta) / capacity;
    sum += hat_sine_coefficient(n, c, w) * std::pow(-rate, derivative) * std::exp(-rate * t) * std::sin(n * x);
  }
  return sum;
}

}  // namespace oracle
