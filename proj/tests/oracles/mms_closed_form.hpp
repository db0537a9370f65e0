#pragma once

// Hand-derived forcing for u = sin x cos t, theta = theta_a + 0.1 sin x e^{-t}
// with constant c, b, k and Q(v) = C v^2.

#include <cmath>

namespace oracle {

struct MmsConstants {
  double c = 1, b = 1, k = 0.1, C = 1;
  double capacity = 1, kappa = 1, beta = 1;
};

inline double mms_force_u(double t, double x, const MmsConstants& m) {
  const double u = std::sin(x) * std::cos(t);
  const double utt = -std::sin(x) * std::cos(t);
  const double lap_u = -std::sin(x) * std::cos(t);
  const double v = -std::sin(x) * std::sin(t);
  const double lap_v = std::sin(x) * std::sin(t);
  return (1 - 2 * m.k * u) * utt - m.c * m.c * lap_u - m.b * lap_v - 2 * m.k * v * v;
}

inline double mms_force_theta(double t, double x, const MmsConstants& m) {
  const double d = 0.1 * std::sin(x) * std::exp(-t);  // theta - theta_a
  const double v = -std::sin(x) * std::sin(t);
  return m.capacity * (-d) - m.kappa * (-d) + m.beta * d - m.C * v * v;
}

}  // namespace oracle
