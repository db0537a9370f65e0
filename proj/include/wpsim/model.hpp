#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "wpsim/errors.hpp"
#include "wpsim/grid.hpp"

namespace wpsim {

/// Constants of the bioheat equation.
template <typename Scalar>
struct PhysicalParams {
  Scalar rho_a = 1;    ///< ambient density
  Scalar C_a = 1;      ///< ambient heat capacity
  Scalar kappa_a = 1;  ///< thermal conductivity
  Scalar rho_b = 1;    ///< blood density
  Scalar C_b = 1;      ///< blood heat capacity
  Scalar W = 1;        ///< perfusion rate, may be zero
  Scalar theta_a = 1;  ///< ambient temperature

  Scalar capacity() const { return rho_a * C_a; }
  Scalar perfusion() const { return rho_b * C_b * W; }

  /// Throws std::invalid_argument naming the first offending field.
  void validate() const {
    auto positive = [](Scalar v, const char* name) {
      if (!(v > 0)) throw std::invalid_argument(std::string(name) + " must be > 0");
    };
    positive(rho_a, "rho_a");
    positive(C_a, "C_a");
    positive(kappa_a, "kappa_a");
    positive(rho_b, "rho_b");
    positive(C_b, "C_b");
    positive(theta_a, "theta_a");
    if (!(W >= 0)) throw std::invalid_argument("W must be >= 0");
  }
};

/// A scalar coefficient function of temperature together with its derivative.
template <typename Scalar>
class Coefficient {
 public:
  enum class Kind { Constant, Affine, Exponential, Table, Custom };

  static Coefficient constant(Scalar a) { return Coefficient(Kind::Constant, a, 0); }
  /// a + b * theta
  static Coefficient affine(Scalar a, Scalar b) { return Coefficient(Kind::Affine, a, b); }
  /// a * exp(b * theta)
  static Coefficient exponential(Scalar a, Scalar b) { return Coefficient(Kind::Exponential, a, b); }
  /// Piecewise-linear interpolation of (theta, value) samples, held constant
  /// outside the table.
  static Coefficient table(std::vector<Scalar> thetas, std::vector<Scalar> values) {
    if (thetas.size() < 2 || thetas.size() != values.size())
      throw std::invalid_argument("coefficient table needs >= 2 matching (theta, value) rows");
    for (std::size_t i = 1; i < thetas.size(); ++i)
      if (!(thetas[i] > thetas[i - 1])) throw std::invalid_argument("coefficient table must be strictly increasing in theta");
    Coefficient c(Kind::Table, 0, 0);
    c.xs_ = std::move(thetas);
    c.ys_ = std::move(values);
    return c;
  }
  /// Arbitrary function; without a derivative, a central difference is used.
  static Coefficient custom(std::function<Scalar(Scalar)> f, std::function<Scalar(Scalar)> df = {}) {
    Coefficient c(Kind::Custom, 0, 0);
    c.f_ = std::move(f);
    c.df_ = std::move(df);
    return c;
  }

  Kind kind() const { return kind_; }
  Scalar a() const { return a_; }
  Scalar b() const { return b_; }

  Scalar operator()(Scalar theta) const {
    switch (kind_) {
      case Kind::Constant: return a_;
      case Kind::Affine: return a_ + b_ * theta;
      case Kind::Exponential: return a_ * std::exp(b_ * theta);
      case Kind::Table: return interpolate(theta);
      case Kind::Custom: return f_(theta);
    }
    return 0;
  }

  Scalar derivative(Scalar theta) const {
    switch (kind_) {
      case Kind::Constant: return 0;
      case Kind::Affine: return b_;
      case Kind::Exponential: return a_ * b_ * std::exp(b_ * theta);
      case Kind::Custom:
        if (df_) return df_(theta);
        [[fallthrough]];
      case Kind::Table: {
        const Scalar step = Scalar(1e-6) * (Scalar(1) + std::abs(theta));
        return ((*this)(theta + step) - (*this)(theta - step)) / (Scalar(2) * step);
      }
    }
    return 0;
  }

  /// True when the function does not depend on theta.
  bool is_constant() const { return kind_ == Kind::Constant || (kind_ == Kind::Affine && b_ == 0); }

  Vector<Scalar> map(const Vector<Scalar>& theta) const { return theta.unaryExpr([this](Scalar t) { return (*this)(t); }); }
  Vector<Scalar> map_derivative(const Vector<Scalar>& theta) const {
    return theta.unaryExpr([this](Scalar t) { return derivative(t); });
  }

 private:
  Coefficient(Kind k, Scalar a, Scalar b) : kind_(k), a_(a), b_(b) {}

  Scalar interpolate(Scalar t) const {
    if (t <= xs_.front()) return ys_.front();
    if (t >= xs_.back()) return ys_.back();
    const auto it = std::upper_bound(xs_.begin(), xs_.end(), t);
    const std::size_t i = static_cast<std::size_t>(it - xs_.begin());
    const Scalar s = (t - xs_[i - 1]) / (xs_[i] - xs_[i - 1]);
    return ys_[i - 1] + s * (ys_[i] - ys_[i - 1]);
  }

  Kind kind_;
  Scalar a_, b_;
  std::vector<Scalar> xs_, ys_;
  std::function<Scalar(Scalar)> f_, df_;
};

/// Sound speed c, sound diffusivity b and nonlinearity parameter k.
template <typename Scalar>
struct CoefficientSet {
  Coefficient<Scalar> c = Coefficient<Scalar>::constant(1);
  Coefficient<Scalar> b = Coefficient<Scalar>::constant(1);
  Coefficient<Scalar> k = Coefficient<Scalar>::constant(0);
};

/// Acoustic heating term Q(u_t).
template <typename Scalar>
class SourceModel {
 public:
  enum class Kind { Zero, PointwiseQuadratic, TimeAveragedQuadratic, CustomTable };

  static SourceModel zero() { return SourceModel(Kind::Zero, 0, 0); }
  /// Q(v) = C v^2
  static SourceModel pointwise_quadratic(Scalar C) { return SourceModel(Kind::PointwiseQuadratic, C, 0); }
  /// Q = (C / T) int_0^T v^2 dt, realised in two passes (see timestepper).
  static SourceModel time_averaged_quadratic(Scalar C, Scalar T_avg) {
    if (!(T_avg > 0)) throw std::invalid_argument("T_avg must be > 0");
    return SourceModel(Kind::TimeAveragedQuadratic, C, T_avg);
  }
  /// Q(v) by linear interpolation of (v, Q) samples, clamped outside.
  static SourceModel table(std::vector<Scalar> vs, std::vector<Scalar> qs) {
    SourceModel s(Kind::CustomTable, 0, 0);
    s.table_ = Coefficient<Scalar>::table(std::move(vs), std::move(qs));
    return s;
  }

  Kind kind() const { return kind_; }
  Scalar amplitude() const { return C_; }
  Scalar averaging_horizon() const { return T_avg_; }

  /// Pointwise law Q(v). For the time-averaged kind this is the first-pass
  /// surrogate C v^2.
  Scalar operator()(Scalar v) const {
    switch (kind_) {
      case Kind::Zero: return 0;
      case Kind::PointwiseQuadratic:
      case Kind::TimeAveragedQuadratic: return C_ * v * v;
      case Kind::CustomTable: return (*table_)(v);
    }
    return 0;
  }
  Scalar derivative(Scalar v) const {
    switch (kind_) {
      case Kind::Zero: return 0;
      case Kind::PointwiseQuadratic:
      case Kind::TimeAveragedQuadratic: return Scalar(2) * C_ * v;
      case Kind::CustomTable: return table_->derivative(v);
    }
    return 0;
  }

  /// Nodal source. Once a time-averaged field has been frozen it replaces the
  /// pointwise law and no longer depends on v.
  Vector<Scalar> evaluate(const Vector<Scalar>& v) const {
    if (frozen_) return *frozen_;
    return v.unaryExpr([this](Scalar s) { return (*this)(s); });
  }
  Vector<Scalar> evaluate_derivative(const Vector<Scalar>& v) const {
    if (frozen_) return Vector<Scalar>::Zero(v.size());
    return v.unaryExpr([this](Scalar s) { return derivative(s); });
  }

  void freeze(Vector<Scalar> field) { frozen_ = std::move(field); }
  bool frozen() const { return frozen_.has_value(); }
  const Vector<Scalar>& frozen_field() const { return *frozen_; }

  /// Q evaluated on the zero field, which the theory requires to vanish.
  Scalar at_zero() const { return (*this)(Scalar(0)); }

 private:
  SourceModel(Kind k, Scalar C, Scalar T) : kind_(k), C_(C), T_avg_(T) {
    if (!(C >= 0)) throw std::invalid_argument("source amplitude C must be >= 0");
  }
  Kind kind_;
  Scalar C_, T_avg_;
  std::optional<Coefficient<Scalar>> table_;
  std::optional<Vector<Scalar>> frozen_;
};

/// Optional manufactured forcing: fills (f_u, f_theta) on all nodes at time t.
template <typename Scalar>
using Forcing = std::function<void(Scalar t, Vector<Scalar>& f_u, Vector<Scalar>& f_theta)>;

/// Everything that defines the PDE apart from geometry and boundary data.
template <typename Scalar>
struct Model {
  PhysicalParams<Scalar> params;
  CoefficientSet<Scalar> coeffs;
  SourceModel<Scalar> source = SourceModel<Scalar>::zero();
  Scalar m_min = Scalar(1e-6);  ///< parabolicity guard
  Scalar b0 = 0;                ///< declared lower bound for b over the temperature range
  Forcing<Scalar> forcing;
};

/// m = 1 - 2 k(theta) u, the coefficient of u_tt once (u^2)_tt is expanded.
template <typename Scalar>
Vector<Scalar> parabolicity_factor(const Vector<Scalar>& u, const Vector<Scalar>& theta,
                                   const CoefficientSet<Scalar>& coeffs) {
  return (Scalar(1) - Scalar(2) * coeffs.k.map(theta).array() * u.array()).matrix();
}

/// Throws ParabolicityLost at the node with the smallest factor if it is
/// at or below the guard.
template <typename Scalar>
void check_parabolicity(const Vector<Scalar>& m, Scalar m_min) {
  if (m.size() == 0) return;
  Eigen::Index at = 0;
  const Scalar lo = m.minCoeff(&at);
  if (!(lo > m_min)) throw ParabolicityLost(static_cast<std::size_t>(at), static_cast<double>(lo));
}

/// u_tt = (c^2 Delta u + b Delta v + 2 k v^2 [+ f]) / (1 - 2 k u), nodewise.
template <typename Scalar>
Vector<Scalar> westervelt_accel(const Vector<Scalar>& u, const Vector<Scalar>& v, const Vector<Scalar>& theta,
                                const Vector<Scalar>& lap_u, const Vector<Scalar>& lap_v,
                                const CoefficientSet<Scalar>& coeffs, Scalar m_min = Scalar(1e-6),
                                const Vector<Scalar>* forcing = nullptr) {
  const Vector<Scalar> m = parabolicity_factor(u, theta, coeffs);
  check_parabolicity(m, m_min);
  const Vector<Scalar> c = coeffs.c.map(theta);
  const Vector<Scalar> k = coeffs.k.map(theta);
  Vector<Scalar> rhs = (c.array().square() * lap_u.array() + coeffs.b.map(theta).array() * lap_v.array() +
                        Scalar(2) * k.array() * v.array().square())
                           .matrix();
  if (forcing) rhs += *forcing;
  return rhs.cwiseQuotient(m);
}

/// theta_t = (kappa_a Delta theta - rho_b C_b W (theta - theta_a) + Q(v) [+ f]) / (rho_a C_a).
template <typename Scalar>
Vector<Scalar> pennes_rate(const Vector<Scalar>& theta, const Vector<Scalar>& v, const Vector<Scalar>& lap_theta,
                           const PhysicalParams<Scalar>& params, const SourceModel<Scalar>& src,
                           const Vector<Scalar>* forcing = nullptr) {
  Vector<Scalar> r = params.kappa_a * lap_theta -
                     params.perfusion() * (theta.array() - params.theta_a).matrix() + src.evaluate(v);
  if (forcing) r += *forcing;
  return r / params.capacity();
}

}  // namespace wpsim
