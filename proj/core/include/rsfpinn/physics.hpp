#pragma once

// Material and friction parameters, rate-and-state friction laws, the
// depth-dependent steady-state friction parameter, and manufactured
// solutions with their derived source and boundary data.
//
// Units: km, s, GPa. Slip rates enter logarithms through |V|.

#include <cmath>
#include <stdexcept>

#include "rsfpinn/autodiff.hpp"
#include "rsfpinn/network.hpp"

namespace rsfpinn {

struct MaterialParams {
  double mu = 32.0;   ///< shear modulus, GPa
  double rho = 2.67;  ///< density, GPa s^2 / km^2

  double wave_speed() const { return std::sqrt(mu / rho); }
  double impedance() const { return std::sqrt(mu * rho); }
  void validate() const;
};

struct FrictionParams {
  double a = 0.015;           ///< direct effect
  double b = 0.02;            ///< evolution effect
  double dc = 2e-3;           ///< characteristic slip distance, km
  double f0 = 0.6;            ///< reference friction coefficient
  double v0 = 1e-9;           ///< reference slip rate, km/s
  double sigma_n = 0.05;      ///< effective normal stress, GPa
  double alpha_min = -0.005;  ///< shallow (velocity weakening) a - b
  double alpha_max = 0.015;   ///< deep (velocity strengthening) a - b
  double depth_h = 12.0;      ///< seismogenic depth H, km
  double depth_d = 5.0;       ///< transition width D, km

  void validate() const;
};

/// Raised when the aging-law exponent would overflow.
class AgingOverflow : public std::overflow_error {
 public:
  explicit AgingOverflow(double exponent);
};

inline constexpr double kAgingExponentLimit = 700.0;

namespace detail {

template <class S>
S log_checked(const S& x) {
  if constexpr (std::is_same_v<S, double>) {
    return checked_log(x);
  } else {
    return log(x);
  }
}

template <class S>
S abs_of(const S& x) {
  using std::abs;
  return abs(x);
}

template <class S>
S exp_of(const S& x) {
  using std::exp;
  return exp(x);
}

}  // namespace detail

/// f = a ln(|V| / V0) + psi
template <class S>
S friction_coefficient_rsf(const S& slip_rate, const S& psi, const FrictionParams& p) {
  return p.a * detail::log_checked(detail::abs_of(slip_rate) / p.v0) + psi;
}

/// F = sigma_n f(V, psi)
template <class S>
S friction_strength(const S& slip_rate, const S& psi, const FrictionParams& p) {
  return p.sigma_n * friction_coefficient_rsf(slip_rate, psi, p);
}

/// Aging law G(V, psi) = (b V0 / Dc) exp((f0 - psi) / b - |V| / V0).
template <class S>
S aging_rhs(const S& slip_rate, const S& psi, const FrictionParams& p) {
  const S exponent = (p.f0 - psi) / p.b - detail::abs_of(slip_rate) / p.v0;
  if (value_of(exponent) > kAgingExponentLimit) {
    throw AgingOverflow(value_of(exponent));
  }
  return (p.b * p.v0 / p.dc) * detail::exp_of(exponent);
}

/// Steady-state friction f = f0 + alpha ln(|V| / V0).
template <class S, class A>
S friction_coefficient_steady(const S& slip_rate, const A& alpha, const FrictionParams& p) {
  return p.f0 + alpha * detail::log_checked(detail::abs_of(slip_rate) / p.v0);
}

template <class T, int N>
double value_of(const Jet<T, N>& j) {
  return value_of(j.v);
}

/// Piecewise-linear a - b profile in depth.
double alpha_profile(double z, const FrictionParams& p);

/// Rectangular space-time domain. One-dimensional problems ignore lz.
struct Domain {
  double lx = 1.0;
  double lz = 0.0;
  double t_final = 1.0;
};

/// Exact displacement u = tanh(0.5 (x - c t + 1)) and the state psi that
/// makes the 1D problem with the aging law consistent.
class Manufactured1D {
 public:
  Manufactured1D(MaterialParams mat, FrictionParams fric);

  const MaterialParams& material() const { return mat_; }
  const FrictionParams& friction() const { return fric_; }

  template <class S>
  Jet<S, 3> displacement_jet(const Jet<S, 3>& x, const Jet<S, 3>& t) const {
    using std::tanh;
    return tanh(0.5 * (x - c_ * t + 1.0));
  }
  /// u with derivatives in (x, t); the z slot is unused.
  FieldJet<double> displacement(const Point& p) const;
  /// psi(t) with derivatives in t (slot kCoordT).
  FieldJet<double> state(double t) const;

  double source(const Point& p) const;  ///< s = u_tt - c^2 u_xx
  double g0(double t) const;            ///< fault data, identically zero
  double g1(double t, double lx = 1.0) const;  ///< Z u_t + mu u_x at x = lx
  double h(double t) const;             ///< psi_t - G(2 u_t(0, t), psi)
  double psi0() const { return state(0.0).v; }

  SpatialFunction initial_displacement() const;
  SpatialFunction initial_velocity() const;

 private:
  MaterialParams mat_;
  FrictionParams fric_;
  double c_;
};

/// Exact displacement u = tanh((x + z + c t) / 20) for the antiplane problem
/// and alpha(z) from the depth profile.
class Manufactured2D {
 public:
  Manufactured2D(MaterialParams mat, FrictionParams fric, Domain domain);

  const MaterialParams& material() const { return mat_; }
  const FrictionParams& friction() const { return fric_; }
  const Domain& domain() const { return domain_; }

  template <class S>
  Jet<S, 3> displacement_jet(const Jet<S, 3>& x, const Jet<S, 3>& z, const Jet<S, 3>& t) const {
    using std::tanh;
    return tanh((x + z + c_ * t) / 20.0);
  }
  FieldJet<double> displacement(const Point& p) const;
  double alpha(double z) const { return alpha_profile(z, fric_); }

  double source(const Point& p) const;  ///< S = u_tt - c^2 (u_xx + u_zz)
  double g_fault(double z, double t) const;
  double g_surface(double x, double t) const;
  double g_remote(double z, double t) const;
  double g_depth(double x, double t) const;

  SpatialFunction initial_displacement() const;
  SpatialFunction initial_velocity() const;

 private:
  MaterialParams mat_;
  FrictionParams fric_;
  Domain domain_;
  double c_;
};

Manufactured1D mms_1d(const MaterialParams& mat = {}, const FrictionParams& fric = {});
Manufactured2D mms_2d(const MaterialParams& mat = {}, const FrictionParams& fric = {},
                      const Domain& domain = Domain{25.0, 25.0, 1.0});

}  // namespace rsfpinn
