#include "rsfpinn/physics.hpp"

#include <sstream>
#include <string>

namespace rsfpinn {

namespace {

using J = FieldJet<double>;

J in(double v, int dir) { return J::input(v, dir); }

std::string overflow_message(double exponent) {
  std::ostringstream os;
  os << "aging law exponent " << exponent << " exceeds " << kAgingExponentLimit;
  return os.str();
}

}  // namespace

AgingOverflow::AgingOverflow(double exponent) : std::overflow_error(overflow_message(exponent)) {}

void MaterialParams::validate() const {
  if (!(mu > 0.0) || !(rho > 0.0)) {
    throw std::invalid_argument("material parameters: mu and rho must be positive");
  }
}

void FrictionParams::validate() const {
  if (!(v0 > 0.0) || !(dc > 0.0) || !(sigma_n > 0.0) || !(depth_d > 0.0) || !(b > 0.0)) {
    throw std::invalid_argument("friction parameters: v0, dc, sigma_n, b and D must be positive");
  }
  if (depth_h < 0.0) {
    throw std::invalid_argument("friction parameters: H must be non-negative");
  }
  if (alpha_min > alpha_max) {
    throw std::invalid_argument("friction parameters: alpha_min exceeds alpha_max");
  }
}

double alpha_profile(double z, const FrictionParams& p) {
  if (z < p.depth_h) {
    return p.alpha_min;
  }
  if (z > p.depth_h + p.depth_d) {
    return p.alpha_max;
  }
  return (z - p.depth_h) * ((p.alpha_max - p.alpha_min) / p.depth_d) + p.alpha_min;
}

// ---------------------------------------------------------------------------

Manufactured1D::Manufactured1D(MaterialParams mat, FrictionParams fric)
    : mat_(mat), fric_(fric), c_(mat.wave_speed()) {
  mat_.validate();
  fric_.validate();
}

FieldJet<double> Manufactured1D::displacement(const Point& p) const {
  return displacement_jet(in(p[kCoordX], kCoordX), in(p[kCoordT], kCoordT));
}

FieldJet<double> Manufactured1D::state(double t) const {
  // u_x(0, t) and u_t(0, t) in closed form, differentiated in t by the jet.
  const J tt = in(t, kCoordT);
  const J q = 0.5 * (1.0 - c_ * tt);
  const J th = tanh(q);
  const J sech2 = 1.0 - th * th;
  const J ux = 0.5 * sech2;
  const J ut = -0.5 * c_ * sech2;
  return -(mat_.mu / fric_.sigma_n) * ux - fric_.a * log(abs(2.0 * ut) / fric_.v0);
}

double Manufactured1D::source(const Point& p) const {
  const J u = displacement(p);
  return u.dd[kCoordT] - c_ * c_ * u.dd[kCoordX];
}

double Manufactured1D::g0(double /*t*/) const { return 0.0; }

double Manufactured1D::g1(double t, double lx) const {
  const J u = displacement({lx, 0.0, t});
  return mat_.impedance() * u.d[kCoordT] + mat_.mu * u.d[kCoordX];
}

double Manufactured1D::h(double t) const {
  const J u = displacement({0.0, 0.0, t});
  const J psi = state(t);
  return psi.d[kCoordT] - aging_rhs(2.0 * u.d[kCoordT], psi.v, fric_);
}

SpatialFunction Manufactured1D::initial_displacement() const {
  const double c = c_;
  return [c](const J& x, const J& /*z*/) { return tanh(0.5 * (x - c * J(0.0) + 1.0)); };
}

SpatialFunction Manufactured1D::initial_velocity() const {
  const double c = c_;
  return [c](const J& x, const J& /*z*/) {
    const J th = tanh(0.5 * (x + 1.0));
    return -0.5 * c * (1.0 - th * th);
  };
}

// ---------------------------------------------------------------------------

Manufactured2D::Manufactured2D(MaterialParams mat, FrictionParams fric, Domain domain)
    : mat_(mat), fric_(fric), domain_(domain), c_(mat.wave_speed()) {
  mat_.validate();
  fric_.validate();
}

FieldJet<double> Manufactured2D::displacement(const Point& p) const {
  return displacement_jet(in(p[kCoordX], kCoordX), in(p[kCoordZ], kCoordZ), in(p[kCoordT], kCoordT));
}

double Manufactured2D::source(const Point& p) const {
  const J u = displacement(p);
  return u.dd[kCoordT] - c_ * c_ * (u.dd[kCoordX] + u.dd[kCoordZ]);
}

double Manufactured2D::g_fault(double z, double t) const {
  const J u = displacement({0.0, z, t});
  const double f = friction_coefficient_steady(2.0 * u.d[kCoordT], alpha(z), fric_);
  return -mat_.mu * u.d[kCoordX] - fric_.sigma_n * f;
}

double Manufactured2D::g_surface(double x, double t) const {
  const J u = displacement({x, 0.0, t});
  return -mat_.mu * u.d[kCoordZ];
}

double Manufactured2D::g_remote(double z, double t) const {
  const J u = displacement({domain_.lx, z, t});
  return mat_.impedance() * u.d[kCoordT] + mat_.mu * u.d[kCoordX];
}

double Manufactured2D::g_depth(double x, double t) const {
  const J u = displacement({x, domain_.lz, t});
  return mat_.impedance() * u.d[kCoordT] + mat_.mu * u.d[kCoordZ];
}

SpatialFunction Manufactured2D::initial_displacement() const {
  return [](const J& x, const J& z) { return tanh((x + z) / 20.0); };
}

SpatialFunction Manufactured2D::initial_velocity() const {
  const double c = c_;
  return [c](const J& x, const J& z) {
    const J th = tanh((x + z) / 20.0);
    return (c / 20.0) * (1.0 - th * th);
  };
}

Manufactured1D mms_1d(const MaterialParams& mat, const FrictionParams& fric) { return {mat, fric}; }

Manufactured2D mms_2d(const MaterialParams& mat, const FrictionParams& fric, const Domain& domain) {
  return {mat, fric, domain};
}

}  // namespace rsfpinn
