#pragma once

// Component mean-square losses for the 1D and 2D problems.
//
// Residuals are written once as templates over the scalar type and shared by
// three routes: exact manufactured fields (double), scalar tape evaluation of
// whole networks (Var, used as an oracle), and the batched training path in
// which network jets come from FieldPass and only the residual algebra is
// recorded on a tape.

#include <optional>
#include <span>
#include <string_view>

#include "rsfpinn/autodiff.hpp"
#include "rsfpinn/network.hpp"
#include "rsfpinn/physics.hpp"
#include "rsfpinn/sampling.hpp"

namespace rsfpinn {

enum class Enforcement { soft, hard };
enum class ProblemMode { forward, inverse };

std::string_view to_string(Enforcement e);
std::string_view to_string(ProblemMode m);
Enforcement parse_enforcement(std::string_view s);
ProblemMode parse_mode(std::string_view s);

struct Model1D {
  TrialFunction displacement;  ///< inputs (x, t)
  TrialFunction state;         ///< input t
};

struct Model2D {
  TrialFunction displacement;            ///< inputs (x, z, t)
  std::optional<TrialFunction> friction;  ///< input z; inverse problems only
};

/// Residual of one 1D condition at `p` given the trial displacement jet `u`
/// (derivatives in x and t) and trial state jet `psi` (derivative in t).
template <class S>
S residual_1d(LossTag tag, const Point& p, const FieldJet<S>& u, const FieldJet<S>& psi, const Manufactured1D& mms) {
  const MaterialParams& m = mms.material();
  const FrictionParams& f = mms.friction();
  const double c = m.wave_speed();
  const double t = p[kCoordT];
  switch (tag) {
    case LossTag::pde:
      return u.dd[kCoordT] - (c * c) * u.dd[kCoordX] - mms.source(p);
    case LossTag::fault:
      return -m.mu * u.d[kCoordX] - friction_strength(S(2.0 * u.d[kCoordT]), psi.v, f) - mms.g0(t);
    case LossTag::remote:
      return m.impedance() * u.d[kCoordT] + m.mu * u.d[kCoordX] - mms.g1(t, p[kCoordX]);
    case LossTag::ic_disp:
      return u.v - mms.displacement({p[kCoordX], 0.0, 0.0}).v;
    case LossTag::ic_vel:
      return u.d[kCoordT] - mms.displacement({p[kCoordX], 0.0, 0.0}).d[kCoordT];
    case LossTag::state:
      return psi.d[kCoordT] - aging_rhs(S(2.0 * u.d[kCoordT]), psi.v, f) - mms.h(t);
    case LossTag::ic_state:
      return psi.v - mms.psi0();
    default:
      throw std::invalid_argument("residual_1d: tag not part of the 1D problem");
  }
}

/// Residual of one 2D condition. `alpha` is the friction parameter at the
/// point's depth: the exact profile for forward problems, the friction
/// network output for inverse problems. It only enters the fault condition.
template <class S>
S residual_2d(LossTag tag, const Point& p, const FieldJet<S>& u, const S& alpha, const Manufactured2D& mms) {
  const MaterialParams& m = mms.material();
  const FrictionParams& f = mms.friction();
  const double c = m.wave_speed();
  const double x = p[kCoordX];
  const double z = p[kCoordZ];
  const double t = p[kCoordT];
  switch (tag) {
    case LossTag::pde:
      return u.dd[kCoordT] - (c * c) * (u.dd[kCoordX] + u.dd[kCoordZ]) - mms.source(p);
    case LossTag::fault: {
      const S fric = friction_coefficient_steady(S(2.0 * u.d[kCoordT]), alpha, f);
      return -m.mu * u.d[kCoordX] - f.sigma_n * fric - mms.g_fault(z, t);
    }
    case LossTag::surface:
      return -m.mu * u.d[kCoordZ] - mms.g_surface(x, t);
    case LossTag::remote:
      return m.impedance() * u.d[kCoordT] + m.mu * u.d[kCoordX] - mms.g_remote(z, t);
    case LossTag::depth:
      return m.impedance() * u.d[kCoordT] + m.mu * u.d[kCoordZ] - mms.g_depth(x, t);
    case LossTag::ic_disp:
      return u.v - mms.displacement({x, z, 0.0}).v;
    case LossTag::ic_vel:
      return u.d[kCoordT] - mms.displacement({x, z, 0.0}).d[kCoordT];
    default:
      throw std::invalid_argument("residual_2d: tag not part of the 2D problem");
  }
}

/// Mean square of residual_1d over `points`. `u(p)` and `psi(p)` supply the
/// trial jets in scalar type S.
template <class S, class UFn, class PsiFn>
S loss_1d(LossTag tag, std::span<const Point> points, UFn&& u, PsiFn&& psi, const Manufactured1D& mms) {
  if (points.empty()) {
    throw std::invalid_argument("loss_1d: no collocation points");
  }
  S acc(0.0);
  for (const Point& p : points) {
    const S r = residual_1d<S>(tag, p, u(p), psi(p), mms);
    acc = acc + r * r;
  }
  return acc / static_cast<double>(points.size());
}

/// Mean square of residual_2d over `points` for the forward problem:
/// alpha is taken from the exact depth profile.
template <class S, class UFn>
S loss_2d_forward(LossTag tag, std::span<const Point> points, UFn&& u, const Manufactured2D& mms) {
  if (points.empty()) {
    throw std::invalid_argument("loss_2d_forward: no collocation points");
  }
  S acc(0.0);
  for (const Point& p : points) {
    const S r = residual_2d<S>(tag, p, u(p), S(mms.alpha(p[kCoordZ])), mms);
    acc = acc + r * r;
  }
  return acc / static_cast<double>(points.size());
}

/// Modified fault loss of the inverse problem: `alpha(z)` is the friction
/// network, fed the same depth as the displacement.
template <class S, class UFn, class AFn>
S loss_2d_inverse_fault(std::span<const Point> points, UFn&& u, AFn&& alpha, const Manufactured2D& mms) {
  if (points.empty()) {
    throw std::invalid_argument("loss_2d_inverse_fault: no collocation points");
  }
  S acc(0.0);
  for (const Point& p : points) {
    const S r = residual_2d<S>(LossTag::fault, p, u(p), alpha(p[kCoordZ]), mms);
    acc = acc + r * r;
  }
  return acc / static_cast<double>(points.size());
}

/// Destination of parameter gradients for the batched path. An empty span
/// means the corresponding network is held fixed.
struct ParamGrads {
  std::span<double> displacement;
  std::span<double> state;
  std::span<double> friction;
};

/// Batched component loss of the 1D problem; gradients are accumulated into
/// `grads` when given.
double component_loss_1d(LossTag tag, std::span<const Point> points, const Model1D& model,
                         const Manufactured1D& mms, const ParamGrads* grads = nullptr);

/// Batched component loss of the 2D problem. When `model.friction` is set
/// the fault component is the modified (inverse) fault loss.
double component_loss_2d(LossTag tag, std::span<const Point> points, const Model2D& model,
                         const Manufactured2D& mms, const ParamGrads* grads = nullptr);

}  // namespace rsfpinn
