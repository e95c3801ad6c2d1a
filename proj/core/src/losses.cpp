#include "rsfpinn/losses.hpp"

#include <string>

namespace rsfpinn {

std::string_view to_string(Enforcement e) { return e == Enforcement::soft ? "soft" : "hard"; }
std::string_view to_string(ProblemMode m) { return m == ProblemMode::forward ? "forward" : "inverse"; }

Enforcement parse_enforcement(std::string_view s) {
  if (s == "soft") return Enforcement::soft;
  if (s == "hard") return Enforcement::hard;
  throw std::invalid_argument("enforcement must be 'soft' or 'hard', got '" + std::string(s) + "'");
}

ProblemMode parse_mode(std::string_view s) {
  if (s == "forward") return ProblemMode::forward;
  if (s == "inverse") return ProblemMode::inverse;
  throw std::invalid_argument("mode must be 'forward' or 'inverse', got '" + std::string(s) + "'");
}

namespace {

struct DirSpec {
  std::vector<int> dirs;
  bool second = false;
};

DirSpec displacement_dirs(LossTag tag, int dimension) {
  switch (tag) {
    case LossTag::pde:
      return dimension == 1 ? DirSpec{{kCoordX, kCoordT}, true} : DirSpec{{kCoordX, kCoordZ, kCoordT}, true};
    case LossTag::fault:
    case LossTag::remote:
      return {{kCoordX, kCoordT}, false};
    case LossTag::surface:
      return {{kCoordZ}, false};
    case LossTag::depth:
      return {{kCoordZ, kCoordT}, false};
    case LossTag::ic_vel:
    case LossTag::state:
      return {{kCoordT}, false};
    case LossTag::ic_disp:
    case LossTag::ic_state:
      return {{}, false};
  }
  return {};
}

/// Tape leaves standing for the entries of raw network jets, one group per
/// point, so that their adjoints can be handed back to a FieldPass.
class Leaves {
 public:
  Leaves(std::vector<int> dirs, bool second, std::size_t points)
      : dirs_(std::move(dirs)), second_(second), stride_(1 + dirs_.size() * (second ? 2 : 1)) {
    idx_.reserve(points * stride_);
  }

  FieldJet<Var> record(Tape& tape, const FieldJet<double>& raw) {
    FieldJet<Var> j(push(tape, raw.v));
    for (int c : dirs_) {
      j.d[c] = push(tape, raw.d[c]);
    }
    if (second_) {
      for (int c : dirs_) {
        j.dd[c] = push(tape, raw.dd[c]);
      }
    }
    return j;
  }

  void scatter(const std::vector<double>& adj, FieldPass& pass) const {
    pass.zero_adjoint();
    const std::size_t n = idx_.size() / stride_;
    for (std::size_t p = 0; p < n; ++p) {
      const std::uint32_t* ix = &idx_[p * stride_];
      FieldJet<double> a(adj[ix[0]]);
      std::size_t k = 1;
      for (int c : dirs_) {
        a.d[c] = adj[ix[k++]];
      }
      if (second_) {
        for (int c : dirs_) {
          a.dd[c] = adj[ix[k++]];
        }
      }
      pass.add_adjoint(p, a);
    }
  }

 private:
  Var push(Tape& tape, double v) {
    Var x = tape.variable(v);
    idx_.push_back(x.index());
    return x;
  }

  std::vector<int> dirs_;
  bool second_;
  std::size_t stride_;
  std::vector<std::uint32_t> idx_;
};

bool wants(const ParamGrads* grads, std::span<double> ParamGrads::*member) {
  return grads != nullptr && !(grads->*member).empty();
}

}  // namespace

double component_loss_1d(LossTag tag, std::span<const Point> points, const Model1D& model,
                         const Manufactured1D& mms, const ParamGrads* grads) {
  if (points.empty()) {
    throw std::invalid_argument("component_loss_1d: no collocation points");
  }
  const bool state_tag = tag == LossTag::state || tag == LossTag::ic_state;
  const bool needs_u = tag != LossTag::ic_state;
  const bool needs_psi = state_tag || tag == LossTag::fault;
  const bool grad_u = !state_tag && wants(grads, &ParamGrads::displacement);
  const bool grad_psi = state_tag && wants(grads, &ParamGrads::state);

  const DirSpec ud = displacement_dirs(tag, 1);
  const DirSpec sd = tag == LossTag::state ? DirSpec{{kCoordT}, false} : DirSpec{{}, false};

  FieldPass upass;
  FieldPass spass;
  if (needs_u) upass.forward(model.displacement, points, ud.dirs, ud.second);
  if (needs_psi) spass.forward(model.state, points, sd.dirs, sd.second);

  Tape tape;
  tape.reserve(points.size() * 96);
  Leaves uleaves(ud.dirs, ud.second, grad_u ? points.size() : 0);
  Leaves sleaves(sd.dirs, sd.second, grad_psi ? points.size() : 0);

  Var acc(0.0);
  for (std::size_t i = 0; i < points.size(); ++i) {
    const Point& p = points[i];
    FieldJet<Var> u;
    if (needs_u) {
      const FieldJet<double> raw = upass.raw(i);
      u = model.displacement.apply<Var>(p, grad_u ? uleaves.record(tape, raw) : FieldJet<Var>(raw));
    }
    FieldJet<Var> psi;
    if (needs_psi) {
      const FieldJet<double> raw = spass.raw(i);
      psi = model.state.apply<Var>(p, grad_psi ? sleaves.record(tape, raw) : FieldJet<Var>(raw));
    }
    const Var r = residual_1d<Var>(tag, p, u, psi, mms);
    acc = acc + r * r;
  }
  const Var loss = acc / static_cast<double>(points.size());

  if (grad_u || grad_psi) {
    const std::vector<double> adj = tape.adjoints(loss);
    if (grad_u) {
      uleaves.scatter(adj, upass);
      upass.backward(grads->displacement);
    }
    if (grad_psi) {
      sleaves.scatter(adj, spass);
      spass.backward(grads->state);
    }
  }
  return loss.value();
}

double component_loss_2d(LossTag tag, std::span<const Point> points, const Model2D& model,
                         const Manufactured2D& mms, const ParamGrads* grads) {
  if (points.empty()) {
    throw std::invalid_argument("component_loss_2d: no collocation points");
  }
  const bool inverse_fault = tag == LossTag::fault && model.friction.has_value();
  const bool grad_u = wants(grads, &ParamGrads::displacement);
  const bool grad_alpha = inverse_fault && wants(grads, &ParamGrads::friction);

  const DirSpec ud = displacement_dirs(tag, 2);
  FieldPass upass;
  upass.forward(model.displacement, points, ud.dirs, ud.second);
  FieldPass apass;
  if (inverse_fault) {
    apass.forward(*model.friction, points, {}, false);
  }

  Tape tape;
  tape.reserve(points.size() * 128);
  Leaves uleaves(ud.dirs, ud.second, grad_u ? points.size() : 0);
  Leaves aleaves({}, false, grad_alpha ? points.size() : 0);

  Var acc(0.0);
  for (std::size_t i = 0; i < points.size(); ++i) {
    const Point& p = points[i];
    const FieldJet<double> raw = upass.raw(i);
    const FieldJet<Var> u = model.displacement.apply<Var>(p, grad_u ? uleaves.record(tape, raw) : FieldJet<Var>(raw));
    Var alpha;
    if (inverse_fault) {
      const FieldJet<double> araw = apass.raw(i);
      alpha = model.friction->apply<Var>(p, grad_alpha ? aleaves.record(tape, araw) : FieldJet<Var>(araw)).v;
    } else {
      alpha = Var(mms.alpha(p[kCoordZ]));
    }
    const Var r = residual_2d<Var>(tag, p, u, alpha, mms);
    acc = acc + r * r;
  }
  const Var loss = acc / static_cast<double>(points.size());

  if (grad_u || grad_alpha) {
    const std::vector<double> adj = tape.adjoints(loss);
    if (grad_u) {
      uleaves.scatter(adj, upass);
      upass.backward(grads->displacement);
    }
    if (grad_alpha) {
      aleaves.scatter(adj, apass);
      apass.backward(grads->friction);
    }
  }
  return loss.value();
}

}  // namespace rsfpinn
