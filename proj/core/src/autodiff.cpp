#include "rsfpinn/autodiff.hpp"

#include <cmath>
#include <sstream>

namespace rsfpinn {

namespace {

std::string domain_message(const std::string& primitive, double argument) {
  std::ostringstream os;
  os << "domain error in " << primitive << " at argument " << argument;
  return os.str();
}

Var unary(const Var& a, double value, double partial) {
  if (a.is_constant()) {
    return Var(value);
  }
  Tape* tape = a.tape();
  return Var(value, tape->push(a.index(), partial, Tape::kNoParent, 0.0), tape);
}

bool is_zero_constant(const Var& a) { return a.is_constant() && a.value() == 0.0; }

}  // namespace

DomainError::DomainError(std::string primitive, double argument)
    : std::domain_error(domain_message(primitive, argument)),
      primitive_(std::move(primitive)),
      argument_(argument) {}

Var Tape::variable(double value) {
  return Var(value, push(kNoParent, 0.0, kNoParent, 0.0), this);
}

std::uint32_t Tape::push(std::uint32_t lhs, double dlhs, std::uint32_t rhs, double drhs) {
  nodes_.push_back(Node{lhs, rhs, dlhs, drhs});
  return static_cast<std::uint32_t>(nodes_.size() - 1);
}

std::vector<double> Tape::adjoints(const Var& output) const {
  std::vector<double> adj(nodes_.size(), 0.0);
  if (output.is_constant()) {
    return adj;
  }
  adj[output.index()] = 1.0;
  for (std::size_t i = output.index() + 1; i-- > 0;) {
    const double a = adj[i];
    if (a == 0.0) {
      continue;
    }
    const Node& n = nodes_[i];
    if (n.lhs != kNoParent) {
      adj[n.lhs] += a * n.dlhs;
    }
    if (n.rhs != kNoParent) {
      adj[n.rhs] += a * n.drhs;
    }
  }
  return adj;
}

Var operator+(const Var& a, const Var& b) {
  const double v = a.value() + b.value();
  if (a.is_constant()) {
    return unary(b, v, 1.0);
  }
  if (b.is_constant()) {
    return unary(a, v, 1.0);
  }
  return Var(v, a.tape()->push(a.index(), 1.0, b.index(), 1.0), a.tape());
}

Var operator-(const Var& a, const Var& b) {
  const double v = a.value() - b.value();
  if (a.is_constant()) {
    return unary(b, v, -1.0);
  }
  if (b.is_constant()) {
    return unary(a, v, 1.0);
  }
  return Var(v, a.tape()->push(a.index(), 1.0, b.index(), -1.0), a.tape());
}

Var operator-(const Var& a) { return unary(a, -a.value(), -1.0); }

Var operator*(const Var& a, const Var& b) {
  if (is_zero_constant(a) || is_zero_constant(b)) {
    return Var(0.0);
  }
  const double v = a.value() * b.value();
  if (a.is_constant()) {
    return unary(b, v, a.value());
  }
  if (b.is_constant()) {
    return unary(a, v, b.value());
  }
  return Var(v, a.tape()->push(a.index(), b.value(), b.index(), a.value()), a.tape());
}

Var operator/(const Var& a, const Var& b) {
  if (b.value() == 0.0) {
    throw DomainError("div", 0.0);
  }
  if (is_zero_constant(a)) {
    return Var(0.0);
  }
  const double inv = 1.0 / b.value();
  const double v = a.value() * inv;
  if (b.is_constant()) {
    return unary(a, v, inv);
  }
  if (a.is_constant()) {
    return unary(b, v, -v * inv);
  }
  return Var(v, a.tape()->push(a.index(), inv, b.index(), -v * inv), a.tape());
}

Var exp(const Var& a) {
  const double e = std::exp(a.value());
  return unary(a, e, e);
}

double checked_log(double a) {
  if (!(a > 0.0)) {
    throw DomainError("log", a);
  }
  return std::log(a);
}

Var log(const Var& a) { return unary(a, checked_log(a.value()), 1.0 / a.value()); }

Var tanh(const Var& a) {
  const double t = std::tanh(a.value());
  return unary(a, t, 1.0 - t * t);
}

Var abs(const Var& a) { return unary(a, std::abs(a.value()), sign(a.value())); }

Var sqrt(const Var& a) {
  if (a.value() < 0.0) {
    throw DomainError("sqrt", a.value());
  }
  const double s = std::sqrt(a.value());
  return unary(a, s, s > 0.0 ? 0.5 / s : 0.0);
}

Var pow(const Var& a, double p) {
  const double v = std::pow(a.value(), p);
  return unary(a, v, p * std::pow(a.value(), p - 1.0));
}

Var relu(const Var& a) { return unary(a, relu(a.value()), relu_slope(a.value())); }

Var sigmoid(const Var& a) {
  const double s = sigmoid(a.value());
  return unary(a, s, s * (1.0 - s));
}

Var silu(const Var& a) {
  const double s = sigmoid(a.value());
  return unary(a, a.value() * s, s + a.value() * s * (1.0 - s));
}

Var relu_slope(const Var& a) { return Var(relu_slope(a.value())); }

Var sign(const Var& a) { return Var(sign(a.value())); }

}  // namespace rsfpinn
