#pragma once

// Scalar differentiation engine.
//
// Two layers that nest: `Jet<T, N>` is a forward-mode truncated Taylor
// expansion carrying a value, N first derivatives and N pure second
// derivatives. `Var` is a reverse-mode scalar recorded on a `Tape`.
// `Jet<Var, N>` therefore gives input derivatives up to second order whose
// entries can themselves be differentiated with respect to parameters.

#include <array>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace rsfpinn {

/// Raised when a primitive is evaluated outside its domain.
class DomainError : public std::domain_error {
 public:
  DomainError(std::string primitive, double argument);

  const std::string& primitive() const noexcept { return primitive_; }
  double argument() const noexcept { return argument_; }

 private:
  std::string primitive_;
  double argument_;
};

class Var;

/// Linear record of a reverse-mode computation. Each node has at most two
/// parents together with the local partial derivatives towards them.
class Tape {
 public:
  static constexpr std::uint32_t kNoParent = std::numeric_limits<std::uint32_t>::max();

  struct Node {
    std::uint32_t lhs = kNoParent;
    std::uint32_t rhs = kNoParent;
    double dlhs = 0.0;
    double drhs = 0.0;
  };

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// New independent variable recorded on this tape.
  Var variable(double value);

  std::uint32_t push(std::uint32_t lhs, double dlhs, std::uint32_t rhs, double drhs);

  /// Adjoints of every node with respect to `output`.
  std::vector<double> adjoints(const Var& output) const;

  std::size_t size() const noexcept { return nodes_.size(); }
  void reserve(std::size_t n) { nodes_.reserve(n); }
  void clear() noexcept { nodes_.clear(); }

 private:
  std::vector<Node> nodes_;
};

/// Reverse-mode scalar. A Var without a tape is a constant.
class Var {
 public:
  Var() = default;
  Var(double value) : value_(value) {}  // NOLINT(google-explicit-constructor)
  Var(double value, std::uint32_t index, Tape* tape) : value_(value), index_(index), tape_(tape) {}

  double value() const noexcept { return value_; }
  std::uint32_t index() const noexcept { return index_; }
  Tape* tape() const noexcept { return tape_; }
  bool is_constant() const noexcept { return tape_ == nullptr; }

  friend Var operator+(const Var& a, const Var& b);
  friend Var operator-(const Var& a, const Var& b);
  friend Var operator*(const Var& a, const Var& b);
  friend Var operator/(const Var& a, const Var& b);
  friend Var operator-(const Var& a);

  Var& operator+=(const Var& b) { return *this = *this + b; }
  Var& operator-=(const Var& b) { return *this = *this - b; }
  Var& operator*=(const Var& b) { return *this = *this * b; }
  Var& operator/=(const Var& b) { return *this = *this / b; }

 private:
  double value_ = 0.0;
  std::uint32_t index_ = Tape::kNoParent;
  Tape* tape_ = nullptr;
};

// Unary primitives on Var.
Var exp(const Var& a);
Var log(const Var& a);
Var tanh(const Var& a);
Var abs(const Var& a);
Var sqrt(const Var& a);
Var pow(const Var& a, double p);
Var relu(const Var& a);
Var sigmoid(const Var& a);
Var silu(const Var& a);
/// Derivative of relu with the convention 0 at the origin, as a constant.
Var relu_slope(const Var& a);
/// sign(x) with sign(0) = 0, as a constant.
Var sign(const Var& a);

inline double value_of(double x) { return x; }
inline double value_of(const Var& x) { return x.value(); }

// Same primitive set on plain doubles with the same domain checks.
double checked_log(double a);
inline double relu(double a) { return a > 0.0 ? a : 0.0; }
inline double relu_slope(double a) { return a > 0.0 ? 1.0 : 0.0; }
inline double sign(double a) { return a > 0.0 ? 1.0 : (a < 0.0 ? -1.0 : 0.0); }
inline double sigmoid(double a) { return 1.0 / (1.0 + std::exp(-a)); }
inline double silu(double a) { return a * sigmoid(a); }

/// Second-order truncated Taylor expansion in N input directions: value,
/// first derivatives and pure second derivatives. Mixed partials are not
/// tracked.
template <class T, int N>
struct Jet {
  T v{};
  std::array<T, N> d{};
  std::array<T, N> dd{};

  Jet() = default;
  explicit Jet(const T& value) : v(value) {}

  template <class U>
    requires(!std::same_as<U, T> && std::convertible_to<U, T>)
  Jet(const Jet<U, N>& other) : v(other.v) {  // NOLINT(google-explicit-constructor)
    for (int k = 0; k < N; ++k) {
      d[k] = other.d[k];
      dd[k] = other.dd[k];
    }
  }

  /// Independent input seeded in direction `dir`.
  static Jet input(const T& value, int dir, double slope = 1.0) {
    Jet j(value);
    j.d[dir] = T(slope);
    return j;
  }

  friend Jet operator+(const Jet& a, const Jet& b) {
    Jet r(a.v + b.v);
    for (int k = 0; k < N; ++k) {
      r.d[k] = a.d[k] + b.d[k];
      r.dd[k] = a.dd[k] + b.dd[k];
    }
    return r;
  }
  friend Jet operator-(const Jet& a, const Jet& b) {
    Jet r(a.v - b.v);
    for (int k = 0; k < N; ++k) {
      r.d[k] = a.d[k] - b.d[k];
      r.dd[k] = a.dd[k] - b.dd[k];
    }
    return r;
  }
  friend Jet operator-(const Jet& a) {
    Jet r(-a.v);
    for (int k = 0; k < N; ++k) {
      r.d[k] = -a.d[k];
      r.dd[k] = -a.dd[k];
    }
    return r;
  }
  friend Jet operator*(const Jet& a, const Jet& b) {
    Jet r(a.v * b.v);
    for (int k = 0; k < N; ++k) {
      r.d[k] = a.d[k] * b.v + a.v * b.d[k];
      r.dd[k] = a.dd[k] * b.v + 2.0 * (a.d[k] * b.d[k]) + a.v * b.dd[k];
    }
    return r;
  }
  friend Jet operator/(const Jet& a, const Jet& b) { return a * reciprocal(b); }

  friend Jet operator+(const Jet& a, const T& s) {
    Jet r = a;
    r.v = a.v + s;
    return r;
  }
  friend Jet operator+(const T& s, const Jet& a) { return a + s; }
  friend Jet operator-(const Jet& a, const T& s) { return a + (-s); }
  friend Jet operator-(const T& s, const Jet& a) { return (-a) + s; }
  friend Jet operator*(const Jet& a, const T& s) {
    Jet r(a.v * s);
    for (int k = 0; k < N; ++k) {
      r.d[k] = a.d[k] * s;
      r.dd[k] = a.dd[k] * s;
    }
    return r;
  }
  friend Jet operator*(const T& s, const Jet& a) { return a * s; }
  friend Jet operator/(const Jet& a, const T& s) { return a * (T(1.0) / s); }

  friend Jet reciprocal(const Jet& b) {
    if (value_of(b.v) == 0.0) {
      throw DomainError("div", 0.0);
    }
    const T r = T(1.0) / b.v;
    const T r2 = r * r;
    return chain(b, r, -r2, 2.0 * (r2 * r));
  }
};

/// Applies a scalar function given its value and first two derivatives at a.v.
template <class T, int N>
Jet<T, N> chain(const Jet<T, N>& a, const T& f, const T& f1, const T& f2) {
  Jet<T, N> r(f);
  for (int k = 0; k < N; ++k) {
    r.d[k] = f1 * a.d[k];
    r.dd[k] = f1 * a.dd[k] + f2 * (a.d[k] * a.d[k]);
  }
  return r;
}

template <class T, int N>
Jet<T, N> exp(const Jet<T, N>& a) {
  using std::exp;
  const T e = exp(a.v);
  return chain(a, e, e, e);
}

template <class T, int N>
Jet<T, N> log(const Jet<T, N>& a) {
  if (!(value_of(a.v) > 0.0)) {
    throw DomainError("log", value_of(a.v));
  }
  using std::log;
  const T inv = T(1.0) / a.v;
  return chain(a, T(log(a.v)), inv, -(inv * inv));
}

template <class T, int N>
Jet<T, N> tanh(const Jet<T, N>& a) {
  using std::tanh;
  const T t = tanh(a.v);
  const T s = T(1.0) - t * t;
  return chain(a, t, s, -2.0 * (t * s));
}

template <class T, int N>
Jet<T, N> abs(const Jet<T, N>& a) {
  using std::abs;
  return chain(a, T(abs(a.v)), T(sign(a.v)), T(0.0));
}

template <class T, int N>
Jet<T, N> sqrt(const Jet<T, N>& a) {
  if (value_of(a.v) < 0.0) {
    throw DomainError("sqrt", value_of(a.v));
  }
  using std::sqrt;
  const T s = sqrt(a.v);
  const T f1 = 0.5 / s;
  return chain(a, s, f1, -0.5 * (f1 / a.v));
}

template <class T, int N>
Jet<T, N> pow(const Jet<T, N>& a, double p) {
  using std::pow;
  const T f = pow(a.v, p);
  const T f1 = p * pow(a.v, p - 1.0);
  const T f2 = (p * (p - 1.0)) * pow(a.v, p - 2.0);
  return chain(a, f, f1, f2);
}

template <class T, int N>
Jet<T, N> relu(const Jet<T, N>& a) {
  const T slope = relu_slope(a.v);
  return chain(a, T(relu(a.v)), slope, T(0.0));
}

template <class T, int N>
Jet<T, N> sigmoid(const Jet<T, N>& a) {
  const T s = sigmoid(a.v);
  const T g = s * (T(1.0) - s);
  return chain(a, s, g, g * (T(1.0) - 2.0 * s));
}

template <class T, int N>
Jet<T, N> silu(const Jet<T, N>& a) {
  const T s = sigmoid(a.v);
  const T g = s * (T(1.0) - s);
  const T f1 = s + a.v * g;
  const T f2 = g * (T(2.0) + a.v * (T(1.0) - 2.0 * s));
  return chain(a, a.v * s, f1, f2);
}

template <int N>
struct InputDerivatives {
  double value = 0.0;
  std::array<double, N> d{};
  std::array<double, N> dd{};
};

/// Evaluates `f` on seeded jets and returns its value with first and pure
/// second derivatives in every input. `f` receives a
/// `std::array<Jet<double, N>, N>` and must return `Jet<double, N>`.
template <int N, class F>
InputDerivatives<N> eval_with_input_derivs(F&& f, const std::array<double, N>& x) {
  std::array<Jet<double, N>, N> in;
  for (int k = 0; k < N; ++k) {
    in[k] = Jet<double, N>::input(x[k], k);
  }
  const Jet<double, N> out = f(in);
  InputDerivatives<N> r;
  r.value = out.v;
  r.d = out.d;
  r.dd = out.dd;
  return r;
}

/// Loss value together with its derivative in every parameter, in the
/// parameter order of the input vector.
struct Gradient {
  double value = 0.0;
  std::vector<double> entries;
};

/// Records `loss(params)` on a fresh tape and returns the reverse sweep.
/// `loss` receives `std::span<const Var>` and returns a Var.
template <class F>
Gradient grad_params(F&& loss, std::span<const double> theta) {
  Tape tape;
  std::vector<Var> params;
  params.reserve(theta.size());
  for (double t : theta) {
    params.push_back(tape.variable(t));
  }
  const Var out = loss(std::span<const Var>(params));
  Gradient g;
  g.value = out.value();
  g.entries.assign(theta.size(), 0.0);
  if (out.is_constant()) {
    return g;
  }
  const std::vector<double> adj = tape.adjoints(out);
  for (std::size_t i = 0; i < params.size(); ++i) {
    g.entries[i] = adj[params[i].index()];
  }
  return g;
}

}  // namespace rsfpinn
