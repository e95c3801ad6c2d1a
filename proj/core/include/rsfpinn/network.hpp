#pragma once

// Dense feed-forward networks, their batched jet evaluation, and the trial
// functions that wrap a network to satisfy initial conditions exactly.

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rsfpinn/autodiff.hpp"

namespace rsfpinn {

enum class Activation { tanh, relu, silu };

std::string_view to_string(Activation a);
Activation parse_activation(std::string_view name);

template <class S>
S activate(Activation a, const S& x) {
  using std::tanh;
  switch (a) {
    case Activation::tanh:
      return tanh(x);
    case Activation::relu:
      return relu(x);
    case Activation::silu:
      return silu(x);
  }
  return x;
}

/// First three derivatives of an activation evaluated elementwise.
struct ActivationDerivatives {
  Eigen::ArrayXXd value, d1, d2, d3;
};
ActivationDerivatives activation_derivatives(Activation a, const Eigen::ArrayXXd& z, bool need_third);

using RowMajorMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Fully connected network with affine output layer. Parameters live in one
/// flat vector ordered layer by layer, each layer as its row-major weight
/// matrix followed by its bias.
class Mlp {
 public:
  Mlp() = default;
  Mlp(std::vector<int> layer_dims, std::vector<Activation> activations);

  const std::vector<int>& layer_dims() const noexcept { return dims_; }
  const std::vector<Activation>& activations() const noexcept { return acts_; }
  int input_dim() const { return dims_.front(); }
  int output_dim() const { return dims_.back(); }
  /// Number of affine maps (hidden layers + output layer).
  int num_layers() const { return static_cast<int>(dims_.size()) - 1; }

  std::size_t parameter_count() const noexcept { return params_.size(); }
  std::span<double> parameters() noexcept { return params_; }
  std::span<const double> parameters() const noexcept { return params_; }

  std::size_t weight_offset(int layer) const { return offsets_[layer]; }
  std::size_t bias_offset(int layer) const {
    return offsets_[layer] + static_cast<std::size_t>(dims_[layer + 1]) * dims_[layer];
  }

  Eigen::Map<const RowMajorMatrix> weights(int layer) const;
  Eigen::Map<const Eigen::VectorXd> bias(int layer) const;
  Eigen::Map<RowMajorMatrix> weights(int layer);
  Eigen::Map<Eigen::VectorXd> bias(int layer);

  /// Scalar evaluation for any arithmetic type S, with the network's own
  /// parameters.
  template <class S>
  std::vector<S> forward(std::span<const S> x) const {
    return forward_with<S, double>(x, params_);
  }

  /// Scalar evaluation with externally supplied parameters (e.g. tape
  /// variables), laid out as `parameters()`.
  template <class S, class P>
  std::vector<S> forward_with(std::span<const S> x, std::span<const P> theta) const;

 private:
  std::vector<int> dims_;
  std::vector<Activation> acts_;
  std::vector<std::size_t> offsets_;
  std::vector<double> params_;
};

double xavier_bound(int fan_in, int fan_out);

/// Uniform Xavier weights, zero biases.
Mlp init_xavier(std::vector<int> layer_dims, std::vector<Activation> activations, std::uint64_t seed);

/// Batched evaluation of value, first and (optionally) pure second input
/// derivatives of output 0 for many points, with the matching reverse sweep
/// into parameter space.
///
/// Columns are laid out in blocks of `points()`: the value block, then one
/// block per direction for first derivatives, then (second order only) one
/// block per direction for second derivatives.
class MlpJetPass {
 public:
  /// `inputs` is input_dim x P. `seeds` is input_dim x K and holds the
  /// derivative of each network input along each direction.
  void forward(const Mlp& net, const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& seeds,
               bool second_order);

  int points() const noexcept { return points_; }
  int directions() const noexcept { return dirs_; }
  bool second_order() const noexcept { return second_; }
  int blocks() const noexcept { return 1 + dirs_ * (second_ ? 2 : 1); }

  double value(int p) const { return out_(0, p); }
  double d(int k, int p) const { return out_(0, (1 + k) * points_ + p); }
  double dd(int k, int p) const { return out_(0, (1 + dirs_ + k) * points_ + p); }

  /// Accumulates d(loss)/d(theta) into `grad` given the adjoint of every
  /// output entry (1 x blocks()*points()).
  void backward(const Eigen::RowVectorXd& adjoint, std::span<double> grad) const;

 private:
  const Mlp* net_ = nullptr;
  int points_ = 0;
  int dirs_ = 0;
  bool second_ = false;
  std::vector<Eigen::MatrixXd> layer_in_;  // stacked jets entering each affine map
  std::vector<Eigen::MatrixXd> pre_;       // stacked pre-activation jets per hidden layer
  Eigen::RowVectorXd out_;
};

/// Problem coordinates: (x, z, t). One-dimensional problems use z = 0.
using Point = std::array<double, 3>;
inline constexpr int kCoordX = 0;
inline constexpr int kCoordZ = 1;
inline constexpr int kCoordT = 2;

/// Jet over the three problem coordinates.
template <class S>
using FieldJet = Jet<S, 3>;

/// Selects network inputs from problem coordinates and maps each from
/// [lower, upper] affinely onto [-1, 1].
struct InputMap {
  std::vector<int> coords;
  std::vector<double> lower;
  std::vector<double> upper;

  double slope(std::size_t i) const { return 2.0 / (upper[i] - lower[i]); }
  double apply(std::size_t i, double x) const { return (x - lower[i]) * slope(i) - 1.0; }
};

enum class TrialMode {
  raw,         ///< network output used as is
  hard_ic,     ///< u0(x) + t v0(x) + t^2 N(x, t)
  hard_state,  ///< psi0 + t N(t)
};

std::string_view to_string(TrialMode m);

/// Closed-form initial displacement and velocity as functions of (x, z).
using SpatialFunction = std::function<FieldJet<double>(const FieldJet<double>& x, const FieldJet<double>& z)>;

/// A network together with its input map and the wrapper that may enforce
/// initial conditions. The raw network output is multiplied by
/// `output_scale` before the wrapper is applied.
struct TrialFunction {
  Mlp base;
  InputMap map;
  TrialMode mode = TrialMode::raw;
  double output_scale = 1.0;
  SpatialFunction u0;
  SpatialFunction v0;
  double psi0 = 0.0;

  /// Composes raw network jet `n` (derivatives in problem coordinates) with
  /// the trial wrapper at point `p`.
  template <class S>
  FieldJet<S> apply(const Point& p, const FieldJet<S>& n) const;

  /// Scalar route: full evaluation at `p` with parameters `theta` of any
  /// arithmetic type (double or Var).
  template <class S>
  FieldJet<S> evaluate(const Point& p, std::span<const S> theta) const;

  double value(const Point& p) const;
};

/// Batched counterpart of TrialFunction::evaluate for the raw network part.
class FieldPass {
 public:
  /// Evaluates the network of `tf` at `points`, differentiating along the
  /// problem coordinates `dirs` (a subset of the coordinates the network
  /// consumes).
  void forward(const TrialFunction& tf, std::span<const Point> points, std::vector<int> dirs,
               bool second_order);

  std::size_t size() const noexcept { return static_cast<std::size_t>(pass_.points()); }
  /// Raw network jet at point p in problem coordinates.
  FieldJet<double> raw(std::size_t p) const;

  /// Starts a reverse sweep: adjoints of raw jets are added point by point
  /// with `add_adjoint`, then `backward` pushes them into parameters.
  void zero_adjoint();
  void add_adjoint(std::size_t p, const FieldJet<double>& adj);
  void backward(std::span<double> grad) const;

 private:
  MlpJetPass pass_;
  std::vector<int> dirs_;
  Eigen::RowVectorXd adjoint_;
};

/// Batched plain values of output 0 (no derivatives).
std::vector<double> evaluate_values(const TrialFunction& tf, std::span<const Point> points);

// Checkpoints: plain text, parameters as hexadecimal floating point so a
// save/load round trip is bit exact.
//
//   rsfpinn-mlp 1
//   dims <n0> <n1> ... <nL>
//   activations <a1> ... <a(L-1)>
//   params <count>
//   <one hexfloat per line>
void save_checkpoint(std::ostream& os, const Mlp& net);
Mlp load_checkpoint(std::istream& is);
void save_checkpoint(const std::string& path, const Mlp& net);
Mlp load_checkpoint(const std::string& path);

// ---------------------------------------------------------------------------

template <class S, class P>
std::vector<S> Mlp::forward_with(std::span<const S> x, std::span<const P> theta) const {
  if (static_cast<int>(x.size()) != input_dim()) {
    throw std::invalid_argument("Mlp::forward: expected " + std::to_string(input_dim()) +
                                " inputs, got " + std::to_string(x.size()));
  }
  if (theta.size() != params_.size()) {
    throw std::invalid_argument("Mlp::forward: parameter vector has wrong length");
  }
  std::vector<S> a(x.begin(), x.end());
  for (int l = 0; l < num_layers(); ++l) {
    const int rows = dims_[l + 1];
    const int cols = dims_[l];
    const std::size_t w0 = offsets_[l];
    const std::size_t b0 = bias_offset(l);
    std::vector<S> z(rows);
    for (int i = 0; i < rows; ++i) {
      S acc(theta[b0 + i]);
      for (int j = 0; j < cols; ++j) {
        acc = acc + a[j] * theta[w0 + static_cast<std::size_t>(i) * cols + j];
      }
      z[i] = l + 1 < num_layers() ? activate(acts_[l], acc) : acc;
    }
    a = std::move(z);
  }
  return a;
}

template <class S>
FieldJet<S> TrialFunction::apply(const Point& p, const FieldJet<S>& raw) const {
  const FieldJet<S> n = output_scale == 1.0 ? raw : raw * S(output_scale);
  switch (mode) {
    case TrialMode::raw:
      return n;
    case TrialMode::hard_ic: {
      const auto x = FieldJet<double>::input(p[kCoordX], kCoordX);
      const auto z = FieldJet<double>::input(p[kCoordZ], kCoordZ);
      const auto t = FieldJet<double>::input(p[kCoordT], kCoordT);
      const FieldJet<double> fixed = u0(x, z) + t * v0(x, z);
      return FieldJet<S>(fixed) + FieldJet<S>(t * t) * n;
    }
    case TrialMode::hard_state: {
      const auto t = FieldJet<double>::input(p[kCoordT], kCoordT);
      return FieldJet<S>(FieldJet<double>(psi0)) + FieldJet<S>(t) * n;
    }
  }
  return n;
}

template <class S>
FieldJet<S> TrialFunction::evaluate(const Point& p, std::span<const S> theta) const {
  std::vector<Jet<S, 3>> in;
  in.reserve(map.coords.size());
  for (std::size_t i = 0; i < map.coords.size(); ++i) {
    const int c = map.coords[i];
    auto j = Jet<S, 3>(S(map.apply(i, p[c])));
    j.d[c] = S(map.slope(i));
    in.push_back(j);
  }
  const std::vector<Jet<S, 3>> out = base.forward_with<Jet<S, 3>, S>(in, theta);
  return apply<S>(p, out.front());
}

}  // namespace rsfpinn
