#pragma once

// Random-network derivative check shared by the unit tests and the
// acceptance binary. Every derivative the solver uses is compared with a
// central finite difference of plain double evaluations.

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "rsfpinn/network.hpp"

namespace rsfpinn::testing {

struct DerivativeErrors {
  double first = 0.0;            ///< input first derivatives, jet vs FD
  double second = 0.0;           ///< input second derivatives, jet vs FD
  double param_tape = 0.0;       ///< parameter gradient, scalar tape vs FD
  double param_batched = 0.0;    ///< parameter gradient, batched pass vs FD
  double batched_values = 0.0;   ///< batched jets vs scalar jets

  double worst() const { return std::max({first, second, param_tape, param_batched, batched_values}); }
};

/// Normwise relative error ||a - b||_inf / ||b||_inf.
inline double rel_err(const std::vector<double>& a, const std::vector<double>& b) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num = std::max(num, std::abs(a[i] - b[i]));
    den = std::max(den, std::abs(b[i]));
  }
  return den > 0.0 ? num / den : num;
}

/// Random net with 1..3 inputs, 1..3 hidden layers of width 1..16, smooth
/// activations, and random nonzero biases.
inline Mlp random_small_net(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> in_dim(1, 3), depth(1, 3), width(1, 16), act(0, 1);
  std::vector<int> dims{in_dim(rng)};
  std::vector<Activation> acts;
  const int layers = depth(rng);
  for (int l = 0; l < layers; ++l) {
    dims.push_back(width(rng));
    acts.push_back(act(rng) == 0 ? Activation::tanh : Activation::silu);
  }
  dims.push_back(1);
  Mlp net = init_xavier(dims, acts, rng());
  std::uniform_real_distribution<double> b(-0.5, 0.5);
  for (int l = 0; l < net.num_layers(); ++l) {
    for (Eigen::Index i = 0; i < net.bias(l).size(); ++i) net.bias(l)[i] = b(rng);
  }
  return net;
}

inline double plain_value(const Mlp& net, std::span<const double> theta, const std::vector<double>& x) {
  return net.forward_with<double, double>(x, theta).front();
}

/// Jet of the network output in each input direction.
inline Jet<double, 3> input_jet(const Mlp& net, std::span<const double> theta, const std::vector<double>& x) {
  std::vector<Jet<double, 3>> in;
  for (std::size_t k = 0; k < x.size(); ++k) in.push_back(Jet<double, 3>::input(x[k], static_cast<int>(k)));
  return net.forward_with<Jet<double, 3>, double>(in, theta).front();
}

/// Sum of value, first and second input derivatives: a stand-in residual
/// that touches every jet component.
inline double jet_objective(const Mlp& net, std::span<const double> theta, const std::vector<double>& x) {
  const Jet<double, 3> j = input_jet(net, theta, x);
  double s = j.v;
  for (std::size_t k = 0; k < x.size(); ++k) s += j.d[k] + j.dd[k];
  return s;
}

inline DerivativeErrors check_random_net(std::mt19937_64& rng) {
  const Mlp net = random_small_net(rng);
  const int n = net.input_dim();
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> x(n);
  for (double& v : x) v = u(rng);
  const std::span<const double> theta = net.parameters();
  DerivativeErrors e;

  const Jet<double, 3> j = input_jet(net, theta, x);
  std::vector<double> d_jet, dd_jet, d_fd, dd_fd;
  const double f0 = plain_value(net, theta, x);
  for (int k = 0; k < n; ++k) {
    auto shifted = [&](double h) {
      std::vector<double> y = x;
      y[k] += h;
      return plain_value(net, theta, y);
    };
    const double h1 = 1e-5, h2 = 1e-3;
    d_jet.push_back(j.d[k]);
    dd_jet.push_back(j.dd[k]);
    d_fd.push_back((shifted(h1) - shifted(-h1)) / (2.0 * h1));
    dd_fd.push_back((shifted(h2) - 2.0 * f0 + shifted(-h2)) / (h2 * h2));
  }
  e.first = rel_err(d_jet, d_fd);
  e.second = rel_err(dd_jet, dd_fd);

  // Parameter gradient of the jet objective by central differences.
  std::vector<double> th(theta.begin(), theta.end());
  std::vector<double> g_fd(th.size());
  for (std::size_t i = 0; i < th.size(); ++i) {
    const double h = 1e-6 * std::max(1.0, std::abs(th[i]));
    const double keep = th[i];
    th[i] = keep + h;
    const double fp = jet_objective(net, th, x);
    th[i] = keep - h;
    const double fm = jet_objective(net, th, x);
    th[i] = keep;
    g_fd[i] = (fp - fm) / (2.0 * h);
  }

  const Gradient g_tape = grad_params(
      [&](std::span<const Var> p) {
        std::vector<Jet<Var, 3>> in;
        for (int k = 0; k < n; ++k) in.push_back(Jet<Var, 3>::input(Var(x[k]), k));
        const Jet<Var, 3> out = net.forward_with<Jet<Var, 3>, Var>(in, p).front();
        Var s = out.v;
        for (int k = 0; k < n; ++k) s = s + out.d[k] + out.dd[k];
        return s;
      },
      th);
  e.param_tape = rel_err(g_tape.entries, g_fd);

  // Batched pass at the same single point with identity seeds.
  MlpJetPass pass;
  Eigen::MatrixXd inputs(n, 1);
  for (int k = 0; k < n; ++k) inputs(k, 0) = x[k];
  pass.forward(net, inputs, Eigen::MatrixXd::Identity(n, n), true);
  std::vector<double> batched{pass.value(0)}, scalar{j.v};
  for (int k = 0; k < n; ++k) {
    batched.push_back(pass.d(k, 0));
    batched.push_back(pass.dd(k, 0));
    scalar.push_back(j.d[k]);
    scalar.push_back(j.dd[k]);
  }
  e.batched_values = rel_err(batched, scalar);
  std::vector<double> g_batched(th.size(), 0.0);
  pass.backward(Eigen::RowVectorXd::Ones(pass.blocks()), g_batched);
  e.param_batched = rel_err(g_batched, g_fd);
  return e;
}

}  // namespace rsfpinn::testing
