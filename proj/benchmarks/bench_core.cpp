// Throughput of the pieces that dominate a training iteration.

#include <benchmark/benchmark.h>

#include "rsfpinn/trainer.hpp"

namespace {

using namespace rsfpinn;

std::vector<Point> interior_points(int n) {
  const auto specs = subdomains_2d(Domain{25.0, 25.0, 1.0}, CollocationCounts{n, 1, 0, 0}, false);
  Rng rng(1);
  return sample(specs.front(), rng);
}

// Batched second-order jets of a 3 x width tanh network, forward only.
void BM_JetForward(benchmark::State& state) {
  const int width = static_cast<int>(state.range(0));
  const int n = static_cast<int>(state.range(1));
  const Mlp net = init_xavier({3, width, width, width, 1}, {Activation::tanh, Activation::tanh, Activation::tanh}, 1);
  const Eigen::MatrixXd x = Eigen::MatrixXd::Random(3, n);
  const Eigen::MatrixXd seeds = Eigen::MatrixXd::Identity(3, 3);
  MlpJetPass pass;
  for (auto _ : state) {
    pass.forward(net, x, seeds, true);
    benchmark::DoNotOptimize(pass.value(0));
  }
  state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(BM_JetForward)->Args({64, 400})->Args({128, 400})->Unit(benchmark::kMicrosecond);

// Forward plus reverse sweep into parameter space.
void BM_JetForwardBackward(benchmark::State& state) {
  const int width = static_cast<int>(state.range(0));
  const int n = static_cast<int>(state.range(1));
  const Mlp net = init_xavier({3, width, width, width, 1}, {Activation::tanh, Activation::tanh, Activation::tanh}, 1);
  const Eigen::MatrixXd x = Eigen::MatrixXd::Random(3, n);
  const Eigen::MatrixXd seeds = Eigen::MatrixXd::Identity(3, 3);
  MlpJetPass pass;
  std::vector<double> grad(net.parameter_count());
  for (auto _ : state) {
    pass.forward(net, x, seeds, true);
    std::fill(grad.begin(), grad.end(), 0.0);
    pass.backward(Eigen::RowVectorXd::Ones(pass.blocks() * n), grad);
    benchmark::DoNotOptimize(grad.data());
  }
  state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(BM_JetForwardBackward)->Args({64, 400})->Args({128, 400})->Unit(benchmark::kMicrosecond);

// One objective evaluation of the 2D interior loss with gradient, the unit
// of work the line search pays for.
void BM_InteriorLoss2D(benchmark::State& state) {
  const ProblemConfig c = default_config(2);
  const Model2D model = make_model_2d(c, 1);
  const Manufactured2D mms(c.material, c.friction, c.domain);
  const std::vector<Point> pts = interior_points(static_cast<int>(state.range(0)));
  std::vector<double> grad(model.displacement.base.parameter_count());
  const ParamGrads g{grad, {}, {}};
  for (auto _ : state) {
    std::fill(grad.begin(), grad.end(), 0.0);
    benchmark::DoNotOptimize(component_loss_2d(LossTag::pde, pts, model, mms, &g));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_InteriorLoss2D)->Arg(400)->Unit(benchmark::kMicrosecond);

// Two-loop recursion with a full history on a 2D-sized parameter vector.
void BM_LbfgsDirection(benchmark::State& state) {
  const std::size_t n = static_cast<std::size_t>(state.range(0));
  Lbfgs opt;
  std::vector<double> theta(n, 0.5);
  const Objective quad = [](std::span<const double> p, std::span<double> g) {
    double f = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double w = 1.0 + static_cast<double>(i % 7);
      g[i] = w * p[i];
      f += 0.5 * w * p[i] * p[i];
    }
    return f;
  };
  for (int i = 0; i < 12; ++i) opt.step(theta, quad);
  std::vector<double> g(n);
  quad(theta, g);
  for (auto _ : state) benchmark::DoNotOptimize(opt.direction(g));
}
BENCHMARK(BM_LbfgsDirection)->Arg(33537)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
