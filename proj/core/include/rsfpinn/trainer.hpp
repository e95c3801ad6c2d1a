#pragma once

// Training loops. The 1D problem trains the displacement and state networks
// with two isolated optimizers; the 2D problem optimizes one parameter
// vector (displacement, plus friction network for inverse problems) against
// the full objective.

#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "rsfpinn/config.hpp"
#include "rsfpinn/lbfgs.hpp"
#include "rsfpinn/losses.hpp"

namespace rsfpinn {

/// Component losses of one training iteration, evaluated on that
/// iteration's collocation points after the parameter update.
struct LossReport {
  int iteration = 0;
  std::vector<std::pair<LossTag, double>> components;
  double total = 0.0;

  double component(LossTag tag) const;
};

struct OptimizerLog {
  int iteration = 0;
  std::string network;  ///< "state", "displacement" or "joint"
  RunDiagnostics run;
};

struct TrainRun {
  ProblemConfig config;
  std::uint64_t seed = 0;
  std::optional<Model1D> model1d;
  std::optional<Model2D> model2d;
  std::vector<LossReport> history;
  std::vector<OptimizerLog> optimizer_log;

  bool monotone() const;
};

/// Raised when training cannot continue; names the failing component.
class TrainingAborted : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Independent random stream `stream` derived from `seed`.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

enum SeedStream : std::uint64_t {
  kStreamDisplacementInit = 1,
  kStreamAuxiliaryInit = 2,
  kStreamTraining = 3,
  kStreamEvaluation = 4,
};

Model1D make_model_1d(const ProblemConfig& c, std::uint64_t seed);
Model2D make_model_2d(const ProblemConfig& c, std::uint64_t seed);

/// Collocation points of one subdomain for one iteration.
struct Batch {
  LossTag tag;
  std::vector<Point> points;
};

std::vector<Batch> draw_batches(std::span<const SubdomainSpec> specs, Rng& rng);

/// Called after every completed iteration with the run so far.
using IterationCallback = std::function<void(const TrainRun&)>;

TrainRun train_1d(const ProblemConfig& c, std::uint64_t seed, const IterationCallback& on_iteration = {});
TrainRun train_2d(const ProblemConfig& c, std::uint64_t seed, const IterationCallback& on_iteration = {});
TrainRun train(const ProblemConfig& c, std::uint64_t seed, const IterationCallback& on_iteration = {});

}  // namespace rsfpinn
