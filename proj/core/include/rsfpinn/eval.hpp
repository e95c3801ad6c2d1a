#pragma once

// Error measurement for trained models: discrete relative l2 errors,
// continuous L2 errors by composite Simpson quadrature, and plot-ready grids.

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rsfpinn/trainer.hpp"

namespace rsfpinn {

/// Vectorized scalar field: one value per point.
using BatchField = std::function<std::vector<double>(std::span<const Point>)>;

BatchField field_of(const TrialFunction& tf);
BatchField field_of(std::function<double(const Point&)> f);

/// sqrt(sum |net - exact|^2 / sum |exact|^2). Throws on empty input or a
/// zero denominator.
double rel_l2(std::span<const double> net, std::span<const double> exact);
double rel_l2(const BatchField& net, const BatchField& exact, std::span<const Point> points);

struct QuadratureAxis {
  int coord = kCoordX;
  double lower = 0.0;
  double upper = 1.0;
  int intervals = 2;  ///< even, >= 2
};

enum class QuadratureDomain { space, time, spacetime, depth };
std::string_view to_string(QuadratureDomain d);

/// Tensor-product grid over the listed axes; coordinates not listed are taken
/// from `anchor`.
struct QuadratureGrid {
  std::vector<QuadratureAxis> axes;
  Point anchor{0.0, 0.0, 0.0};

  void validate() const;
  std::size_t node_count() const;
  std::vector<Point> nodes() const;    ///< last axis varies fastest
  std::vector<double> weights() const;  ///< same order as nodes()
};

/// Composite Simpson weights on [lower, upper] with `intervals` subintervals.
std::vector<double> simpson_weights(double lower, double upper, int intervals);

double simpson_integrate(const std::function<double(double)>& f, double lower, double upper, int intervals);

/// sqrt of the Simpson approximation of the integral of |net - exact|^2.
double simpson_l2(const BatchField& net, const BatchField& exact, const QuadratureGrid& grid);

/// Mean over `anchors` of the L2 error on `grid` with the anchor's
/// coordinates filling the axes the grid does not integrate over.
double averaged_l2(const BatchField& net, const BatchField& exact, QuadratureGrid grid, std::span<const Point> anchors);

/// Mean over `spatial` points of the L2-in-time error on [0, t_final].
double averaged_temporal_error(const BatchField& net, const BatchField& exact, std::span<const Point> spatial,
                               double t_final, int intervals);

struct FieldGrid {
  int nx = 0;
  int nz = 0;
  double t = 0.0;
  std::vector<double> x, z;              ///< per node, row-major over (z, x)
  std::vector<double> net, exact, diff;  ///< diff = |net - exact|
};

/// resolution x resolution nodes over [0, lx] x [0, lz] at time t
/// (one row when lz = 0).
FieldGrid field_grid(const BatchField& net, const BatchField& exact, const Domain& d, int resolution, double t);

struct ContinuousError {
  QuadratureDomain domain = QuadratureDomain::space;
  std::string field;  ///< "displacement", "alpha" or "state"
  int intervals = 0;
  double value = 0.0;
};

struct ErrorReport {
  std::uint64_t seed = 0;
  int dimension = 2;
  ProblemMode mode = ProblemMode::forward;
  Enforcement enforcement = Enforcement::hard;
  int iterations = 0;
  double rel_l2_displacement = 0.0;
  std::optional<double> rel_l2_alpha;            ///< 2D inverse
  std::optional<double> mean_abs_displacement;   ///< 1D
  std::optional<double> abs_state_error;         ///< 1D, max over the time grid
  std::vector<std::pair<LossTag, double>> mse;   ///< training components, fresh points
  std::vector<ContinuousError> continuous;
  double final_loss = 0.0;
  bool monotone = true;
  int evaluation_points = 0;

  std::optional<double> mse_of(LossTag tag) const;
};

/// Metrics of one trained run on evaluation points drawn from a stream
/// independent of the training samples.
ErrorReport evaluate_run(const TrainRun& run);

struct EnsembleReport {
  ProblemConfig config;
  std::vector<ErrorReport> runs;
  ErrorReport mean;  ///< arithmetic mean of every metric over `runs`
  int failures = 0;
  std::vector<std::string> failure_messages;
};

ErrorReport average_reports(std::span<const ErrorReport> reports);

/// Trains and evaluates one run per seed. Aborted runs are counted and
/// excluded; throws when every run fails.
EnsembleReport train_ensemble(const ProblemConfig& config, std::span<const std::uint64_t> seeds, int threads = 1);

// CSV output. Every writer emits a header row.
void write_training_log(std::ostream& os, const TrainRun& run);
void write_error_reports(std::ostream& os, const EnsembleReport& e);
void write_field_grid(std::ostream& os, const FieldGrid& g);
void write_alpha_profile(std::ostream& os, const TrialFunction& friction, const Manufactured2D& mms, const Domain& d,
                         int points);

}  // namespace rsfpinn
