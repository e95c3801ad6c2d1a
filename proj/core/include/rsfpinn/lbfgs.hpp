#pragma once

#include <deque>
#include <functional>
#include <span>
#include <stdexcept>
#include <string_view>
#include <vector>

namespace rsfpinn {

/// Loss-and-gradient callback: returns the loss at `theta` and writes the
/// gradient into `grad` (same length as theta, overwritten).
using Objective = std::function<double(std::span<const double> theta, std::span<double> grad)>;

class NonFiniteLoss : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct LbfgsOptions {
  int history = 10;
  double c1 = 1e-4;  ///< sufficient decrease
  double c2 = 0.9;   ///< curvature
  double initial_step = 1.0;
  int max_line_search = 25;   ///< evaluations per line search
  int max_evals = 20;         ///< evaluations per inner run
  double grad_tol = 1e-9;     ///< infinity norm
  double rel_loss_tol = 1e-12;
  double min_step_change = 1e-12;  ///< bracket width below which zoom gives up
};

enum class LineSearchStatus {
  not_run,
  wolfe,       ///< strong Wolfe conditions met
  decrease,    ///< budget exhausted; best sufficient-decrease point taken
  failed,      ///< no acceptable point; parameters unchanged
};

std::string_view to_string(LineSearchStatus s);

struct StepResult {
  double loss = 0.0;
  double step = 0.0;
  int evals = 0;
  LineSearchStatus status = LineSearchStatus::not_run;
  bool accepted = false;
  bool converged = false;
};

struct RunDiagnostics {
  int iterations = 0;
  int evals = 0;
  double initial_loss = 0.0;
  double final_loss = 0.0;
  double final_step = 0.0;
  LineSearchStatus last_status = LineSearchStatus::not_run;
  bool converged = false;
  bool monotone = true;  ///< loss never increased across accepted steps
};

/// Limited-memory BFGS with a strong-Wolfe line search. Curvature pairs
/// persist across calls so one instance can serve successive inner runs.
class Lbfgs {
 public:
  explicit Lbfgs(LbfgsOptions options = {});

  const LbfgsOptions& options() const noexcept { return opts_; }
  std::size_t pairs() const noexcept { return s_.size(); }
  void reset() {
    s_.clear();
    y_.clear();
  }

  /// One quasi-Newton iteration from `theta`, where `loss`/`grad` hold the
  /// objective at theta. On acceptance all three are updated in place.
  StepResult step(std::span<double> theta, double& loss, std::vector<double>& grad, const Objective& f,
                  int eval_budget);

  /// Convenience form that first evaluates the objective at theta.
  StepResult step(std::span<double> theta, const Objective& f);

  /// Repeated steps until the evaluation budget (`max_evals`, counting the
  /// initial evaluation) is spent or a convergence test passes.
  RunDiagnostics run(std::span<double> theta, const Objective& f);

  /// Search direction -H g from the current curvature pairs.
  std::vector<double> direction(std::span<const double> grad) const;

 private:
  LbfgsOptions opts_;
  std::deque<std::vector<double>> s_;
  std::deque<std::vector<double>> y_;
};

}  // namespace rsfpinn
