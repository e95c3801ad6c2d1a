#include "rsfpinn/lbfgs.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace rsfpinn {

std::string_view to_string(LineSearchStatus s) {
  switch (s) {
    case LineSearchStatus::not_run:
      return "not_run";
    case LineSearchStatus::wolfe:
      return "wolfe";
    case LineSearchStatus::decrease:
      return "decrease";
    case LineSearchStatus::failed:
      return "failed";
  }
  return "?";
}

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

double inf_norm(std::span<const double> a) {
  double m = 0.0;
  for (double v : a) m = std::max(m, std::abs(v));
  return m;
}

bool finite(std::span<const double> a) {
  return std::all_of(a.begin(), a.end(), [](double v) { return std::isfinite(v); });
}

/// Minimizer of the cubic matching (x1, f1, g1) and (x2, f2, g2), clamped to
/// [lo, hi]; midpoint when the cubic has no minimum.
double cubic_minimizer(double x1, double f1, double g1, double x2, double f2, double g2, double lo, double hi) {
  const double d1 = g1 + g2 - 3.0 * (f1 - f2) / (x1 - x2);
  const double disc = d1 * d1 - g1 * g2;
  if (disc >= 0.0) {
    const double d2 = std::sqrt(disc);
    double x = 0.0;
    if (x1 <= x2) {
      x = x2 - (x2 - x1) * ((g2 + d2 - d1) / (g2 - g1 + 2.0 * d2));
    } else {
      x = x1 - (x1 - x2) * ((g1 + d2 - d1) / (g1 - g2 + 2.0 * d2));
    }
    if (std::isfinite(x)) {
      return std::clamp(x, lo, hi);
    }
  }
  return 0.5 * (lo + hi);
}

struct Trial {
  double step = 0.0;
  double loss = 0.0;
  double slope = 0.0;  // directional derivative
  std::vector<double> grad;
};

struct SearchResult {
  Trial point;
  int evals = 0;
  LineSearchStatus status = LineSearchStatus::failed;
};

class LineSearch {
 public:
  LineSearch(const LbfgsOptions& o, std::span<const double> theta, std::span<const double> dir, const Objective& f,
             double loss0, double slope0, int budget)
      : o_(o), theta_(theta), dir_(dir), f_(f), loss0_(loss0), slope0_(slope0), budget_(budget),
        x_(theta.size()) {}

  SearchResult run(double step0) {
    Trial prev{0.0, loss0_, slope0_, {}};
    double step = step0;
    for (;;) {
      if (evals_ >= budget_) return finish();
      Trial cur = eval(step);
      if (!armijo(cur) || (prev.step > 0.0 && cur.loss >= prev.loss)) {
        return zoom(std::move(prev), std::move(cur));
      }
      if (std::abs(cur.slope) <= -o_.c2 * slope0_) {
        return done(std::move(cur), LineSearchStatus::wolfe);
      }
      if (cur.slope >= 0.0) {
        return zoom(std::move(cur), std::move(prev));
      }
      const double lo = cur.step + 0.01 * (cur.step - prev.step);
      const double hi = cur.step * 10.0;
      const double next = cubic_minimizer(prev.step, prev.loss, prev.slope, cur.step, cur.loss, cur.slope, lo, hi);
      prev = std::move(cur);
      step = next;
    }
  }

 private:
  bool armijo(const Trial& t) const {
    return std::isfinite(t.loss) && t.loss <= loss0_ + o_.c1 * t.step * slope0_;
  }

  Trial eval(double step) {
    for (std::size_t i = 0; i < x_.size(); ++i) {
      x_[i] = theta_[i] + step * dir_[i];
    }
    Trial t;
    t.step = step;
    t.grad.assign(x_.size(), 0.0);
    t.loss = f_(x_, t.grad);
    ++evals_;
    if (!finite(t.grad)) {
      t.loss = std::numeric_limits<double>::infinity();
    }
    t.slope = std::isfinite(t.loss) ? dot(t.grad, dir_) : 0.0;
    if (std::isfinite(t.loss) && armijo(t) && (best_.grad.empty() || t.loss < best_.loss)) {
      best_ = t;
    }
    return t;
  }

  // `lo` satisfies sufficient decrease with the lower loss; the minimizer
  // lies between lo and hi.
  SearchResult zoom(Trial lo, Trial hi) {
    while (evals_ < budget_) {
      const double width = std::abs(hi.step - lo.step);
      if (width * std::sqrt(dot(dir_, dir_)) < o_.min_step_change) break;
      const double a = std::min(lo.step, hi.step);
      const double b = std::max(lo.step, hi.step);
      double step = std::isfinite(hi.loss)
                        ? cubic_minimizer(lo.step, lo.loss, lo.slope, hi.step, hi.loss, hi.slope, a, b)
                        : 0.5 * (a + b);
      // Keep away from the bracket ends.
      const double guard = 0.1 * (b - a);
      if (step - a < guard || b - step < guard) {
        step = 0.5 * (a + b);
      }
      Trial cur = eval(step);
      if (!armijo(cur) || cur.loss >= lo.loss) {
        hi = std::move(cur);
      } else {
        if (std::abs(cur.slope) <= -o_.c2 * slope0_) {
          return done(std::move(cur), LineSearchStatus::wolfe);
        }
        if (cur.slope * (hi.step - lo.step) >= 0.0) {
          hi = std::move(lo);
        }
        lo = std::move(cur);
      }
    }
    return finish();
  }

  SearchResult done(Trial t, LineSearchStatus s) { return SearchResult{std::move(t), evals_, s}; }

  SearchResult finish() {
    if (!best_.grad.empty()) {
      return SearchResult{std::move(best_), evals_, LineSearchStatus::decrease};
    }
    return SearchResult{Trial{}, evals_, LineSearchStatus::failed};
  }

  const LbfgsOptions& o_;
  std::span<const double> theta_;
  std::span<const double> dir_;
  const Objective& f_;
  double loss0_;
  double slope0_;
  int budget_;
  int evals_ = 0;
  std::vector<double> x_;
  Trial best_;
};

}  // namespace

Lbfgs::Lbfgs(LbfgsOptions options) : opts_(options) {
  if (opts_.history < 0 || opts_.max_evals < 1 || !(opts_.c1 > 0.0 && opts_.c1 < opts_.c2 && opts_.c2 < 1.0)) {
    throw std::invalid_argument("Lbfgs: invalid options");
  }
}

std::vector<double> Lbfgs::direction(std::span<const double> grad) const {
  std::vector<double> q(grad.begin(), grad.end());
  const std::size_t m = s_.size();
  std::vector<double> alpha(m);
  std::vector<double> rho(m);
  for (std::size_t i = m; i-- > 0;) {
    rho[i] = 1.0 / dot(y_[i], s_[i]);
    alpha[i] = rho[i] * dot(s_[i], q);
    for (std::size_t k = 0; k < q.size(); ++k) q[k] -= alpha[i] * y_[i][k];
  }
  if (m > 0) {
    const double gamma = dot(s_.back(), y_.back()) / dot(y_.back(), y_.back());
    for (double& v : q) v *= gamma;
  }
  for (std::size_t i = 0; i < m; ++i) {
    const double beta = rho[i] * dot(y_[i], q);
    for (std::size_t k = 0; k < q.size(); ++k) q[k] += (alpha[i] - beta) * s_[i][k];
  }
  for (double& v : q) v = -v;
  return q;
}

StepResult Lbfgs::step(std::span<double> theta, double& loss, std::vector<double>& grad, const Objective& f,
                       int eval_budget) {
  StepResult r;
  r.loss = loss;
  if (inf_norm(grad) <= opts_.grad_tol) {
    r.converged = true;
    return r;
  }
  std::vector<double> dir = direction(grad);
  double slope = dot(grad, dir);
  if (!(slope < 0.0) || !finite(dir)) {
    reset();
    dir.assign(grad.begin(), grad.end());
    for (double& v : dir) v = -v;
    slope = dot(grad, dir);
  }
  double step0 = opts_.initial_step;
  if (s_.empty()) {
    double l1 = 0.0;
    for (double g : grad) l1 += std::abs(g);
    step0 = std::min(1.0, 1.0 / l1) * opts_.initial_step;
  }

  LineSearch ls(opts_, theta, dir, f, loss, slope, std::min(eval_budget, opts_.max_line_search));
  SearchResult sr = ls.run(step0);
  r.evals = sr.evals;
  r.status = sr.status;
  if (sr.status == LineSearchStatus::failed) {
    return r;
  }

  std::vector<double> s(theta.size());
  std::vector<double> y(theta.size());
  for (std::size_t i = 0; i < theta.size(); ++i) {
    s[i] = sr.point.step * dir[i];
    y[i] = sr.point.grad[i] - grad[i];
    theta[i] += s[i];
  }
  const double sy = dot(s, y);
  if (opts_.history > 0 && sy > 1e-10 * std::sqrt(dot(s, s) * dot(y, y))) {
    if (static_cast<int>(s_.size()) == opts_.history) {
      s_.pop_front();
      y_.pop_front();
    }
    s_.push_back(std::move(s));
    y_.push_back(std::move(y));
  }
  loss = sr.point.loss;
  grad = std::move(sr.point.grad);
  r.loss = loss;
  r.step = sr.point.step;
  r.accepted = true;
  return r;
}

StepResult Lbfgs::step(std::span<double> theta, const Objective& f) {
  std::vector<double> grad(theta.size(), 0.0);
  double loss = f(theta, grad);
  if (!std::isfinite(loss) || !finite(grad)) {
    throw NonFiniteLoss("L-BFGS: non-finite loss or gradient at the current parameters");
  }
  StepResult r = step(theta, loss, grad, f, opts_.max_line_search);
  r.evals += 1;
  return r;
}

RunDiagnostics Lbfgs::run(std::span<double> theta, const Objective& f) {
  RunDiagnostics d;
  std::vector<double> grad(theta.size(), 0.0);
  double loss = f(theta, grad);
  d.evals = 1;
  if (!std::isfinite(loss) || !finite(grad)) {
    throw NonFiniteLoss("L-BFGS: non-finite loss or gradient at the current parameters");
  }
  d.initial_loss = loss;
  d.final_loss = loss;
  while (d.evals < opts_.max_evals) {
    const double before = loss;
    const StepResult r = step(theta, loss, grad, f, opts_.max_evals - d.evals);
    d.evals += r.evals;
    d.last_status = r.status;
    if (r.converged) {
      d.converged = true;
      break;
    }
    if (!r.accepted) {
      break;
    }
    ++d.iterations;
    d.final_step = r.step;
    if (loss > before) {
      d.monotone = false;
    }
    if (std::abs(before - loss) <= opts_.rel_loss_tol * std::max(std::abs(before), 1e-300)) {
      d.converged = true;
      break;
    }
  }
  d.final_loss = loss;
  return d;
}

}  // namespace rsfpinn
