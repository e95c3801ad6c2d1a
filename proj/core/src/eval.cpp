#include "rsfpinn/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <mutex>
#include <ostream>
#include <random>
#include <stdexcept>
#include <thread>

namespace rsfpinn {

BatchField field_of(const TrialFunction& tf) {
  return [&tf](std::span<const Point> pts) { return evaluate_values(tf, pts); };
}

BatchField field_of(std::function<double(const Point&)> f) {
  return [f = std::move(f)](std::span<const Point> pts) {
    std::vector<double> out(pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) out[i] = f(pts[i]);
    return out;
  };
}

double rel_l2(std::span<const double> net, std::span<const double> exact) {
  if (net.empty() || net.size() != exact.size()) {
    throw std::invalid_argument("rel_l2: need matching, non-empty value sets");
  }
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < net.size(); ++i) {
    const double e = net[i] - exact[i];
    num += e * e;
    den += exact[i] * exact[i];
  }
  if (!(den > 0.0)) throw std::domain_error("rel_l2: exact values have zero norm");
  return std::sqrt(num / den);
}

double rel_l2(const BatchField& net, const BatchField& exact, std::span<const Point> points) {
  return rel_l2(net(points), exact(points));
}

std::string_view to_string(QuadratureDomain d) {
  switch (d) {
    case QuadratureDomain::space:
      return "space";
    case QuadratureDomain::time:
      return "time";
    case QuadratureDomain::spacetime:
      return "spacetime";
    case QuadratureDomain::depth:
      return "depth";
  }
  return "?";
}

std::vector<double> simpson_weights(double lower, double upper, int intervals) {
  if (intervals < 2 || intervals % 2 != 0) {
    throw std::invalid_argument("Simpson quadrature needs an even, positive interval count");
  }
  const double h = (upper - lower) / intervals;
  std::vector<double> w(intervals + 1);
  for (int i = 0; i <= intervals; ++i) {
    const double c = (i == 0 || i == intervals) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
    w[i] = c * h / 3.0;
  }
  return w;
}

double simpson_integrate(const std::function<double(double)>& f, double lower, double upper, int intervals) {
  const std::vector<double> w = simpson_weights(lower, upper, intervals);
  const double h = (upper - lower) / intervals;
  double s = 0.0;
  for (int i = 0; i <= intervals; ++i) s += w[i] * f(lower + i * h);
  return s;
}

void QuadratureGrid::validate() const {
  if (axes.empty()) throw std::invalid_argument("QuadratureGrid: no axes");
  for (const QuadratureAxis& a : axes) {
    if (a.coord < 0 || a.coord > 2) throw std::invalid_argument("QuadratureGrid: bad coordinate");
    if (a.intervals < 2 || a.intervals % 2 != 0) {
      throw std::invalid_argument("QuadratureGrid: interval counts must be even and positive");
    }
    if (!(a.upper > a.lower)) throw std::invalid_argument("QuadratureGrid: empty axis");
  }
}

std::size_t QuadratureGrid::node_count() const {
  std::size_t n = 1;
  for (const QuadratureAxis& a : axes) n *= static_cast<std::size_t>(a.intervals + 1);
  return n;
}

std::vector<Point> QuadratureGrid::nodes() const {
  validate();
  std::vector<Point> out(node_count(), anchor);
  std::size_t stride = out.size();
  for (const QuadratureAxis& a : axes) {
    const std::size_t n = a.intervals + 1;
    stride /= n;
    const double h = (a.upper - a.lower) / a.intervals;
    for (std::size_t i = 0; i < out.size(); ++i) {
      const std::size_t k = (i / stride) % n;
      out[i][a.coord] = (k == n - 1) ? a.upper : a.lower + static_cast<double>(k) * h;
    }
  }
  return out;
}

std::vector<double> QuadratureGrid::weights() const {
  validate();
  std::vector<double> out(node_count(), 1.0);
  std::size_t stride = out.size();
  for (const QuadratureAxis& a : axes) {
    const std::size_t n = a.intervals + 1;
    stride /= n;
    const std::vector<double> w = simpson_weights(a.lower, a.upper, a.intervals);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] *= w[(i / stride) % n];
  }
  return out;
}

double simpson_l2(const BatchField& net, const BatchField& exact, const QuadratureGrid& grid) {
  const std::vector<Point> pts = grid.nodes();
  const std::vector<double> w = grid.weights();
  const std::vector<double> a = net(pts);
  const std::vector<double> b = exact(pts);
  double s = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const double e = a[i] - b[i];
    s += w[i] * e * e;
  }
  return std::sqrt(std::max(s, 0.0));
}

double averaged_l2(const BatchField& net, const BatchField& exact, QuadratureGrid grid,
                   std::span<const Point> anchors) {
  if (anchors.empty()) throw std::invalid_argument("averaged_l2: need at least one anchor point");
  grid.validate();
  // All anchors in one batch.
  const std::size_t per = grid.node_count();
  const std::vector<double> w = grid.weights();
  std::vector<Point> pts;
  pts.reserve(per * anchors.size());
  for (const Point& p : anchors) {
    grid.anchor = p;
    const std::vector<Point> n = grid.nodes();
    pts.insert(pts.end(), n.begin(), n.end());
  }
  const std::vector<double> a = net(pts);
  const std::vector<double> b = exact(pts);
  double total = 0.0;
  for (std::size_t k = 0; k < anchors.size(); ++k) {
    double s = 0.0;
    for (std::size_t i = 0; i < per; ++i) {
      const double e = a[k * per + i] - b[k * per + i];
      s += w[i] * e * e;
    }
    total += std::sqrt(std::max(s, 0.0));
  }
  return total / static_cast<double>(anchors.size());
}

double averaged_temporal_error(const BatchField& net, const BatchField& exact, std::span<const Point> spatial,
                               double t_final, int intervals) {
  QuadratureGrid g;
  g.axes = {QuadratureAxis{kCoordT, 0.0, t_final, intervals}};
  return averaged_l2(net, exact, g, spatial);
}

FieldGrid field_grid(const BatchField& net, const BatchField& exact, const Domain& d, int resolution, double t) {
  if (resolution < 2) throw std::invalid_argument("field_grid: resolution must be at least 2");
  if (t < 0.0 || t > d.t_final) throw std::invalid_argument("field_grid: snapshot time outside [0, T]");
  FieldGrid g;
  g.nx = resolution;
  g.nz = d.lz > 0.0 ? resolution : 1;
  g.t = t;
  std::vector<Point> pts;
  for (int j = 0; j < g.nz; ++j) {
    const double z = g.nz == 1 ? 0.0 : d.lz * j / (g.nz - 1);
    for (int i = 0; i < g.nx; ++i) {
      const double x = d.lx * i / (g.nx - 1);
      g.x.push_back(x);
      g.z.push_back(z);
      pts.push_back(Point{x, z, t});
    }
  }
  g.net = net(pts);
  g.exact = exact(pts);
  g.diff.resize(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) g.diff[i] = std::abs(g.net[i] - g.exact[i]);
  return g;
}

std::optional<double> ErrorReport::mse_of(LossTag tag) const {
  for (const auto& [t, v] : mse) {
    if (t == tag) return v;
  }
  return std::nullopt;
}

namespace {

std::vector<Point> uniform_points(Rng& rng, const Domain& d, int dimension, int n, bool with_time) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Point> out(n);
  for (Point& p : out) {
    p[kCoordX] = d.lx * u(rng);
    p[kCoordZ] = dimension == 2 ? d.lz * u(rng) : 0.0;
    p[kCoordT] = with_time ? d.t_final * u(rng) : 0.0;
  }
  return out;
}

std::vector<QuadratureAxis> spatial_axes(const Domain& d, int dimension, int n) {
  std::vector<QuadratureAxis> axes{{kCoordX, 0.0, d.lx, n}};
  if (dimension == 2) axes.push_back({kCoordZ, 0.0, d.lz, n});
  return axes;
}

void add_displacement_errors(ErrorReport& r, const BatchField& net, const BatchField& exact, const Domain& d,
                             int dimension, const EvalOptions& o, Rng& rng) {
  const std::vector<Point> times = [&] {
    std::uniform_real_distribution<double> u(0.0, d.t_final);
    std::vector<Point> t(o.outer_samples, Point{0.0, 0.0, 0.0});
    for (Point& p : t) p[kCoordT] = u(rng);
    return t;
  }();
  const std::vector<Point> places = uniform_points(rng, d, dimension, o.outer_samples, false);
  for (int n : o.quadrature_intervals) {
    QuadratureGrid space;
    space.axes = spatial_axes(d, dimension, n);
    r.continuous.push_back({QuadratureDomain::space, "displacement", n, averaged_l2(net, exact, space, times)});
    r.continuous.push_back(
        {QuadratureDomain::time, "displacement", n, averaged_temporal_error(net, exact, places, d.t_final, n)});
    QuadratureGrid st;
    st.axes = spatial_axes(d, dimension, n);
    st.axes.push_back({kCoordT, 0.0, d.t_final, n});
    r.continuous.push_back({QuadratureDomain::spacetime, "displacement", n, simpson_l2(net, exact, st)});
  }
}

}  // namespace

ErrorReport evaluate_run(const TrainRun& run) {
  const ProblemConfig& c = run.config;
  const EvalOptions& o = c.eval;
  ErrorReport r;
  r.seed = run.seed;
  r.dimension = c.dimension;
  r.mode = c.mode;
  r.enforcement = c.enforcement;
  r.iterations = static_cast<int>(run.history.size());
  r.evaluation_points = o.points;
  r.monotone = run.monotone();
  r.final_loss = run.history.empty() ? std::numeric_limits<double>::quiet_NaN() : run.history.back().total;
  Rng rng(derive_seed(run.seed, kStreamEvaluation));
  const bool soft = c.enforcement == Enforcement::soft;

  if (c.dimension == 1) {
    if (!run.model1d) throw std::invalid_argument("evaluate_run: missing 1D model");
    const Model1D& m = *run.model1d;
    const Manufactured1D mms(c.material, c.friction);
    const BatchField net = field_of(m.displacement);
    const BatchField exact = field_of([&mms](const Point& p) { return mms.displacement(p).v; });
    const std::vector<Point> pts = uniform_points(rng, c.domain, 1, o.points, true);
    const std::vector<double> a = net(pts);
    const std::vector<double> b = exact(pts);
    r.rel_l2_displacement = rel_l2(a, b);
    double mae = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) mae += std::abs(a[i] - b[i]);
    r.mean_abs_displacement = mae / static_cast<double>(a.size());

    std::vector<Point> tgrid(o.state_grid, Point{0.0, 0.0, 0.0});
    for (int i = 0; i < o.state_grid; ++i) {
      tgrid[i][kCoordT] = o.state_grid == 1 ? 0.0 : c.domain.t_final * i / (o.state_grid - 1);
    }
    const std::vector<double> psi = evaluate_values(m.state, tgrid);
    double worst = 0.0;
    for (int i = 0; i < o.state_grid; ++i) {
      worst = std::max(worst, std::abs(psi[i] - mms.state(tgrid[i][kCoordT]).v));
    }
    r.abs_state_error = worst;

    for (SubdomainSpec s : subdomains_1d(c.domain, c.counts, soft)) {
      s.count = o.points;
      const std::vector<Point> p = sample(s, rng);
      r.mse.emplace_back(s.tag, component_loss_1d(s.tag, p, m, mms));
    }
    add_displacement_errors(r, net, exact, c.domain, 1, o, rng);
    const BatchField psi_net = field_of(m.state);
    const BatchField psi_exact = field_of([&mms](const Point& p) { return mms.state(p[kCoordT]).v; });
    for (int n : o.quadrature_intervals) {
      QuadratureGrid g;
      g.axes = {{kCoordT, 0.0, c.domain.t_final, n}};
      r.continuous.push_back({QuadratureDomain::time, "state", n, simpson_l2(psi_net, psi_exact, g)});
    }
    return r;
  }

  if (!run.model2d) throw std::invalid_argument("evaluate_run: missing 2D model");
  const Model2D& m = *run.model2d;
  const Manufactured2D mms(c.material, c.friction, c.domain);
  const BatchField net = field_of(m.displacement);
  const BatchField exact = field_of([&mms](const Point& p) { return mms.displacement(p).v; });
  const std::vector<Point> pts = uniform_points(rng, c.domain, 2, o.points, true);
  r.rel_l2_displacement = rel_l2(net, exact, pts);
  for (SubdomainSpec s : subdomains_2d(c.domain, c.counts, soft)) {
    s.count = o.points;
    const std::vector<Point> p = sample(s, rng);
    r.mse.emplace_back(s.tag, component_loss_2d(s.tag, p, m, mms));
  }
  add_displacement_errors(r, net, exact, c.domain, 2, o, rng);
  if (m.friction) {
    const BatchField a_net = field_of(*m.friction);
    const BatchField a_exact = field_of([&mms](const Point& p) { return mms.alpha(p[kCoordZ]); });
    std::uniform_real_distribution<double> u(0.0, c.domain.lz);
    std::vector<Point> depths(o.points, Point{0.0, 0.0, 0.0});
    for (Point& p : depths) p[kCoordZ] = u(rng);
    r.rel_l2_alpha = rel_l2(a_net, a_exact, depths);
    for (int n : o.quadrature_intervals) {
      QuadratureGrid g;
      g.axes = {{kCoordZ, 0.0, c.domain.lz, n}};
      r.continuous.push_back({QuadratureDomain::depth, "alpha", n, simpson_l2(a_net, a_exact, g)});
    }
  }
  return r;
}

ErrorReport average_reports(std::span<const ErrorReport> reports) {
  if (reports.empty()) throw std::invalid_argument("average_reports: no reports");
  ErrorReport m = reports.front();
  // Running mean: identical reports average to themselves bit for bit.
  auto mean = [&](auto get) {
    double m = 0.0;
    double k = 0.0;
    for (const ErrorReport& r : reports) m += (get(r) - m) / ++k;
    return m;
  };
  auto mean_opt = [&](auto get) -> std::optional<double> {
    double m = 0.0;
    double k = 0.0;
    for (const ErrorReport& r : reports) {
      const std::optional<double> v = get(r);
      if (!v) return std::nullopt;
      m += (*v - m) / ++k;
    }
    return m;
  };
  m.rel_l2_displacement = mean([](const ErrorReport& r) { return r.rel_l2_displacement; });
  m.rel_l2_alpha = mean_opt([](const ErrorReport& r) { return r.rel_l2_alpha; });
  m.mean_abs_displacement = mean_opt([](const ErrorReport& r) { return r.mean_abs_displacement; });
  m.abs_state_error = mean_opt([](const ErrorReport& r) { return r.abs_state_error; });
  m.final_loss = mean([](const ErrorReport& r) { return r.final_loss; });
  for (auto& [tag, v] : m.mse) {
    const LossTag t = tag;
    v = mean([t](const ErrorReport& r) {
      const std::optional<double> x = r.mse_of(t);
      if (!x) throw std::invalid_argument("average_reports: reports have different components");
      return *x;
    });
  }
  for (std::size_t i = 0; i < m.continuous.size(); ++i) {
    m.continuous[i].value = mean([i](const ErrorReport& r) {
      if (r.continuous.size() <= i) throw std::invalid_argument("average_reports: reports have different grids");
      return r.continuous[i].value;
    });
  }
  m.monotone = std::all_of(reports.begin(), reports.end(), [](const ErrorReport& r) { return r.monotone; });
  m.seed = 0;
  return m;
}

EnsembleReport train_ensemble(const ProblemConfig& config, std::span<const std::uint64_t> seeds, int threads) {
  if (seeds.empty()) throw std::invalid_argument("train_ensemble: need at least one seed");
  config.validate();
  std::vector<std::optional<ErrorReport>> slots(seeds.size());
  std::vector<std::string> errors(seeds.size());
  std::mutex mu;
  std::size_t next = 0;
  auto worker = [&] {
    for (;;) {
      std::size_t i = 0;
      {
        const std::lock_guard<std::mutex> lock(mu);
        if (next >= seeds.size()) return;
        i = next++;
      }
      try {
        slots[i] = evaluate_run(train(config, seeds[i]));
      } catch (const TrainingAborted& e) {
        errors[i] = e.what();
      }
    }
  };
  const int n = std::clamp(threads, 1, static_cast<int>(seeds.size()));
  if (n == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int k = 0; k < n; ++k) pool.emplace_back(worker);
  }

  EnsembleReport e;
  e.config = config;
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    if (slots[i]) {
      e.runs.push_back(std::move(*slots[i]));
    } else {
      ++e.failures;
      e.failure_messages.push_back("seed " + std::to_string(seeds[i]) + ": " + errors[i]);
    }
  }
  if (e.runs.empty()) {
    throw TrainingAborted("every ensemble member failed; first: " + e.failure_messages.front());
  }
  e.mean = average_reports(e.runs);
  return e;
}

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9e", v);
  return buf;
}

std::string num(const std::optional<double>& v) { return v ? num(*v) : std::string(); }

}  // namespace

void write_training_log(std::ostream& os, const TrainRun& run) {
  const int dim = run.config.dimension;
  std::vector<LossTag> tags;
  if (!run.history.empty()) {
    for (const auto& [t, v] : run.history.front().components) tags.push_back(t);
  }
  std::vector<std::string> nets;
  for (const OptimizerLog& l : run.optimizer_log) {
    if (std::find(nets.begin(), nets.end(), l.network) == nets.end()) nets.push_back(l.network);
  }
  os << "iteration";
  for (LossTag t : tags) os << ",mse_" << tag_name(t, dim);
  os << ",total";
  for (const std::string& n : nets) {
    os << ',' << n << "_steps," << n << "_evals," << n << "_status," << n << "_initial_loss," << n
       << "_final_loss," << n << "_monotone";
  }
  os << '\n';
  for (const LossReport& rep : run.history) {
    os << rep.iteration;
    for (LossTag t : tags) os << ',' << num(rep.component(t));
    os << ',' << num(rep.total);
    for (const std::string& n : nets) {
      const auto it = std::find_if(run.optimizer_log.begin(), run.optimizer_log.end(),
                                   [&](const OptimizerLog& l) { return l.iteration == rep.iteration && l.network == n; });
      if (it == run.optimizer_log.end()) {
        os << ",,,,,,";
        continue;
      }
      const RunDiagnostics& d = it->run;
      os << ',' << d.iterations << ',' << d.evals << ',' << to_string(d.last_status) << ',' << num(d.initial_loss)
         << ',' << num(d.final_loss) << ',' << (d.monotone ? 1 : 0);
    }
    os << '\n';
  }
}

void write_error_reports(std::ostream& os, const EnsembleReport& e) {
  const int dim = e.config.dimension;
  const ErrorReport& head = e.mean;
  os << "seed,dimension,mode,enforcement,iterations,rel_l2_displacement,rel_l2_alpha,mean_abs_displacement,"
        "abs_state_error";
  for (const auto& [t, v] : head.mse) os << ",mse_" << tag_name(t, dim);
  for (const ContinuousError& c : head.continuous) {
    os << ",l2_" << c.field << '_' << to_string(c.domain) << '_' << c.intervals;
  }
  os << ",final_loss,monotone,evaluation_points,failures\n";
  auto row = [&](const std::string& label, const ErrorReport& r, int failures) {
    os << label << ',' << r.dimension << ',' << to_string(r.mode) << ',' << to_string(r.enforcement) << ','
       << r.iterations << ',' << num(r.rel_l2_displacement) << ',' << num(r.rel_l2_alpha) << ','
       << num(r.mean_abs_displacement) << ',' << num(r.abs_state_error);
    for (const auto& [t, v] : head.mse) os << ',' << num(r.mse_of(t));
    for (std::size_t i = 0; i < head.continuous.size(); ++i) {
      os << ',' << (i < r.continuous.size() ? num(r.continuous[i].value) : std::string());
    }
    os << ',' << num(r.final_loss) << ',' << (r.monotone ? 1 : 0) << ',' << r.evaluation_points << ',' << failures
       << '\n';
  };
  for (const ErrorReport& r : e.runs) row(std::to_string(r.seed), r, 0);
  row("mean", e.mean, e.failures);
}

void write_field_grid(std::ostream& os, const FieldGrid& g) {
  os << "x,z,t,net,exact,abs_diff\n";
  for (std::size_t i = 0; i < g.net.size(); ++i) {
    os << num(g.x[i]) << ',' << num(g.z[i]) << ',' << num(g.t) << ',' << num(g.net[i]) << ',' << num(g.exact[i])
       << ',' << num(g.diff[i]) << '\n';
  }
}

void write_alpha_profile(std::ostream& os, const TrialFunction& friction, const Manufactured2D& mms, const Domain& d,
                         int points) {
  if (points < 2) throw std::invalid_argument("write_alpha_profile: need at least two depths");
  std::vector<Point> pts(points, Point{0.0, 0.0, 0.0});
  for (int i = 0; i < points; ++i) pts[i][kCoordZ] = d.lz * i / (points - 1);
  const std::vector<double> a = evaluate_values(friction, pts);
  os << "z,alpha_net,alpha_exact\n";
  for (int i = 0; i < points; ++i) {
    os << num(pts[i][kCoordZ]) << ',' << num(a[i]) << ',' << num(mms.alpha(pts[i][kCoordZ])) << '\n';
  }
}

}  // namespace rsfpinn
