#include <doctest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "rsfpinn/eval.hpp"

using namespace rsfpinn;

namespace {

BatchField constant(double v) {
  return field_of([v](const Point&) { return v; });
}

ProblemConfig tiny(int dim, ProblemMode mode = ProblemMode::forward) {
  ProblemConfig c = default_config(dim);
  c.mode = mode;
  c.iterations = 1;
  c.displacement_net.hidden = {6, 6};
  c.displacement_net.activations = {Activation::tanh, Activation::tanh};
  c.state_net = c.displacement_net;
  c.friction_net.hidden = {5, 5};
  c.friction_net.activations = {Activation::relu, Activation::silu};
  c.counts = CollocationCounts{20, 8, 8, 8};
  c.optimizer.max_evals = 5;
  c.eval.points = 50;
  c.eval.outer_samples = 3;
  c.eval.quadrature_intervals = {2, 4};
  c.eval.state_grid = 11;
  return c;
}

void check_same(const ErrorReport& a, const ErrorReport& b) {
  CHECK(a.rel_l2_displacement == b.rel_l2_displacement);
  CHECK(a.rel_l2_alpha == b.rel_l2_alpha);
  CHECK(a.mean_abs_displacement == b.mean_abs_displacement);
  CHECK(a.abs_state_error == b.abs_state_error);
  CHECK(a.final_loss == b.final_loss);
  REQUIRE(a.mse.size() == b.mse.size());
  for (std::size_t i = 0; i < a.mse.size(); ++i) CHECK(a.mse[i].second == b.mse[i].second);
  REQUIRE(a.continuous.size() == b.continuous.size());
  for (std::size_t i = 0; i < a.continuous.size(); ++i) CHECK(a.continuous[i].value == b.continuous[i].value);
}

}  // namespace

TEST_CASE("rel_l2 examples") {
  const std::vector<double> exact{1.0, -2.0, 3.0};
  const std::vector<double> twice{2.0, -4.0, 6.0};
  CHECK(rel_l2(twice, exact) == doctest::Approx(1.0).epsilon(1e-15));
  const double eps = 1e-3;
  const std::vector<double> ones(10, 1.0), shifted(10, 1.0 + eps);
  CHECK(rel_l2(shifted, ones) == doctest::Approx(eps).epsilon(1e-10));
  CHECK(rel_l2(exact, exact) == 0.0);
  CHECK_THROWS(rel_l2(std::vector<double>{}, std::vector<double>{}));
  CHECK_THROWS(rel_l2(std::vector<double>{1.0}, std::vector<double>{0.0}));
  const std::vector<Point> pts{{0, 0, 0}, {1, 0, 0}};
  CHECK(rel_l2(constant(2.0), constant(1.0), pts) == doctest::Approx(1.0));
}

TEST_CASE("simpson weights and exactness on cubics") {
  CHECK(simpson_integrate([](double x) { return x * x * x; }, 0.0, 1.0, 2) == doctest::Approx(0.25).epsilon(1e-15));
  const std::vector<double> w = simpson_weights(0.0, 1.0, 2);
  CHECK(w == std::vector<double>{1.0 / 6.0, 4.0 / 6.0, 1.0 / 6.0});
  for (int n : {2, 4, 8, 64}) {
    const double v = simpson_integrate([](double x) { return 3.0 * x * x * x - x * x + 2.0 * x - 5.0; }, -1.0, 2.0, n);
    const double exact = 0.75 * (16.0 - 1.0) - (8.0 + 1.0) / 3.0 + (4.0 - 1.0) - 5.0 * 3.0;
    CHECK(std::abs(v - exact) <= 1e-14 * std::abs(exact) + 1e-14);
  }
  CHECK_THROWS(simpson_weights(0.0, 1.0, 3));
  CHECK_THROWS(simpson_weights(0.0, 1.0, 0));
}

TEST_CASE("simpson converges at fourth order on sin over [0, pi]") {
  auto err = [](int n) {
    return std::abs(simpson_integrate([](double x) { return std::sin(x); }, 0.0, std::numbers::pi, n) - 2.0);
  };
  for (int n : {8, 16, 32}) {
    const double order = std::log2(err(n) / err(2 * n));
    CHECK(order >= 3.7);
    CHECK(order <= 4.3);
  }
}

TEST_CASE("quadrature grid nodes and weights") {
  QuadratureGrid g{{{kCoordX, 0.0, 2.0, 2}, {kCoordT, 0.0, 1.0, 4}}, {9.0, 7.0, 9.0}};
  CHECK(g.node_count() == 15);
  const auto n = g.nodes();
  const auto w = g.weights();
  CHECK(n.size() == 15);
  CHECK(n[0] == Point{0.0, 7.0, 0.0});
  CHECK(n[1] == Point{0.0, 7.0, 0.25});
  CHECK(n[14] == Point{2.0, 7.0, 1.0});
  double total = 0.0;
  for (double v : w) total += v;
  CHECK(total == doctest::Approx(2.0).epsilon(1e-15));
  QuadratureGrid bad{{{kCoordX, 0.0, 1.0, 3}}, {}};
  CHECK_THROWS(bad.validate());
}

TEST_CASE("simpson_l2 of a constant difference") {
  QuadratureGrid g{{{kCoordX, 0.0, 2.0, 4}, {kCoordZ, 0.0, 3.0, 4}}, {}};
  CHECK(simpson_l2(constant(1.5), constant(1.0), g) == doctest::Approx(0.5 * std::sqrt(6.0)).epsilon(1e-14));
}

TEST_CASE("averaged temporal error") {
  // net - exact = g(t) = 1 + t, so each inner integral is ||g|| = sqrt(7/3).
  const BatchField net = field_of([](const Point& p) { return std::sin(p[0]) + 1.0 + p[2]; });
  const BatchField exact = field_of([](const Point& p) { return std::sin(p[0]); });
  const std::vector<Point> spatial{{0.1, 0.0, 0.0}, {0.7, 0.0, 0.0}, {0.9, 0.0, 0.0}};
  CHECK(averaged_temporal_error(net, exact, spatial, 1.0, 8) == doctest::Approx(std::sqrt(7.0 / 3.0)).epsilon(1e-14));

  // One spatial point: the single inner integral.
  const BatchField net2 = field_of([](const Point& p) { return p[0] * p[2]; });
  const std::vector<Point> one{{0.5, 0.0, 0.0}};
  QuadratureGrid inner{{{kCoordT, 0.0, 1.0, 8}}, one[0]};
  CHECK(averaged_temporal_error(net2, constant(0.0), one, 1.0, 8) ==
        doctest::Approx(simpson_l2(net2, constant(0.0), inner)).epsilon(1e-15));
}

TEST_CASE("averaged_l2 uses anchors for the free coordinates") {
  const BatchField net = field_of([](const Point& p) { return p[2]; });
  QuadratureGrid space{{{kCoordX, 0.0, 1.0, 2}}, {}};
  const std::vector<Point> anchors{{0.0, 0.0, 1.0}, {0.0, 0.0, 3.0}};
  CHECK(averaged_l2(net, constant(0.0), space, anchors) == doctest::Approx(2.0));
}

TEST_CASE("field grid layout") {
  const Domain d{25.0, 25.0, 1.0};
  const FieldGrid g = field_grid(field_of([](const Point& p) { return p[0] + p[1]; }), constant(0.0), d, 3, 0.5);
  CHECK(g.nx == 3);
  CHECK(g.nz == 3);
  REQUIRE(g.x.size() == 9);
  CHECK(g.x.front() == 0.0);
  CHECK(g.z.front() == 0.0);
  CHECK(g.x.back() == 25.0);
  CHECK(g.z.back() == 25.0);
  CHECK(g.diff.back() == 50.0);
  const FieldGrid g1 = field_grid(constant(1.0), constant(0.0), Domain{1.0, 0.0, 1.0}, 5, 1.0);
  CHECK(g1.nz == 1);
  CHECK(g1.x.size() == 5);
}

TEST_CASE("averaging reports") {
  ErrorReport a, b;
  a.rel_l2_displacement = 1.0;
  b.rel_l2_displacement = 3.0;
  a.rel_l2_alpha = 0.5;
  b.rel_l2_alpha = 1.5;
  a.mse = {{LossTag::pde, 2.0}};
  b.mse = {{LossTag::pde, 4.0}};
  a.continuous = {{QuadratureDomain::space, "displacement", 8, 1.0}};
  b.continuous = {{QuadratureDomain::space, "displacement", 8, 2.0}};
  b.monotone = false;
  const std::vector<ErrorReport> v{a, b};
  const ErrorReport m = average_reports(v);
  CHECK(m.rel_l2_displacement == 2.0);
  CHECK(*m.rel_l2_alpha == 1.0);
  CHECK(*m.mse_of(LossTag::pde) == 3.0);
  CHECK(m.continuous.at(0).value == 1.5);
  CHECK_FALSE(m.monotone);
  CHECK_FALSE(m.mse_of(LossTag::fault).has_value());
}

TEST_CASE("zero iterations still yield finite positive errors") {
  for (int dim : {1, 2}) {
    ProblemConfig c = tiny(dim);
    c.iterations = 0;
    const ErrorReport r = evaluate_run(train(c, 1));
    CHECK(std::isfinite(r.rel_l2_displacement));
    CHECK(r.rel_l2_displacement > 0.0);
    CHECK(r.evaluation_points == c.eval.points);
    CHECK(r.continuous.size() >= 3 * c.eval.quadrature_intervals.size());
    if (dim == 1) {
      CHECK(r.abs_state_error.has_value());
      CHECK(r.mean_abs_displacement.has_value());
    }
  }
}

TEST_CASE("inverse reports carry alpha errors") {
  const ProblemConfig c = tiny(2, ProblemMode::inverse);
  const ErrorReport r = evaluate_run(train(c, 2));
  REQUIRE(r.rel_l2_alpha.has_value());
  CHECK(std::isfinite(*r.rel_l2_alpha));
  bool has_alpha_quadrature = false;
  for (const auto& e : r.continuous) has_alpha_quadrature |= e.field == "alpha" && e.domain == QuadratureDomain::depth;
  CHECK(has_alpha_quadrature);
}

TEST_CASE("ensembles: one seed and duplicate seeds equal the single run") {
  const ProblemConfig c = tiny(2);
  const ErrorReport single = evaluate_run(train(c, 7));
  const std::vector<std::uint64_t> one{7}, dup{7, 7, 7};
  const EnsembleReport e1 = train_ensemble(c, one);
  REQUIRE(e1.runs.size() == 1);
  check_same(e1.runs[0], single);
  check_same(e1.mean, single);
  const EnsembleReport e3 = train_ensemble(c, dup, 2);
  CHECK(e3.runs.size() == 3);
  CHECK(e3.failures == 0);
  check_same(e3.mean, single);
}

TEST_CASE("csv writers emit headers and one row per entry") {
  const ProblemConfig c = tiny(2, ProblemMode::inverse);
  const TrainRun run = train(c, 3);
  std::ostringstream log;
  write_training_log(log, run);
  const std::string s = log.str();
  CHECK(s.rfind("iteration,", 0) == 0);
  CHECK(std::count(s.begin(), s.end(), '\n') == 1 + c.iterations);

  std::ostringstream prof;
  write_alpha_profile(prof, *run.model2d->friction, mms_2d(), c.domain, 200);
  const std::string p = prof.str();
  CHECK(p.rfind("z,alpha_net,alpha_exact\n", 0) == 0);
  CHECK(std::count(p.begin(), p.end(), '\n') == 201);

  std::ostringstream grid;
  write_field_grid(grid, field_grid(constant(1.0), constant(0.0), c.domain, 3, 1.0));
  const std::string gs = grid.str();
  CHECK(std::count(gs.begin(), gs.end(), '\n') == 10);

  EnsembleReport e;
  e.config = c;
  e.runs = {evaluate_run(run)};
  e.mean = average_reports(e.runs);
  std::ostringstream errs;
  write_error_reports(errs, e);
  const std::string r = errs.str();
  CHECK(r.find("\nmean,") != std::string::npos);
  CHECK(std::count(r.begin(), r.end(), '\n') == 3);
}
