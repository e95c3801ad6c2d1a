#include <doctest.h>

#include <cmath>
#include <random>

#include "autodiff_property.hpp"
#include "rsfpinn/autodiff.hpp"

using namespace rsfpinn;

namespace {

using J1 = Jet<double, 1>;

/// Value, f' and f'' of a unary jet function at x.
template <class F>
std::array<double, 3> jet_triple(F f, double x) {
  const J1 r = f(J1::input(x, 0));
  return {r.v, r.d[0], r.dd[0]};
}

template <class F>
double fd1(F f, double x, double h = 1e-5) {
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

template <class F>
double fd2(F f, double x, double h = 1e-4) {
  return (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h);
}

}  // namespace

TEST_CASE("jet primitives match closed-form derivatives") {
  const double x = 0.7;
  auto t = jet_triple([](const J1& a) { return tanh(a); }, x);
  const double th = std::tanh(x);
  CHECK(t[0] == doctest::Approx(th).epsilon(1e-15));
  CHECK(t[1] == doctest::Approx(1 - th * th).epsilon(1e-14));
  CHECK(t[2] == doctest::Approx(-2 * th * (1 - th * th)).epsilon(1e-14));

  auto e = jet_triple([](const J1& a) { return exp(a); }, x);
  CHECK(e[1] == doctest::Approx(std::exp(x)));
  CHECK(e[2] == doctest::Approx(std::exp(x)));

  auto l = jet_triple([](const J1& a) { return log(a); }, x);
  CHECK(l[1] == doctest::Approx(1 / x));
  CHECK(l[2] == doctest::Approx(-1 / (x * x)));

  auto q = jet_triple([](const J1& a) { return a * a * a / (a + 1.0); }, x);
  auto qf = [](double y) { return y * y * y / (y + 1); };
  CHECK(q[1] == doctest::Approx(fd1(qf, x)).epsilon(1e-8));
  CHECK(q[2] == doctest::Approx(fd2(qf, x)).epsilon(1e-6));

  auto s = jet_triple([](const J1& a) { return silu(a); }, x);
  CHECK(s[1] == doctest::Approx(fd1([](double y) { return silu(y); }, x)).epsilon(1e-8));
  CHECK(s[2] == doctest::Approx(fd2([](double y) { return silu(y); }, x)).epsilon(1e-6));

  auto p = jet_triple([](const J1& a) { return pow(a, 2.5); }, x);
  CHECK(p[1] == doctest::Approx(2.5 * std::pow(x, 1.5)));
  CHECK(p[2] == doctest::Approx(3.75 * std::pow(x, 0.5)));

  auto r = jet_triple([](const J1& a) { return sqrt(a); }, x);
  CHECK(r[2] == doctest::Approx(-0.25 * std::pow(x, -1.5)));
}

TEST_CASE("relu uses slope 0 at the origin and no curvature") {
  auto at0 = jet_triple([](const J1& a) { return relu(a); }, 0.0);
  CHECK(at0[0] == 0.0);
  CHECK(at0[1] == 0.0);
  CHECK(at0[2] == 0.0);
  auto pos = jet_triple([](const J1& a) { return relu(a); }, 2.0);
  CHECK(pos[1] == 1.0);
  CHECK(pos[2] == 0.0);
  CHECK(sign(0.0) == 0.0);
}

TEST_CASE("domain errors name the primitive") {
  CHECK_THROWS_AS(log(J1::input(0.0, 0)), DomainError);
  CHECK_THROWS_AS(log(J1::input(-1.0, 0)), DomainError);
  CHECK_THROWS_AS(sqrt(J1::input(-1.0, 0)), DomainError);
  CHECK_THROWS_AS(J1(1.0) / J1(0.0), DomainError);
  CHECK_THROWS_AS(checked_log(0.0), DomainError);
  Tape tape;
  const Var v = tape.variable(-2.0);
  try {
    (void)log(v);
    FAIL("log(-2) did not throw");
  } catch (const DomainError& e) {
    CHECK(e.primitive() == "log");
    CHECK(e.argument() == -2.0);
  }
}

TEST_CASE("reverse mode on a scalar expression") {
  const std::vector<double> x{0.3, -1.1};
  const Gradient g = grad_params(
      [](std::span<const Var> p) { return exp(p[0] * p[1]) + tanh(p[0]) / (p[1] * p[1]); }, x);
  auto f = [](double a, double b) { return std::exp(a * b) + std::tanh(a) / (b * b); };
  CHECK(g.value == doctest::Approx(f(x[0], x[1])).epsilon(1e-15));
  CHECK(g.entries[0] == doctest::Approx(fd1([&](double a) { return f(a, x[1]); }, x[0])).epsilon(1e-8));
  CHECK(g.entries[1] == doctest::Approx(fd1([&](double b) { return f(x[0], b); }, x[1])).epsilon(1e-8));
}

TEST_CASE("constant vars are not recorded") {
  const Gradient g = grad_params([](std::span<const Var>) { return Var(3.0) * Var(2.0); }, std::vector<double>{1.0});
  CHECK(g.value == 6.0);
  CHECK(g.entries[0] == 0.0);
}

TEST_CASE("a variable used twice accumulates its adjoint") {
  const Gradient g = grad_params([](std::span<const Var> p) { return p[0] * p[0] + p[0]; }, std::vector<double>{2.0});
  CHECK(g.entries[0] == doctest::Approx(5.0));
}

TEST_CASE("nested jets give parameter derivatives of input derivatives") {
  // f(x; w) = tanh(w x); d2f/dx2 = w^2 tanh''(w x); differentiate in w.
  const double x = 0.4;
  const Gradient g = grad_params(
      [&](std::span<const Var> p) {
        const Jet<Var, 1> j = tanh(Jet<Var, 1>::input(Var(x), 0) * p[0]);
        return j.dd[0];
      },
      std::vector<double>{1.3});
  auto second = [&](double w) {
    const double t = std::tanh(w * x);
    return w * w * (-2.0 * t * (1.0 - t * t));
  };
  CHECK(g.value == doctest::Approx(second(1.3)).epsilon(1e-14));
  CHECK(g.entries[0] == doctest::Approx(fd1(second, 1.3, 1e-6)).epsilon(1e-7));
}

TEST_CASE("eval_with_input_derivs on a two-input function") {
  auto r = eval_with_input_derivs<2>([](const std::array<Jet<double, 2>, 2>& v) { return v[0] * v[0] * v[1]; },
                                     {2.0, 3.0});
  CHECK(r.value == 12.0);
  CHECK(r.d[0] == 12.0);
  CHECK(r.d[1] == 4.0);
  CHECK(r.dd[0] == 6.0);
  CHECK(r.dd[1] == 0.0);
}

TEST_CASE("random networks: jets and gradients agree with finite differences") {
  std::mt19937_64 rng(20240611);
  for (int i = 0; i < 100; ++i) {
    const testing::DerivativeErrors e = testing::check_random_net(rng);
    INFO("net " << i);
    CHECK(e.first <= 1e-5);
    CHECK(e.second <= 1e-5);
    CHECK(e.param_tape <= 1e-5);
    CHECK(e.param_batched <= 1e-5);
    CHECK(e.batched_values <= 1e-12);
  }
}
