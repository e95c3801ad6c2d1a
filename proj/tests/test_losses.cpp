#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "rsfpinn/config.hpp"
#include "rsfpinn/losses.hpp"
#include "rsfpinn/trainer.hpp"

using namespace rsfpinn;

namespace {

double max_rel_diff(std::span<const double> a, std::span<const double> b) {
  double scale = 0.0;
  for (double v : b) scale = std::max(scale, std::abs(v));
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
  return worst / std::max(scale, 1e-300);
}

std::vector<Point> points_for(LossTag tag, int dim, int n, std::uint64_t seed) {
  const Domain d = dim == 1 ? Domain{1.0, 0.0, 1.0} : Domain{25.0, 25.0, 1.0};
  CollocationCounts counts{n, n, n, n};
  const auto specs = dim == 1 ? subdomains_1d(d, counts, true) : subdomains_2d(d, counts, true);
  Rng rng(seed);
  for (const auto& s : specs) {
    if (s.tag == tag) return sample(s, rng);
  }
  FAIL("tag not found");
  return {};
}

ProblemConfig small_1d(Enforcement e) {
  ProblemConfig c = default_config(1);
  c.enforcement = e;
  c.displacement_net.hidden = {6, 5};
  c.displacement_net.activations = {Activation::tanh, Activation::tanh};
  c.state_net = c.displacement_net;
  return c;
}

ProblemConfig small_2d(ProblemMode m, Enforcement e) {
  ProblemConfig c = default_config(2);
  c.mode = m;
  c.enforcement = e;
  c.displacement_net.hidden = {6, 5};
  c.displacement_net.activations = {Activation::tanh, Activation::tanh};
  c.friction_net.hidden = {5, 4, 3};
  c.friction_net.activations = {Activation::relu, Activation::silu, Activation::relu};
  return c;
}

/// Scalar-tape loss of the 1D model for one tag over (theta_u, theta_psi).
Gradient tape_loss_1d(LossTag tag, std::span<const Point> pts, const Model1D& m, const Manufactured1D& mms) {
  const std::size_t nu = m.displacement.base.parameter_count();
  std::vector<double> theta(m.displacement.base.parameters().begin(), m.displacement.base.parameters().end());
  theta.insert(theta.end(), m.state.base.parameters().begin(), m.state.base.parameters().end());
  return grad_params(
      [&](std::span<const Var> th) {
        auto u = [&](const Point& p) { return m.displacement.evaluate<Var>(p, th.subspan(0, nu)); };
        auto psi = [&](const Point& p) { return m.state.evaluate<Var>(p, th.subspan(nu)); };
        return loss_1d<Var>(tag, pts, u, psi, mms);
      },
      theta);
}

Gradient tape_loss_2d(LossTag tag, std::span<const Point> pts, const Model2D& m, const Manufactured2D& mms) {
  const std::size_t nu = m.displacement.base.parameter_count();
  std::vector<double> theta(m.displacement.base.parameters().begin(), m.displacement.base.parameters().end());
  if (m.friction) {
    theta.insert(theta.end(), m.friction->base.parameters().begin(), m.friction->base.parameters().end());
  }
  return grad_params(
      [&](std::span<const Var> th) {
        auto u = [&](const Point& p) { return m.displacement.evaluate<Var>(p, th.subspan(0, nu)); };
        if (m.friction && tag == LossTag::fault) {
          auto alpha = [&](double z) { return m.friction->evaluate<Var>({0.0, z, 0.0}, th.subspan(nu)).v; };
          return loss_2d_inverse_fault<Var>(pts, u, alpha, mms);
        }
        return loss_2d_forward<Var>(tag, pts, u, mms);
      },
      theta);
}

}  // namespace

TEST_CASE("exact manufactured solutions annihilate every 1D component") {
  const Manufactured1D mms = mms_1d();
  auto u = [&](const Point& p) { return mms.displacement(p); };
  auto psi = [&](const Point& p) { return mms.state(p[kCoordT]); };
  for (LossTag tag : {LossTag::pde, LossTag::fault, LossTag::remote, LossTag::ic_disp, LossTag::ic_vel, LossTag::state,
                      LossTag::ic_state}) {
    const auto pts = points_for(tag, 1, 200, 11);
    CHECK(loss_1d<double>(tag, pts, u, psi, mms) <= 1e-12);
  }
}

TEST_CASE("exact manufactured solutions annihilate every 2D component") {
  const Manufactured2D mms = mms_2d();
  auto u = [&](const Point& p) { return mms.displacement(p); };
  for (LossTag tag : {LossTag::pde, LossTag::fault, LossTag::surface, LossTag::remote, LossTag::depth, LossTag::ic_disp,
                      LossTag::ic_vel}) {
    const auto pts = points_for(tag, 2, 200, 12);
    CHECK(loss_2d_forward<double>(tag, pts, u, mms) <= 1e-12);
  }
  const auto fault = points_for(LossTag::fault, 2, 200, 13);
  CHECK(loss_2d_inverse_fault<double>(fault, u, [&](double z) { return mms.alpha(z); }, mms) <= 1e-12);
}

TEST_CASE("inverse fault residual with a zero friction network") {
  // alpha = 0 leaves sigma_n (f - f0) with f the exact steady friction.
  const Manufactured2D mms = mms_2d();
  const FrictionParams& f = mms.friction();
  const auto pts = points_for(LossTag::fault, 2, 5, 14);
  auto u = [&](const Point& p) { return mms.displacement(p); };
  double expect = 0.0;
  for (const Point& p : pts) {
    const double v = 2.0 * mms.displacement(p).d[kCoordT];
    const double r = f.sigma_n * mms.alpha(p[kCoordZ]) * std::log(std::abs(v) / f.v0);
    expect += r * r;
  }
  expect /= pts.size();
  const double got = loss_2d_inverse_fault<double>(pts, u, [](double) { return 0.0; }, mms);
  CHECK(got == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("hard-mode zero network against a direct residual oracle") {
  // N = 0 leaves u = u0(x) + t v0(x). With the source removed the PDE
  // residual is -c^2 (u0'' + t v0'').
  ProblemConfig c = small_1d(Enforcement::hard);
  Model1D m = make_model_1d(c, 3);
  std::fill(m.displacement.base.parameters().begin(), m.displacement.base.parameters().end(), 0.0);
  const Manufactured1D mms = mms_1d();
  const double cc = mms.material().wave_speed();
  const auto pts = points_for(LossTag::pde, 1, 5, 15);
  double expect = 0.0;
  for (const Point& p : pts) {
    const double x = p[kCoordX];
    const double t = p[kCoordT];
    const double q = 0.5 * (x + 1.0);
    const double th = std::tanh(q);
    const double s2 = 1.0 - th * th;
    const double u0xx = -0.5 * s2 * th;                 // d2/dx2 tanh(q)
    const double v0xx = -0.5 * cc * 0.25 * (-2.0 * s2) * (1.0 - 3.0 * th * th);  // d2/dx2 of -c/2 sech^2(q)
    const double r = -cc * cc * (u0xx + t * v0xx);
    expect += r * r;
  }
  expect /= pts.size();
  auto u = [&](const Point& p) { return m.displacement.evaluate<double>(p, m.displacement.base.parameters()); };
  auto psi = [&](const Point& p) { return m.state.evaluate<double>(p, m.state.base.parameters()); };
  // Same residual with the manufactured source subtracted back out.
  double got = 0.0;
  for (const Point& p : pts) {
    const double r = residual_1d<double>(LossTag::pde, p, u(p), psi(p), mms) + mms.source(p);
    got += r * r;
  }
  got /= pts.size();
  CHECK(got == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("single point loss is the squared residual") {
  const Manufactured2D mms = mms_2d();
  const Point p{3.0, 0.0, 0.4};
  auto u = [&](const Point& q) {
    FieldJet<double> j = mms.displacement(q);
    j.d[kCoordZ] += 0.01;
    return j;
  };
  const double r = -mms.material().mu * 0.01;
  CHECK(loss_2d_forward<double>(LossTag::surface, std::span<const Point>(&p, 1), u, mms) ==
        doctest::Approx(r * r).epsilon(1e-12));
}

TEST_CASE("batched 1D losses match the scalar tape in value and gradient") {
  const Manufactured1D mms = mms_1d();
  for (Enforcement e : {Enforcement::hard, Enforcement::soft}) {
    const Model1D m = make_model_1d(small_1d(e), 21);
    const std::size_t nu = m.displacement.base.parameter_count();
    const std::size_t np = m.state.base.parameter_count();
    for (LossTag tag : {LossTag::pde, LossTag::fault, LossTag::remote, LossTag::ic_disp, LossTag::ic_vel,
                        LossTag::state, LossTag::ic_state}) {
      CAPTURE(tag_name(tag, 1));
      const auto pts = points_for(tag, 1, 4, 22);
      const Gradient ref = tape_loss_1d(tag, pts, m, mms);
      std::vector<double> gu(nu, 0.0);
      std::vector<double> gp(np, 0.0);
      const bool state_tag = tag == LossTag::state || tag == LossTag::ic_state;
      const ParamGrads g{state_tag ? std::span<double>() : std::span<double>(gu),
                         state_tag ? std::span<double>(gp) : std::span<double>(), {}};
      const double v = component_loss_1d(tag, pts, m, mms, &g);
      CHECK(v == doctest::Approx(ref.value).epsilon(1e-11));
      const std::span<const double> ref_u(ref.entries.data(), nu);
      const std::span<const double> ref_p(ref.entries.data() + nu, np);
      if (state_tag) {
        CHECK(max_rel_diff(gp, ref_p) <= 1e-10);
      } else {
        CHECK(max_rel_diff(gu, ref_u) <= 1e-10);
      }
    }
  }
}

TEST_CASE("batched 2D losses match the scalar tape in value and gradient") {
  const Manufactured2D mms = mms_2d();
  for (ProblemMode mode : {ProblemMode::forward, ProblemMode::inverse}) {
    for (Enforcement e : {Enforcement::hard, Enforcement::soft}) {
      const Model2D m = make_model_2d(small_2d(mode, e), 31);
      const std::size_t nu = m.displacement.base.parameter_count();
      const std::size_t na = m.friction ? m.friction->base.parameter_count() : 0;
      for (LossTag tag : {LossTag::pde, LossTag::fault, LossTag::surface, LossTag::remote, LossTag::depth,
                          LossTag::ic_disp, LossTag::ic_vel}) {
        CAPTURE(tag_name(tag, 2));
        CAPTURE(to_string(mode));
        const auto pts = points_for(tag, 2, 3, 32);
        const Gradient ref = tape_loss_2d(tag, pts, m, mms);
        std::vector<double> g(nu + na, 0.0);
        const ParamGrads pg{std::span<double>(g).subspan(0, nu), {}, std::span<double>(g).subspan(nu, na)};
        const double v = component_loss_2d(tag, pts, m, mms, &pg);
        CHECK(v == doctest::Approx(ref.value).epsilon(1e-11));
        CHECK(max_rel_diff(g, ref.entries) <= 1e-10);
        if (mode == ProblemMode::inverse && tag == LossTag::fault) {
          const bool nonzero = std::any_of(g.begin() + nu, g.end(), [](double x) { return x != 0.0; });
          CHECK(nonzero);
        }
      }
    }
  }
}

TEST_CASE("batched loss gradient matches central differences") {
  const Manufactured2D mms = mms_2d();
  Model2D m = make_model_2d(small_2d(ProblemMode::inverse, Enforcement::hard), 41);
  const auto pts = points_for(LossTag::fault, 2, 6, 42);
  const std::size_t nu = m.displacement.base.parameter_count();
  const std::size_t na = m.friction->base.parameter_count();
  std::vector<double> g(nu + na, 0.0);
  const ParamGrads pg{std::span<double>(g).subspan(0, nu), {}, std::span<double>(g).subspan(nu, na)};
  component_loss_2d(LossTag::fault, pts, m, mms, &pg);
  std::mt19937_64 rng(43);
  std::uniform_int_distribution<std::size_t> pick(0, nu + na - 1);
  int checked = 0;
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t k = pick(rng);
    double& slot = k < nu ? m.displacement.base.parameters()[k] : m.friction->base.parameters()[k - nu];
    const double keep = slot;
    const double h = 1e-6 * std::max(1.0, std::abs(keep));
    slot = keep + h;
    const double up = component_loss_2d(LossTag::fault, pts, m, mms);
    slot = keep - h;
    const double dn = component_loss_2d(LossTag::fault, pts, m, mms);
    slot = keep;
    const double fd = (up - dn) / (2.0 * h);
    if (std::abs(fd) < 1e-8 && std::abs(g[k]) < 1e-8) continue;  // relu dead units
    CAPTURE(k);
    CHECK(g[k] == doctest::Approx(fd).epsilon(1e-5));
    ++checked;
  }
  CHECK(checked > 10);
}

TEST_CASE("component losses are invariant under point permutation") {
  const Manufactured2D mms = mms_2d();
  const Model2D m = make_model_2d(small_2d(ProblemMode::forward, Enforcement::hard), 51);
  auto pts = points_for(LossTag::pde, 2, 20, 52);
  const double a = component_loss_2d(LossTag::pde, pts, m, mms);
  std::reverse(pts.begin(), pts.end());
  std::rotate(pts.begin(), pts.begin() + 7, pts.end());
  CHECK(component_loss_2d(LossTag::pde, pts, m, mms) == doctest::Approx(a).epsilon(1e-13));
}

TEST_CASE("soft and hard residuals agree for the same trial values") {
  // A soft (raw) trial function equal to the hard one pointwise produces the
  // same non-IC residuals.
  const Manufactured2D mms = mms_2d();
  const Model2D hard = make_model_2d(small_2d(ProblemMode::forward, Enforcement::hard), 61);
  const auto pts = points_for(LossTag::remote, 2, 10, 62);
  auto wrapped = [&](const Point& p) {
    return hard.displacement.evaluate<double>(p, hard.displacement.base.parameters());
  };
  const double via_hard = loss_2d_forward<double>(LossTag::remote, pts, wrapped, mms);
  CHECK(component_loss_2d(LossTag::remote, pts, hard, mms) == doctest::Approx(via_hard).epsilon(1e-12));
}

TEST_CASE("sampling geometry and determinism") {
  const Domain d{25.0, 25.0, 1.0};
  const auto specs = subdomains_2d(d, CollocationCounts{400, 100, 200, 0}, true);
  for (const auto& s : specs) {
    Rng a(7);
    Rng b(7);
    const auto p = sample(s, a);
    CHECK(p == sample(s, b));
    CHECK(static_cast<int>(p.size()) == s.count);
    for (const Point& q : p) {
      CHECK(q[kCoordX] >= 0.0);
      CHECK(q[kCoordX] <= 25.0);
      CHECK(q[kCoordZ] >= 0.0);
      CHECK(q[kCoordZ] <= 25.0);
      CHECK(q[kCoordT] >= 0.0);
      CHECK(q[kCoordT] <= 1.0);
      if (s.tag == LossTag::fault) CHECK(q[kCoordX] == 0.0);
      if (s.tag == LossTag::surface) CHECK(q[kCoordZ] == 0.0);
      if (s.tag == LossTag::remote) CHECK(q[kCoordX] == 25.0);
      if (s.tag == LossTag::depth) CHECK(q[kCoordZ] == 25.0);
      if (s.tag == LossTag::ic_disp || s.tag == LossTag::ic_vel) CHECK(q[kCoordT] == 0.0);
    }
  }
  const auto hard = subdomains_2d(d, CollocationCounts{400, 100, 200, 0}, false);
  CHECK(hard.size() == 5);
  CHECK(specs.size() == 7);
}

TEST_CASE("1D objectives are split between the two networks") {
  const Domain d{1.0, 0.0, 1.0};
  const CollocationCounts n{100, 25, 25, 25};
  for (bool soft : {false, true}) {
    for (const auto& s : displacement_subdomains_1d(d, n, soft)) {
      CHECK(s.tag != LossTag::state);
      CHECK(s.tag != LossTag::ic_state);
    }
    for (const auto& s : state_subdomains_1d(d, n, soft)) {
      CHECK((s.tag == LossTag::state || s.tag == LossTag::ic_state));
    }
  }
}
