#include "rsfpinn/sampling.hpp"

namespace rsfpinn {

std::string_view tag_name(LossTag tag, int dimension) {
  switch (tag) {
    case LossTag::pde:
      return "pde";
    case LossTag::fault:
      return dimension == 1 ? "x0" : "fault";
    case LossTag::surface:
      return "surface";
    case LossTag::remote:
      return dimension == 1 ? "x1" : "remote";
    case LossTag::depth:
      return "depth";
    case LossTag::ic_disp:
      return "u0";
    case LossTag::ic_vel:
      return "v0";
    case LossTag::state:
      return "state";
    case LossTag::ic_state:
      return "psi0";
  }
  return "?";
}

std::vector<Point> sample(const SubdomainSpec& spec, Rng& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<Point> pts(static_cast<std::size_t>(spec.count));
  for (Point& p : pts) {
    for (int c = 0; c < 3; ++c) {
      const Interval& r = spec.ranges[c];
      p[c] = r.lo == r.hi ? r.lo : r.lo + (r.hi - r.lo) * (1.0 - unit(rng));
    }
  }
  return pts;
}

namespace {

SubdomainSpec make(LossTag tag, Interval x, Interval z, Interval t, int count) {
  return SubdomainSpec{tag, {x, z, t}, count};
}

}  // namespace

std::vector<SubdomainSpec> displacement_subdomains_1d(const Domain& d, const CollocationCounts& n, bool soft) {
  const Interval x{0.0, d.lx};
  const Interval z{0.0, 0.0};
  const Interval t{0.0, d.t_final};
  std::vector<SubdomainSpec> specs{
      make(LossTag::pde, x, z, t, n.interior),
      make(LossTag::fault, {0.0, 0.0}, z, t, n.boundary),
      make(LossTag::remote, {d.lx, d.lx}, z, t, n.boundary),
  };
  if (soft) {
    specs.push_back(make(LossTag::ic_disp, x, z, {0.0, 0.0}, n.ic));
    specs.push_back(make(LossTag::ic_vel, x, z, {0.0, 0.0}, n.ic));
  }
  return specs;
}

std::vector<SubdomainSpec> state_subdomains_1d(const Domain& d, const CollocationCounts& n, bool soft) {
  std::vector<SubdomainSpec> specs{
      make(LossTag::state, {0.0, 0.0}, {0.0, 0.0}, {0.0, d.t_final}, n.state),
  };
  if (soft) {
    specs.push_back(make(LossTag::ic_state, {0.0, 0.0}, {0.0, 0.0}, {0.0, 0.0}, n.ic));
  }
  return specs;
}

std::vector<SubdomainSpec> subdomains_1d(const Domain& d, const CollocationCounts& n, bool soft) {
  auto specs = displacement_subdomains_1d(d, n, soft);
  auto state = state_subdomains_1d(d, n, soft);
  specs.insert(specs.end(), state.begin(), state.end());
  return specs;
}

std::vector<SubdomainSpec> subdomains_2d(const Domain& d, const CollocationCounts& n, bool soft) {
  const Interval x{0.0, d.lx};
  const Interval z{0.0, d.lz};
  const Interval t{0.0, d.t_final};
  std::vector<SubdomainSpec> specs{
      make(LossTag::pde, x, z, t, n.interior),
      make(LossTag::fault, {0.0, 0.0}, z, t, n.boundary),
      make(LossTag::surface, x, {0.0, 0.0}, t, n.boundary),
      make(LossTag::remote, {d.lx, d.lx}, z, t, n.boundary),
      make(LossTag::depth, x, {d.lz, d.lz}, t, n.boundary),
  };
  if (soft) {
    specs.push_back(make(LossTag::ic_disp, x, z, {0.0, 0.0}, n.ic));
    specs.push_back(make(LossTag::ic_vel, x, z, {0.0, 0.0}, n.ic));
  }
  return specs;
}

}  // namespace rsfpinn
