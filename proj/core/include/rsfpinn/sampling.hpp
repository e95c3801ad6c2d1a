#pragma once

#include <array>
#include <random>
#include <string_view>
#include <vector>

#include "rsfpinn/network.hpp"
#include "rsfpinn/physics.hpp"

namespace rsfpinn {

/// Subdomains on which component losses are evaluated. In 1D, `fault` is the
/// x = 0 boundary and `remote` the x = 1 boundary.
enum class LossTag { pde, fault, surface, remote, depth, ic_disp, ic_vel, state, ic_state };

/// CSV / report name of a tag. 1D boundaries are reported as x0 and x1.
std::string_view tag_name(LossTag tag, int dimension);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

struct SubdomainSpec {
  LossTag tag = LossTag::pde;
  std::array<Interval, 3> ranges{};  ///< x, z, t; lo == hi pins a coordinate
  int count = 0;
};

using Rng = std::mt19937_64;

/// `count` uniform points over the subdomain's ranges. Free coordinates are drawn
/// from the half-open interval (lo, hi].
std::vector<Point> sample(const SubdomainSpec& spec, Rng& rng);

struct CollocationCounts {
  int interior = 100;
  int boundary = 25;  ///< per boundary
  int ic = 0;         ///< per initial condition, soft enforcement only
  int state = 25;     ///< 1D state-evolution points
};

/// Subdomains of the 1D problem on [0, lx] x [0, T]. Initial-condition tags
/// are present only when `soft` is set.
std::vector<SubdomainSpec> subdomains_1d(const Domain& d, const CollocationCounts& n, bool soft);

/// The displacement part (everything except state / ic_state) and the state
/// part of the 1D subdomains.
std::vector<SubdomainSpec> displacement_subdomains_1d(const Domain& d, const CollocationCounts& n, bool soft);
std::vector<SubdomainSpec> state_subdomains_1d(const Domain& d, const CollocationCounts& n, bool soft);

/// Subdomains of the 2D antiplane problem on [0, lx] x [0, lz] x [0, T].
std::vector<SubdomainSpec> subdomains_2d(const Domain& d, const CollocationCounts& n, bool soft);

}  // namespace rsfpinn
