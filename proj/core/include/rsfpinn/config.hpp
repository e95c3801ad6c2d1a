#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "rsfpinn/lbfgs.hpp"
#include "rsfpinn/losses.hpp"
#include "rsfpinn/network.hpp"
#include "rsfpinn/physics.hpp"
#include "rsfpinn/sampling.hpp"

namespace rsfpinn {

struct NetworkSpec {
  std::vector<int> hidden;
  std::vector<Activation> activations;
  double output_scale = 1.0;       ///< multiplies the raw network output
  double soft_output_scale = 1.0;  ///< replaces output_scale under soft enforcement

  double scale_for(Enforcement e) const { return e == Enforcement::soft ? soft_output_scale : output_scale; }
};

struct EvalOptions {
  int points = 1000;                                ///< random points for relative errors and MSE
  std::vector<int> quadrature_intervals{8, 16, 32, 64};
  int outer_samples = 100;                          ///< random points outside each integration domain
  int field_resolution = 51;                        ///< per axis, field-grid CSV
  int profile_points = 200;                         ///< depths in the inferred-alpha CSV
  int state_grid = 1001;                            ///< uniform times for the 1D state error
};

/// Everything that determines an experiment.
struct ProblemConfig {
  int dimension = 2;
  ProblemMode mode = ProblemMode::forward;
  Enforcement enforcement = Enforcement::hard;
  int iterations = 30;
  CollocationCounts counts;
  NetworkSpec displacement_net;
  NetworkSpec state_net;     ///< 1D only
  NetworkSpec friction_net;  ///< 2D inverse only
  LbfgsOptions optimizer;
  MaterialParams material;
  FrictionParams friction;
  Domain domain;
  std::vector<std::uint64_t> seeds{1};
  EvalOptions eval;
  int threads = 1;
  std::string out_dir = "out";

  void validate() const;
};

/// Defaults of the 1D illustration or the 2D verification problem.
ProblemConfig default_config(int dimension);

/// Flat `dotted.key = value` pairs; the inverse of apply_setting.
std::map<std::string, std::string> to_settings(const ProblemConfig& c);

/// Sets one key. Unknown keys and unparsable values throw.
void apply_setting(ProblemConfig& c, const std::string& key, const std::string& value);

void write_config(std::ostream& os, const ProblemConfig& c);

/// Reads `key = value` lines ('#' starts a comment) over `base`. A
/// `dimension` key, when present, first resets `base` to that dimension's
/// defaults.
ProblemConfig read_config(std::istream& is, ProblemConfig base);

std::string format_double(double v);

}  // namespace rsfpinn
