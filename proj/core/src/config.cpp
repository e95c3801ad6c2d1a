#include "rsfpinn/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <functional>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace rsfpinn {

namespace {

NetworkSpec uniform_net(int width, int depth, Activation a) {
  return NetworkSpec{std::vector<int>(depth, width), std::vector<Activation>(depth, a)};
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value) {
  throw std::invalid_argument("config: invalid value '" + value + "' for key '" + key + "'");
}

double parse_double(const std::string& key, const std::string& v) {
  char* end = nullptr;
  const double d = std::strtod(v.c_str(), &end);
  if (v.empty() || end != v.c_str() + v.size()) bad_value(key, v);
  return d;
}

long long parse_int(const std::string& key, const std::string& v) {
  long long x = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc() || ptr != v.data() + v.size()) bad_value(key, v);
  return x;
}

template <class T, class F>
std::string join(const std::vector<T>& xs, F&& fmt) {
  std::string s;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) s += ',';
    s += fmt(xs[i]);
  }
  return s;
}

std::string join_ints(const std::vector<int>& xs) {
  return join(xs, [](int v) { return std::to_string(v); });
}

}  // namespace

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

ProblemConfig default_config(int dimension) {
  ProblemConfig c;
  c.dimension = dimension;
  c.mode = ProblemMode::forward;
  c.enforcement = Enforcement::hard;
  if (dimension == 1) {
    c.iterations = 10;
    c.counts = CollocationCounts{100, 25, 25, 100};
    c.displacement_net = uniform_net(64, 3, Activation::tanh);
    c.state_net = uniform_net(64, 3, Activation::tanh);
    // The state spans hundreds of units over [0, T]; a unit-scale output
    // leaves the network unable to reach it within the budget.
    c.state_net.output_scale = 20.0;
    c.state_net.soft_output_scale = 100.0;
    c.optimizer.max_evals = 50;
    c.domain = Domain{1.0, 0.0, 1.0};
  } else if (dimension == 2) {
    c.iterations = 30;
    c.counts = CollocationCounts{400, 100, 200, 0};
    c.displacement_net = uniform_net(128, 3, Activation::tanh);
    // Under hard enforcement the network only carries the t^2 remainder,
    // of order c^2 / 800; under soft enforcement it carries u itself.
    c.displacement_net.output_scale = 0.01;
    c.displacement_net.soft_output_scale = 0.1;
    c.friction_net = NetworkSpec{{128, 128, 128}, {Activation::relu, Activation::silu, Activation::relu}};
    c.domain = Domain{25.0, 25.0, 1.0};
  } else {
    throw std::invalid_argument("dimension must be 1 or 2");
  }
  return c;
}

void ProblemConfig::validate() const {
  if (dimension != 1 && dimension != 2) throw std::invalid_argument("config: dimension must be 1 or 2");
  if (dimension == 1 && mode == ProblemMode::inverse) {
    throw std::invalid_argument("config: the 1D problem supports the forward mode only");
  }
  if (iterations < 0) throw std::invalid_argument("config: iterations must be >= 0");
  if (counts.interior <= 0 || counts.boundary <= 0) {
    throw std::invalid_argument("config: collocation counts must be positive");
  }
  if (enforcement == Enforcement::soft && counts.ic <= 0) {
    throw std::invalid_argument("config: soft enforcement needs counts.ic > 0");
  }
  if (dimension == 1 && counts.state <= 0) throw std::invalid_argument("config: counts.state must be positive");
  if (!(domain.lx > 0.0) || !(domain.t_final > 0.0) || (dimension == 2 && !(domain.lz > 0.0))) {
    throw std::invalid_argument("config: domain extents must be positive");
  }
  auto check_net = [](const NetworkSpec& n, const char* name) {
    if (n.hidden.empty() || n.hidden.size() != n.activations.size()) {
      throw std::invalid_argument(std::string("config: network '") + name +
                                  "' needs one activation per hidden layer");
    }
    if (!(n.output_scale > 0.0) || !std::isfinite(n.output_scale) || !(n.soft_output_scale > 0.0) ||
        !std::isfinite(n.soft_output_scale)) {
      throw std::invalid_argument(std::string("config: network '") + name + "' needs a positive output scale");
    }
    for (int w : n.hidden) {
      if (w <= 0) throw std::invalid_argument(std::string("config: network '") + name + "' has a non-positive width");
    }
  };
  check_net(displacement_net, "displacement");
  if (dimension == 1) check_net(state_net, "state");
  if (dimension == 2 && mode == ProblemMode::inverse) check_net(friction_net, "friction");
  if (seeds.empty()) throw std::invalid_argument("config: at least one seed is required");
  if (threads < 0) throw std::invalid_argument("config: threads must be >= 0");
  if (eval.points <= 0 || eval.outer_samples <= 0 || eval.field_resolution < 2 || eval.profile_points < 2) {
    throw std::invalid_argument("config: evaluation sizes must be positive");
  }
  for (int n : eval.quadrature_intervals) {
    if (n <= 0 || n % 2 != 0) throw std::invalid_argument("config: quadrature intervals must be even and positive");
  }
  material.validate();
  friction.validate();
  Lbfgs check(optimizer);
  (void)check;
}

std::map<std::string, std::string> to_settings(const ProblemConfig& c) {
  std::map<std::string, std::string> s;
  auto d = [](double v) { return format_double(v); };
  auto acts = [](const std::vector<Activation>& a) {
    return join(a, [](Activation x) { return std::string(to_string(x)); });
  };
  s["dimension"] = std::to_string(c.dimension);
  s["mode"] = std::string(to_string(c.mode));
  s["enforcement"] = std::string(to_string(c.enforcement));
  s["iterations"] = std::to_string(c.iterations);
  s["counts.interior"] = std::to_string(c.counts.interior);
  s["counts.boundary"] = std::to_string(c.counts.boundary);
  s["counts.ic"] = std::to_string(c.counts.ic);
  s["counts.state"] = std::to_string(c.counts.state);
  s["net.displacement.hidden"] = join_ints(c.displacement_net.hidden);
  s["net.displacement.activations"] = acts(c.displacement_net.activations);
  s["net.displacement.output_scale"] = d(c.displacement_net.output_scale);
  s["net.displacement.soft_output_scale"] = d(c.displacement_net.soft_output_scale);
  s["net.state.hidden"] = join_ints(c.state_net.hidden);
  s["net.state.activations"] = acts(c.state_net.activations);
  s["net.state.output_scale"] = d(c.state_net.output_scale);
  s["net.state.soft_output_scale"] = d(c.state_net.soft_output_scale);
  s["net.friction.hidden"] = join_ints(c.friction_net.hidden);
  s["net.friction.activations"] = acts(c.friction_net.activations);
  s["net.friction.output_scale"] = d(c.friction_net.output_scale);
  s["optimizer.history"] = std::to_string(c.optimizer.history);
  s["optimizer.c1"] = d(c.optimizer.c1);
  s["optimizer.c2"] = d(c.optimizer.c2);
  s["optimizer.initial_step"] = d(c.optimizer.initial_step);
  s["optimizer.max_line_search"] = std::to_string(c.optimizer.max_line_search);
  s["optimizer.max_evals"] = std::to_string(c.optimizer.max_evals);
  s["optimizer.grad_tol"] = d(c.optimizer.grad_tol);
  s["optimizer.rel_loss_tol"] = d(c.optimizer.rel_loss_tol);
  s["material.mu"] = d(c.material.mu);
  s["material.rho"] = d(c.material.rho);
  s["friction.a"] = d(c.friction.a);
  s["friction.b"] = d(c.friction.b);
  s["friction.dc"] = d(c.friction.dc);
  s["friction.f0"] = d(c.friction.f0);
  s["friction.v0"] = d(c.friction.v0);
  s["friction.sigma_n"] = d(c.friction.sigma_n);
  s["friction.alpha_min"] = d(c.friction.alpha_min);
  s["friction.alpha_max"] = d(c.friction.alpha_max);
  s["friction.depth_h"] = d(c.friction.depth_h);
  s["friction.depth_d"] = d(c.friction.depth_d);
  s["domain.lx"] = d(c.domain.lx);
  s["domain.lz"] = d(c.domain.lz);
  s["domain.t_final"] = d(c.domain.t_final);
  s["seeds"] = join(c.seeds, [](std::uint64_t v) { return std::to_string(v); });
  s["eval.points"] = std::to_string(c.eval.points);
  s["eval.quadrature_intervals"] = join_ints(c.eval.quadrature_intervals);
  s["eval.outer_samples"] = std::to_string(c.eval.outer_samples);
  s["eval.field_resolution"] = std::to_string(c.eval.field_resolution);
  s["eval.profile_points"] = std::to_string(c.eval.profile_points);
  s["eval.state_grid"] = std::to_string(c.eval.state_grid);
  s["threads"] = std::to_string(c.threads);
  s["out_dir"] = c.out_dir;
  return s;
}

void apply_setting(ProblemConfig& c, const std::string& key, const std::string& value) {
  const std::string v = trim(value);
  auto ints = [&](const std::string& k) {
    std::vector<int> out;
    for (const auto& item : split_list(v)) out.push_back(static_cast<int>(parse_int(k, item)));
    return out;
  };
  auto acts = [&]() {
    std::vector<Activation> out;
    for (const auto& item : split_list(v)) out.push_back(parse_activation(item));
    return out;
  };
  auto dbl = [&](double& target) { target = parse_double(key, v); };
  auto integer = [&](int& target) { target = static_cast<int>(parse_int(key, v)); };

  static const std::map<std::string, std::function<void(ProblemConfig&, const std::function<void(double&)>&,
                                                        const std::function<void(int&)>&)>>
      numeric = {
          {"iterations", [](ProblemConfig& p, auto&, auto& i) { i(p.iterations); }},
          {"counts.interior", [](ProblemConfig& p, auto&, auto& i) { i(p.counts.interior); }},
          {"counts.boundary", [](ProblemConfig& p, auto&, auto& i) { i(p.counts.boundary); }},
          {"counts.ic", [](ProblemConfig& p, auto&, auto& i) { i(p.counts.ic); }},
          {"counts.state", [](ProblemConfig& p, auto&, auto& i) { i(p.counts.state); }},
          {"optimizer.history", [](ProblemConfig& p, auto&, auto& i) { i(p.optimizer.history); }},
          {"optimizer.c1", [](ProblemConfig& p, auto& f, auto&) { f(p.optimizer.c1); }},
          {"optimizer.c2", [](ProblemConfig& p, auto& f, auto&) { f(p.optimizer.c2); }},
          {"optimizer.initial_step", [](ProblemConfig& p, auto& f, auto&) { f(p.optimizer.initial_step); }},
          {"optimizer.max_line_search", [](ProblemConfig& p, auto&, auto& i) { i(p.optimizer.max_line_search); }},
          {"optimizer.max_evals", [](ProblemConfig& p, auto&, auto& i) { i(p.optimizer.max_evals); }},
          {"optimizer.grad_tol", [](ProblemConfig& p, auto& f, auto&) { f(p.optimizer.grad_tol); }},
          {"optimizer.rel_loss_tol", [](ProblemConfig& p, auto& f, auto&) { f(p.optimizer.rel_loss_tol); }},
          {"material.mu", [](ProblemConfig& p, auto& f, auto&) { f(p.material.mu); }},
          {"material.rho", [](ProblemConfig& p, auto& f, auto&) { f(p.material.rho); }},
          {"friction.a", [](ProblemConfig& p, auto& f, auto&) { f(p.friction.a); }},
          {"friction.b", [](ProblemConfig& p, auto& f, auto&) { f(p.friction.b); }},
          {"friction.dc", [](ProblemConfig& p, auto& f, auto&) { f(p.friction.dc); }},
          {"friction.f0", [](ProblemConfig& p, auto& f, auto&) { f(p.friction.f0); }},
          {"friction.v0", [](ProblemConfig& p, auto& f, auto&) { f(p.friction.v0); }},
          {"friction.sigma_n", [](ProblemConfig& p, auto& f, auto&) { f(p.friction.sigma_n); }},
          {"friction.alpha_min", [](ProblemConfig& p, auto& f, auto&) { f(p.friction.alpha_min); }},
          {"friction.alpha_max", [](ProblemConfig& p, auto& f, auto&) { f(p.friction.alpha_max); }},
          {"friction.depth_h", [](ProblemConfig& p, auto& f, auto&) { f(p.friction.depth_h); }},
          {"friction.depth_d", [](ProblemConfig& p, auto& f, auto&) { f(p.friction.depth_d); }},
          {"net.displacement.output_scale", [](ProblemConfig& p, auto& f, auto&) { f(p.displacement_net.output_scale); }},
          {"net.displacement.soft_output_scale", [](ProblemConfig& p, auto& f, auto&) { f(p.displacement_net.soft_output_scale); }},
          {"net.state.output_scale", [](ProblemConfig& p, auto& f, auto&) { f(p.state_net.output_scale); }},
          {"net.state.soft_output_scale", [](ProblemConfig& p, auto& f, auto&) { f(p.state_net.soft_output_scale); }},
          {"net.friction.output_scale", [](ProblemConfig& p, auto& f, auto&) { f(p.friction_net.output_scale); }},
          {"domain.lx", [](ProblemConfig& p, auto& f, auto&) { f(p.domain.lx); }},
          {"domain.lz", [](ProblemConfig& p, auto& f, auto&) { f(p.domain.lz); }},
          {"domain.t_final", [](ProblemConfig& p, auto& f, auto&) { f(p.domain.t_final); }},
          {"eval.points", [](ProblemConfig& p, auto&, auto& i) { i(p.eval.points); }},
          {"eval.outer_samples", [](ProblemConfig& p, auto&, auto& i) { i(p.eval.outer_samples); }},
          {"eval.field_resolution", [](ProblemConfig& p, auto&, auto& i) { i(p.eval.field_resolution); }},
          {"eval.profile_points", [](ProblemConfig& p, auto&, auto& i) { i(p.eval.profile_points); }},
          {"eval.state_grid", [](ProblemConfig& p, auto&, auto& i) { i(p.eval.state_grid); }},
          {"threads", [](ProblemConfig& p, auto&, auto& i) { i(p.threads); }},
      };

  if (auto it = numeric.find(key); it != numeric.end()) {
    it->second(c, dbl, integer);
  } else if (key == "dimension") {
    integer(c.dimension);
  } else if (key == "mode") {
    c.mode = parse_mode(v);
  } else if (key == "enforcement") {
    c.enforcement = parse_enforcement(v);
  } else if (key == "net.displacement.hidden") {
    c.displacement_net.hidden = ints(key);
  } else if (key == "net.displacement.activations") {
    c.displacement_net.activations = acts();
  } else if (key == "net.state.hidden") {
    c.state_net.hidden = ints(key);
  } else if (key == "net.state.activations") {
    c.state_net.activations = acts();
  } else if (key == "net.friction.hidden") {
    c.friction_net.hidden = ints(key);
  } else if (key == "net.friction.activations") {
    c.friction_net.activations = acts();
  } else if (key == "seeds") {
    c.seeds.clear();
    for (const auto& item : split_list(v)) c.seeds.push_back(static_cast<std::uint64_t>(parse_int(key, item)));
  } else if (key == "eval.quadrature_intervals") {
    c.eval.quadrature_intervals = ints(key);
  } else if (key == "out_dir") {
    c.out_dir = v;
  } else {
    throw std::invalid_argument("config: unknown key '" + key + "'");
  }
}

void write_config(std::ostream& os, const ProblemConfig& c) {
  for (const auto& [k, v] : to_settings(c)) {
    os << k << " = " << v << '\n';
  }
}

ProblemConfig read_config(std::istream& is, ProblemConfig base) {
  std::vector<std::pair<std::string, std::string>> entries;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("config: line " + std::to_string(lineno) + " is not 'key = value'");
    }
    entries.emplace_back(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  for (const auto& [k, v] : entries) {
    if (k == "dimension") {
      base = default_config(static_cast<int>(parse_int(k, v)));
    }
  }
  for (const auto& [k, v] : entries) {
    apply_setting(base, k, v);
  }
  return base;
}

}  // namespace rsfpinn
