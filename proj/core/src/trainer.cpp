#include "rsfpinn/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace rsfpinn {

double LossReport::component(LossTag tag) const {
  for (const auto& [t, v] : components) {
    if (t == tag) return v;
  }
  throw std::out_of_range("LossReport: component not present");
}

bool TrainRun::monotone() const {
  return std::all_of(optimizer_log.begin(), optimizer_log.end(), [](const OptimizerLog& l) { return l.run.monotone; });
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  // splitmix64 over the pair
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  return mix(mix(seed) ^ (stream * 0xd1b54a32d192ed03ULL));
}

namespace {

Mlp build_net(const NetworkSpec& spec, int inputs, std::uint64_t seed) {
  std::vector<int> dims{inputs};
  dims.insert(dims.end(), spec.hidden.begin(), spec.hidden.end());
  dims.push_back(1);
  return init_xavier(dims, spec.activations, seed);
}

std::vector<double> concat(std::span<const double> a, std::span<const double> b = {}) {
  std::vector<double> v(a.begin(), a.end());
  v.insert(v.end(), b.begin(), b.end());
  return v;
}

void assign(Mlp& net, std::span<const double> theta) {
  std::copy(theta.begin(), theta.end(), net.parameters().begin());
}

[[noreturn]] void abort_component(int iteration, std::string_view component, const std::exception& e) {
  std::ostringstream os;
  os << "training aborted at iteration " << iteration << " in component '" << component << "': " << e.what();
  throw TrainingAborted(os.str());
}

/// Evaluates `fn` for one component, converting numerical failures into
/// TrainingAborted. Non-finite values pass through unless `require_finite`;
/// the line search rejects them on its own.
template <class F>
double guarded(int iteration, std::string_view name, F&& fn, bool require_finite = false) {
  double v = 0.0;
  try {
    v = fn();
  } catch (const DomainError& e) {
    abort_component(iteration, name, e);
  } catch (const AgingOverflow& e) {
    abort_component(iteration, name, e);
  }
  if (require_finite && !std::isfinite(v)) {
    abort_component(iteration, name, NonFiniteLoss("non-finite loss"));
  }
  return v;
}

RunDiagnostics run_optimizer(Lbfgs& opt, std::vector<double>& theta, const Objective& f, int iteration,
                             std::string_view network) {
  try {
    return opt.run(theta, f);
  } catch (const NonFiniteLoss& e) {
    abort_component(iteration, network, e);
  }
}

}  // namespace

std::vector<Batch> draw_batches(std::span<const SubdomainSpec> specs, Rng& rng) {
  std::vector<Batch> out;
  out.reserve(specs.size());
  for (const SubdomainSpec& s : specs) {
    out.push_back(Batch{s.tag, sample(s, rng)});
  }
  return out;
}

Model1D make_model_1d(const ProblemConfig& c, std::uint64_t seed) {
  const Manufactured1D mms(c.material, c.friction);
  const bool hard = c.enforcement == Enforcement::hard;
  Model1D m;
  m.displacement.base = build_net(c.displacement_net, 2, derive_seed(seed, kStreamDisplacementInit));
  m.displacement.map = InputMap{{kCoordX, kCoordT}, {0.0, 0.0}, {c.domain.lx, c.domain.t_final}};
  m.displacement.mode = hard ? TrialMode::hard_ic : TrialMode::raw;
  m.displacement.output_scale = c.displacement_net.scale_for(c.enforcement);
  m.displacement.u0 = mms.initial_displacement();
  m.displacement.v0 = mms.initial_velocity();
  m.state.base = build_net(c.state_net, 1, derive_seed(seed, kStreamAuxiliaryInit));
  m.state.map = InputMap{{kCoordT}, {0.0}, {c.domain.t_final}};
  m.state.mode = hard ? TrialMode::hard_state : TrialMode::raw;
  m.state.output_scale = c.state_net.scale_for(c.enforcement);
  m.state.psi0 = mms.psi0();
  return m;
}

Model2D make_model_2d(const ProblemConfig& c, std::uint64_t seed) {
  const Manufactured2D mms(c.material, c.friction, c.domain);
  Model2D m;
  m.displacement.base = build_net(c.displacement_net, 3, derive_seed(seed, kStreamDisplacementInit));
  m.displacement.map = InputMap{{kCoordX, kCoordZ, kCoordT}, {0.0, 0.0, 0.0}, {c.domain.lx, c.domain.lz, c.domain.t_final}};
  m.displacement.mode = c.enforcement == Enforcement::hard ? TrialMode::hard_ic : TrialMode::raw;
  m.displacement.output_scale = c.displacement_net.scale_for(c.enforcement);
  m.displacement.u0 = mms.initial_displacement();
  m.displacement.v0 = mms.initial_velocity();
  if (c.mode == ProblemMode::inverse) {
    TrialFunction f;
    f.base = build_net(c.friction_net, 1, derive_seed(seed, kStreamAuxiliaryInit));
    f.map = InputMap{{kCoordZ}, {0.0}, {c.domain.lz}};
    f.mode = TrialMode::raw;
    f.output_scale = c.friction_net.output_scale;
    m.friction = std::move(f);
  }
  return m;
}

TrainRun train_1d(const ProblemConfig& c, std::uint64_t seed, const IterationCallback& on_iteration) {
  c.validate();
  if (c.dimension != 1) throw std::invalid_argument("train_1d: config is not one-dimensional");
  const Manufactured1D mms(c.material, c.friction);
  const bool soft = c.enforcement == Enforcement::soft;
  const auto disp_specs = displacement_subdomains_1d(c.domain, c.counts, soft);
  const auto state_specs = state_subdomains_1d(c.domain, c.counts, soft);

  TrainRun run;
  run.config = c;
  run.seed = seed;
  run.model1d = make_model_1d(c, seed);
  Model1D& model = *run.model1d;

  Lbfgs disp_opt(c.optimizer);
  Lbfgs state_opt(c.optimizer);
  Rng rng(derive_seed(seed, kStreamTraining));

  for (int it = 1; it <= c.iterations; ++it) {
    const std::vector<Batch> disp = draw_batches(disp_specs, rng);
    const std::vector<Batch> state = draw_batches(state_specs, rng);

    // State network first, displacement held fixed.
    {
      std::vector<double> theta = concat(model.state.base.parameters());
      const Objective f = [&](std::span<const double> th, std::span<double> grad) {
        assign(model.state.base, th);
        std::fill(grad.begin(), grad.end(), 0.0);
        const ParamGrads g{{}, grad, {}};
        double total = 0.0;
        for (const Batch& b : state) {
          total += guarded(it, tag_name(b.tag, 1), [&] { return component_loss_1d(b.tag, b.points, model, mms, &g); });
        }
        return total;
      };
      run.optimizer_log.push_back({it, "state", run_optimizer(state_opt, theta, f, it, "state")});
      assign(model.state.base, theta);
    }
    // Displacement network, state held fixed.
    {
      std::vector<double> theta = concat(model.displacement.base.parameters());
      const Objective f = [&](std::span<const double> th, std::span<double> grad) {
        assign(model.displacement.base, th);
        std::fill(grad.begin(), grad.end(), 0.0);
        const ParamGrads g{grad, {}, {}};
        double total = 0.0;
        for (const Batch& b : disp) {
          total += guarded(it, tag_name(b.tag, 1), [&] { return component_loss_1d(b.tag, b.points, model, mms, &g); });
        }
        return total;
      };
      run.optimizer_log.push_back({it, "displacement", run_optimizer(disp_opt, theta, f, it, "displacement")});
      assign(model.displacement.base, theta);
    }

    LossReport rep;
    rep.iteration = it;
    for (const auto* batches : {&disp, &state}) {
      for (const Batch& b : *batches) {
        const double v =
            guarded(it, tag_name(b.tag, 1), [&] { return component_loss_1d(b.tag, b.points, model, mms); }, true);
        rep.components.emplace_back(b.tag, v);
        rep.total += v;
      }
    }
    run.history.push_back(std::move(rep));
    if (on_iteration) on_iteration(run);
  }
  return run;
}

TrainRun train_2d(const ProblemConfig& c, std::uint64_t seed, const IterationCallback& on_iteration) {
  c.validate();
  if (c.dimension != 2) throw std::invalid_argument("train_2d: config is not two-dimensional");
  const Manufactured2D mms(c.material, c.friction, c.domain);
  const auto specs = subdomains_2d(c.domain, c.counts, c.enforcement == Enforcement::soft);

  TrainRun run;
  run.config = c;
  run.seed = seed;
  run.model2d = make_model_2d(c, seed);
  Model2D& model = *run.model2d;
  const std::size_t nu = model.displacement.base.parameter_count();
  const std::size_t na = model.friction ? model.friction->base.parameter_count() : 0;

  Lbfgs opt(c.optimizer);
  Rng rng(derive_seed(seed, kStreamTraining));

  auto assign_all = [&](std::span<const double> th) {
    assign(model.displacement.base, th.subspan(0, nu));
    if (model.friction) assign(model.friction->base, th.subspan(nu, na));
  };

  for (int it = 1; it <= c.iterations; ++it) {
    const std::vector<Batch> batches = draw_batches(specs, rng);
    std::vector<double> theta =
        concat(model.displacement.base.parameters(),
               model.friction ? model.friction->base.parameters() : std::span<const double>{});
    const Objective f = [&](std::span<const double> th, std::span<double> grad) {
      assign_all(th);
      std::fill(grad.begin(), grad.end(), 0.0);
      const ParamGrads g{grad.subspan(0, nu), {}, grad.subspan(nu, na)};
      double total = 0.0;
      for (const Batch& b : batches) {
        total += guarded(it, tag_name(b.tag, 2), [&] { return component_loss_2d(b.tag, b.points, model, mms, &g); });
      }
      return total;
    };
    run.optimizer_log.push_back({it, "joint", run_optimizer(opt, theta, f, it, "joint")});
    assign_all(theta);

    LossReport rep;
    rep.iteration = it;
    for (const Batch& b : batches) {
      const double v = guarded(it, tag_name(b.tag, 2), [&] { return component_loss_2d(b.tag, b.points, model, mms); }, true);
      rep.components.emplace_back(b.tag, v);
      rep.total += v;
    }
    run.history.push_back(std::move(rep));
    if (on_iteration) on_iteration(run);
  }
  return run;
}

TrainRun train(const ProblemConfig& c, std::uint64_t seed, const IterationCallback& on_iteration) {
  return c.dimension == 1 ? train_1d(c, seed, on_iteration) : train_2d(c, seed, on_iteration);
}

}  // namespace rsfpinn
