#include "rsfpinn/runner.hpp"

#include <fstream>
#include <mutex>
#include <optional>
#include <ostream>
#include <thread>

namespace rsfpinn {

namespace fs = std::filesystem;

namespace {

std::ofstream open_out(const fs::path& p) {
  std::ofstream os(p);
  if (!os) throw std::runtime_error("cannot write " + p.string());
  return os;
}

template <class F>
void for_each_index(std::size_t n, int threads, F&& fn) {
  std::mutex mu;
  std::size_t next = 0;
  auto worker = [&] {
    for (;;) {
      std::size_t i = 0;
      {
        const std::lock_guard<std::mutex> lock(mu);
        if (next >= n) return;
        i = next++;
      }
      fn(i);
    }
  };
  const int k = std::clamp(threads, 1, static_cast<int>(std::max<std::size_t>(n, 1)));
  if (k == 1) {
    worker();
    return;
  }
  std::vector<std::jthread> pool;
  for (int t = 0; t < k; ++t) pool.emplace_back(worker);
}

std::string seed_tag(std::uint64_t seed) { return "seed" + std::to_string(seed); }

}  // namespace

RunOutcome run_experiment(const ProblemConfig& c, std::ostream& log) {
  c.validate();
  RunOutcome out;
  out.ensemble.config = c;
  const fs::path dir(c.out_dir);
  fs::create_directories(dir / "checkpoints");
  {
    const fs::path p = dir / "config.txt";
    std::ofstream os = open_out(p);
    write_config(os, c);
    out.artifacts.push_back(p);
  }

  std::mutex mu;
  std::vector<std::optional<ErrorReport>> reports(c.seeds.size());
  std::vector<std::string> errors(c.seeds.size());
  std::vector<std::vector<fs::path>> files(c.seeds.size());

  for_each_index(c.seeds.size(), c.threads, [&](std::size_t i) {
    const std::uint64_t seed = c.seeds[i];
    const std::string tag = seed_tag(seed);
    const fs::path log_path = dir / ("training_log_" + tag + ".csv");
    files[i].push_back(log_path);
    auto write_log = [&](const TrainRun& r) {
      std::ofstream os = open_out(log_path);
      write_training_log(os, r);
    };
    try {
      TrainRun run;
      run.config = c;
      run.seed = seed;
      write_log(run);
      run = train(c, seed, write_log);
      write_log(run);

      const TrialFunction* disp = nullptr;
      std::vector<std::pair<std::string, const Mlp*>> nets;
      BatchField exact;
      if (run.model1d) {
        disp = &run.model1d->displacement;
        nets = {{"displacement", &run.model1d->displacement.base}, {"state", &run.model1d->state.base}};
        const Manufactured1D mms(c.material, c.friction);
        exact = field_of([mms](const Point& p) { return mms.displacement(p).v; });
      } else {
        disp = &run.model2d->displacement;
        nets = {{"displacement", &run.model2d->displacement.base}};
        if (run.model2d->friction) nets.emplace_back("friction", &run.model2d->friction->base);
        const Manufactured2D mms(c.material, c.friction, c.domain);
        exact = field_of([mms](const Point& p) { return mms.displacement(p).v; });
      }
      for (const auto& [name, net] : nets) {
        const fs::path p = dir / "checkpoints" / (tag + "_" + name + ".ckpt");
        save_checkpoint(p.string(), *net);
        files[i].push_back(p);
      }
      {
        const fs::path p = dir / ("field_grid_" + tag + ".csv");
        std::ofstream os = open_out(p);
        write_field_grid(os, field_grid(field_of(*disp), exact, c.domain, c.eval.field_resolution, c.domain.t_final));
        files[i].push_back(p);
      }
      if (run.model2d && run.model2d->friction) {
        const fs::path p = dir / ("alpha_profile_" + tag + ".csv");
        std::ofstream os = open_out(p);
        write_alpha_profile(os, *run.model2d->friction, Manufactured2D(c.material, c.friction, c.domain), c.domain,
                            c.eval.profile_points);
        files[i].push_back(p);
      }
      reports[i] = evaluate_run(run);
      const std::lock_guard<std::mutex> lock(mu);
      log << tag << ": rel_l2_displacement " << reports[i]->rel_l2_displacement;
      if (reports[i]->rel_l2_alpha) log << ", rel_l2_alpha " << *reports[i]->rel_l2_alpha;
      if (reports[i]->abs_state_error) log << ", max state error " << *reports[i]->abs_state_error;
      log << '\n';
    } catch (const TrainingAborted& e) {
      errors[i] = e.what();
      const std::lock_guard<std::mutex> lock(mu);
      log << tag << ": " << e.what() << '\n';
    }
  });

  for (std::size_t i = 0; i < c.seeds.size(); ++i) {
    out.artifacts.insert(out.artifacts.end(), files[i].begin(), files[i].end());
    if (reports[i]) {
      out.ensemble.runs.push_back(std::move(*reports[i]));
    } else {
      ++out.ensemble.failures;
      out.ensemble.failure_messages.push_back(seed_tag(c.seeds[i]) + ": " + errors[i]);
    }
  }
  if (!out.ensemble.runs.empty()) {
    out.ensemble.mean = average_reports(out.ensemble.runs);
    const fs::path p = dir / "errors.csv";
    std::ofstream os = open_out(p);
    write_error_reports(os, out.ensemble);
    out.artifacts.push_back(p);
  }
  out.exit_code = out.ensemble.failures == 0 ? 0 : 2;
  return out;
}

Table2 reproduce_table2(const ProblemConfig& base, int n_seeds, std::ostream& log) {
  if (n_seeds < 1) throw std::invalid_argument("reproduce_table2: need at least one seed");
  if (base.dimension != 2) throw std::invalid_argument("reproduce_table2: needs a 2D configuration");
  std::vector<std::uint64_t> seeds(n_seeds);
  for (int i = 0; i < n_seeds; ++i) seeds[i] = static_cast<std::uint64_t>(i + 1);
  Table2 t;
  t.seeds = n_seeds;
  auto run = [&](ProblemMode m, Enforcement e) {
    ProblemConfig c = base;
    c.mode = m;
    c.enforcement = e;
    c.seeds = seeds;
    log << "table2: " << to_string(m) << '/' << to_string(e) << " over " << n_seeds << " seeds\n";
    EnsembleReport r = train_ensemble(c, seeds, c.threads);
    log << "  mean rel_l2_displacement " << r.mean.rel_l2_displacement;
    if (r.mean.rel_l2_alpha) log << ", rel_l2_alpha " << *r.mean.rel_l2_alpha;
    log << ", failures " << r.failures << '\n';
    return r;
  };
  t.forward_soft = run(ProblemMode::forward, Enforcement::soft);
  t.forward_hard = run(ProblemMode::forward, Enforcement::hard);
  t.inverse_soft = run(ProblemMode::inverse, Enforcement::soft);
  t.inverse_hard = run(ProblemMode::inverse, Enforcement::hard);
  return t;
}

void write_table2(std::ostream& os, const Table2& t) {
  struct Row {
    std::string name;
    std::function<std::optional<double>(const ErrorReport&)> get;
  };
  std::vector<Row> rows{
      {"rel_l2_displacement", [](const ErrorReport& r) { return std::optional<double>(r.rel_l2_displacement); }},
      {"rel_l2_alpha", [](const ErrorReport& r) { return r.rel_l2_alpha; }},
  };
  for (LossTag tag : {LossTag::pde, LossTag::fault, LossTag::surface, LossTag::depth, LossTag::remote,
                      LossTag::ic_disp, LossTag::ic_vel}) {
    rows.push_back({"mse_" + std::string(tag_name(tag, 2)), [tag](const ErrorReport& r) { return r.mse_of(tag); }});
  }
  auto cell = [](const std::optional<double>& v) {
    if (!v) return std::string();
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3e", *v);
    return std::string(buf);
  };
  auto ratio = [](const std::optional<double>& soft, const std::optional<double>& hard) -> std::optional<double> {
    if (!soft || !hard || !(*hard > 0.0)) return std::nullopt;
    return *soft / *hard;
  };
  os << "error,forward_soft,forward_hard,forward_ratio,inverse_soft,inverse_hard,inverse_ratio\n";
  for (const Row& r : rows) {
    const auto fs_ = r.get(t.forward_soft.mean);
    const auto fh = r.get(t.forward_hard.mean);
    const auto is = r.get(t.inverse_soft.mean);
    const auto ih = r.get(t.inverse_hard.mean);
    os << r.name << ',' << cell(fs_) << ',' << cell(fh) << ',' << cell(ratio(fs_, fh)) << ',' << cell(is) << ','
       << cell(ih) << ',' << cell(ratio(is, ih)) << '\n';
  }
}

std::vector<fs::path> write_table2_files(const fs::path& dir, const Table2& t) {
  fs::create_directories(dir);
  std::vector<fs::path> out;
  {
    const fs::path p = dir / "table2.csv";
    std::ofstream os = open_out(p);
    write_table2(os, t);
    out.push_back(p);
  }
  {
    const fs::path p = dir / "table2_metadata.txt";
    std::ofstream os = open_out(p);
    os << "seeds = " << t.seeds << '\n'
       << "seed_list = 1.." << t.seeds << '\n'
       << "note = entries are arithmetic means over the seeds; the seed count is a runtime compromise\n"
       << "failures = forward_soft:" << t.forward_soft.failures << " forward_hard:" << t.forward_hard.failures
       << " inverse_soft:" << t.inverse_soft.failures << " inverse_hard:" << t.inverse_hard.failures << '\n';
    write_config(os, t.inverse_hard.config);
    out.push_back(p);
  }
  for (const EnsembleReport* e : {&t.forward_soft, &t.forward_hard, &t.inverse_soft, &t.inverse_hard}) {
    const fs::path p = dir / ("errors_" + std::string(to_string(e->config.mode)) + "_" +
                              std::string(to_string(e->config.enforcement)) + ".csv");
    std::ofstream os = open_out(p);
    write_error_reports(os, *e);
    out.push_back(p);
  }
  return out;
}

}  // namespace rsfpinn
