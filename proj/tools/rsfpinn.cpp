// Command-line driver: train and evaluate one configuration, or run the
// forward/inverse x soft/hard comparison with --table2.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <regex>
#include <sstream>

#include "rsfpinn/runner.hpp"

namespace {

rsfpinn::ProblemConfig load(const std::optional<std::string>& path, const std::optional<int>& dimension) {
  using rsfpinn::ProblemConfig;
  if (!path) return rsfpinn::default_config(dimension.value_or(2));
  std::ifstream in(*path);
  if (!in) throw std::invalid_argument("cannot read config file " + *path);
  std::stringstream text;
  text << in.rdbuf();
  std::string body = text.str();
  if (dimension) {
    // The flag replaces any dimension key so defaults follow the flag.
    static const std::regex key(R"((^|\n)[ \t]*dimension[ \t]*=[^\n]*)");
    body = std::regex_replace(body, key, "$1# dimension overridden");
    body = "dimension = " + std::to_string(*dimension) + "\n" + body;
  }
  std::istringstream is(body);
  return rsfpinn::read_config(is, rsfpinn::default_config(dimension.value_or(2)));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"PINN solver for antiplane fault problems with rate-and-state friction"};
  std::optional<std::string> config_path;
  std::optional<int> dimension;
  std::optional<std::string> mode;
  std::optional<std::string> enforcement;
  std::optional<int> iterations;
  std::optional<std::string> seeds;
  std::optional<std::string> out_dir;
  std::optional<int> threads;
  std::optional<int> table2;

  app.add_option("--config", config_path, "key = value configuration file");
  app.add_option("--dimension", dimension, "1 or 2")->check(CLI::IsMember({1, 2}));
  app.add_option("--mode", mode, "forward or inverse")->check(CLI::IsMember({"forward", "inverse"}));
  app.add_option("--enforcement", enforcement, "soft or hard")->check(CLI::IsMember({"soft", "hard"}));
  app.add_option("--iterations", iterations, "outer training iterations")->check(CLI::NonNegativeNumber);
  app.add_option("--seeds", seeds, "comma-separated seed list");
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--threads", threads, "worker threads across seeds")->check(CLI::PositiveNumber);
  app.add_option("--table2", table2, "run the four 2D configurations over N seeds")
      ->expected(0, 1)
      ->default_str("5");
  CLI11_PARSE(app, argc, argv);

  try {
    rsfpinn::ProblemConfig c = load(config_path, dimension);
    if (mode) rsfpinn::apply_setting(c, "mode", *mode);
    if (enforcement) rsfpinn::apply_setting(c, "enforcement", *enforcement);
    if (iterations) c.iterations = *iterations;
    if (seeds) rsfpinn::apply_setting(c, "seeds", *seeds);
    if (out_dir) c.out_dir = *out_dir;
    if (threads) c.threads = *threads;
    c.validate();

    if (app.count("--table2") > 0) {
      const int n = table2.value_or(5);
      const rsfpinn::Table2 t = rsfpinn::reproduce_table2(c, n, std::cerr);
      const auto files = rsfpinn::write_table2_files(c.out_dir, t);
      rsfpinn::write_table2(std::cout, t);
      for (const auto& f : files) std::cerr << "wrote " << f.string() << '\n';
      return 0;
    }

    const rsfpinn::RunOutcome r = rsfpinn::run_experiment(c, std::cerr);
    for (const auto& f : r.artifacts) std::cerr << "wrote " << f.string() << '\n';
    if (r.exit_code != 0) {
      std::cerr << r.ensemble.failures << " of " << c.seeds.size() << " runs aborted\n";
    }
    return r.exit_code;
  } catch (const rsfpinn::TrainingAborted& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
