#pragma once

// Experiment orchestration behind the command-line tool: one configuration
// over its seeds, or the four-way forward/inverse x soft/hard comparison.

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "rsfpinn/eval.hpp"

namespace rsfpinn {

struct RunOutcome {
  int exit_code = 0;
  EnsembleReport ensemble;           ///< empty runs when every seed failed
  std::vector<std::filesystem::path> artifacts;
};

/// Trains every seed of `c`, writing into `c.out_dir`:
///   config.txt, errors.csv,
///   training_log_seed<S>.csv, field_grid_seed<S>.csv,
///   checkpoints/seed<S>_<network>.ckpt,
///   alpha_profile_seed<S>.csv (2D inverse).
/// Training logs are rewritten after every iteration so an aborted run keeps
/// its partial history. Progress and failures go to `log`.
RunOutcome run_experiment(const ProblemConfig& c, std::ostream& log);

struct Table2 {
  int seeds = 0;
  EnsembleReport forward_soft, forward_hard, inverse_soft, inverse_hard;
};

/// Runs the 2D forward/inverse x soft/hard ensembles on seeds 1..n_seeds
/// with every other setting taken from `base`.
Table2 reproduce_table2(const ProblemConfig& base, int n_seeds, std::ostream& log);

/// Columns: error, forward_soft, forward_hard, forward_ratio, inverse_soft,
/// inverse_hard, inverse_ratio. Ratio = soft / hard; empty cells where a
/// value does not apply.
void write_table2(std::ostream& os, const Table2& t);

/// Writes table2.csv, table2_metadata.txt and the four errors_<mode>_<enforcement>.csv
/// files under `dir`.
std::vector<std::filesystem::path> write_table2_files(const std::filesystem::path& dir, const Table2& t);

}  // namespace rsfpinn
