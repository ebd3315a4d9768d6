#pragma once

#include <json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "lar/adaptive.hpp"
#include "lar/types.hpp"

namespace lar {

// A full sweep: every algorithm crossed with every bag size, privacy level
// and repeat.  Loaded from JSON and overridable by CLI flags.
struct ExperimentSpec {
  std::string name = "experiment";
  Task task = Task::linear;
  Eigen::Index n = 0;
  Eigen::Index d = 0;
  int steps = 1;  // T
  double sigma = 0.0;
  std::vector<std::size_t> k_list;
  std::vector<double> epsilon_list;  // empty: no label DP
  std::vector<Algorithm> algorithms{Algorithm::priorboost};
  // L2 penalty in the unnormalized-likelihood convention: each fit of size
  // n_fit uses l2_lambda / n_fit on its per-sample objective.  0 disables.
  double l2_lambda = 0.0;
  int repeats = 1;
  std::uint64_t seed = 0;
  std::string output_dir = ".";
  std::optional<Eigen::Index> test_n;  // defaults to n
  int workers = 0;                     // 0: hardware concurrency
};

nlohmann::json spec_to_json(const ExperimentSpec& spec);
ExperimentSpec spec_from_json(const nlohmann::json& j);

struct CellResult {
  Algorithm algorithm = Algorithm::priorboost;
  std::size_t k = 1;
  std::optional<double> epsilon;
  int repeat = 0;
  std::vector<double> step_losses;  // losses after each step, empty if skipped
  double final_loss = 0.0;          // NaN when skipped or diverged
  ModelParams final_theta;
  bool diverged = false;
  bool skipped = false;  // infeasible configuration, not executed
};

struct ExperimentResult {
  std::vector<CellResult> cells;  // canonical sweep order
  std::string curves_path;
  std::string final_path;
  std::string manifest_path;
  bool any_skipped = false;
  bool any_diverged = false;
};

// Runs the sweep and writes <name>_curves.csv (one row per executed step,
// columns algorithm,k,epsilon,repeat,step,test_loss,diverged),
// <name>_final.csv (per configuration: mean and standard error of the final
// loss across completed repeats) and <name>_manifest.json into
// spec.output_dir.
//
// Seed discipline: the train and test sets derive from (seed, repeat) alone
// and the run streams from (seed, repeat, k), so every algorithm sees the
// same data and noise at matching coordinates and cell values are
// independent of sweep order and scheduling.  Cells run on a bounded worker
// pool; rows are written serially afterward in canonical order, so reruns
// are byte-identical.
//
// PriorBoost cells with k = 1 execute the single-round path (steps forced
// to 1): singleton bags hand every (noised) label out individually, the
// adaptive schedule has nothing to adapt, and the single round over the full
// training set coincides with OneShot, which the DP sweeps assert per seed.
// run_priorboost itself performs the stepped schedule for every k.
//
// Infeasible cells (slice smaller than k) are skipped with a warning on
// stderr; a diverging fit yields a NaN loss flagged in the diverged column.
ExperimentResult run_experiment(const ExperimentSpec& spec);

// Final-loss grid over training sizes for the optimal-bag-size analysis.
// Requires a logistic task and exactly one epsilon; runs PriorBoost on every
// (n, k, repeat) and writes <name>_grid.csv with columns
// n,k,epsilon,repeat,final_loss,diverged (one row per cell, NaN losses for
// skipped cells, so the grid shape is always |n_list| x |k_list| x repeats).
struct GridCell {
  Eigen::Index n = 0;
  std::size_t k = 1;
  int repeat = 0;
  double final_loss = 0.0;
  bool diverged = false;
  bool skipped = false;
};

struct GridResult {
  std::vector<GridCell> cells;
  std::string grid_path;
};

GridResult run_bag_size_sweep(const ExperimentSpec& spec,
                              const std::vector<Eigen::Index>& n_list);

}  // namespace lar
