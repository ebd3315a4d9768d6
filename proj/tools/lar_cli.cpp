// Command line front end: synthetic data generation, value clustering,
// risk decomposition tables and full experiment sweeps.
//
// Exit codes: 0 success, 2 configuration error, 3 completed with skipped or
// diverged cells.

#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <json.hpp>

#include "lar/bagging.hpp"
#include "lar/datagen.hpp"
#include "lar/experiment.hpp"
#include "lar/io.hpp"
#include "lar/risk.hpp"
#include "lar/rng.hpp"
#include "lar/version.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitPartial = 3;

struct GenOptions {
  std::string task = "linear";
  long n = 1024;
  long d = 8;
  double sigma = 0.0;
  std::uint64_t seed = 0;
  std::string out;
  std::string format = "csv";
};

int run_gen(const GenOptions& options) {
  lar::DataGenConfig cfg;
  cfg.task = lar::task_from_string(options.task);
  cfg.n = options.n;
  cfg.d = options.d;
  cfg.noise_sigma = options.sigma;
  cfg.seed = options.seed;
  const lar::Dataset data = lar::generate_dataset(cfg);
  if (options.format == "csv")
    lar::write_dataset_csv(data, options.out);
  else if (options.format == "bin")
    lar::write_dataset_binary(data, options.out);
  else
    throw lar::ConfigError("gen: format must be csv or bin");
  std::cout << "wrote " << data.sample_count() << " samples to " << options.out
            << "\n";
  return kExitOk;
}

struct BagsOptions {
  std::string values_path;
  std::size_t k = 1;
  std::string dump_path;
};

int run_bags(const BagsOptions& options) {
  std::ifstream in(options.values_path);
  if (!in)
    throw lar::ConfigError("bags: cannot read " + options.values_path);
  std::vector<double> values;
  double value;
  while (in >> value) values.push_back(value);
  if (values.empty()) throw lar::ConfigError("bags: no values found");

  const lar::ClusteringSolution solution =
      lar::solve_constrained_kmeans(values, options.k);
  nlohmann::json j = lar::partition_to_json(solution.partition);
  j["objective"] = solution.objective;
  if (options.dump_path.empty()) {
    std::cout << j.dump(2) << "\n";
  } else {
    std::ofstream out(options.dump_path);
    if (!out)
      throw lar::ConfigError("bags: cannot write " + options.dump_path);
    out << j.dump(2) << "\n";
    std::cout << "wrote " << solution.partition.bag_count() << " bags to "
              << options.dump_path << "\n";
  }
  return kExitOk;
}

struct RiskOptions {
  long n = 1024;
  long d = 8;
  double sigma = 0.1;
  std::size_t k = 4;
  std::uint64_t seed = 0;
  std::string bagging = "random";
  std::string out;
};

int run_risk(const RiskOptions& options) {
  lar::DataGenConfig cfg;
  cfg.task = lar::Task::linear;
  cfg.n = options.n;
  cfg.d = options.d;
  cfg.noise_sigma = options.sigma;
  cfg.seed = options.seed;
  const lar::Dataset data = lar::generate_linear_dataset(cfg);

  lar::Partition partition;
  if (options.bagging == "random")
    partition = lar::random_bagging(static_cast<std::size_t>(options.n),
                                    options.k, cfg.seed);
  else if (options.bagging == "curated")
    partition = lar::curated_bags_by_score(data.features * *data.truth,
                                           options.k);
  else
    throw lar::ConfigError("risk: bagging must be random or curated");

  const lar::RiskReport report = lar::linear_risk_upper_bound(
      data.features, *data.truth, options.sigma, partition);

  std::cout << "risk decomposition (n=" << options.n << " d=" << options.d
            << " sigma=" << options.sigma << " k=" << options.k << " bagging="
            << options.bagging << ")\n";
  std::cout << "  bias^2      " << lar::format_double(report.bias_sq) << "\n";
  std::cout << "  variance    " << lar::format_double(report.variance) << "\n";
  std::cout << "  total       " << lar::format_double(report.total) << "\n";
  std::cout << "  upper bound " << lar::format_double(*report.upper_bound)
            << "\n";
  if (!options.out.empty()) {
    std::ofstream out(options.out);
    if (!out) throw lar::ConfigError("risk: cannot write " + options.out);
    out << lar::risk_to_json(report).dump(2) << "\n";
  }
  return kExitOk;
}

struct RunOptions {
  std::string config_path;
  std::string name;
  std::string task;
  long n = -1;
  long d = -1;
  int steps = -1;
  double sigma = -1.0;
  std::vector<std::size_t> k_list;
  std::vector<double> epsilon_list;
  std::vector<std::string> algorithms;
  double lambda = -1.0;
  int repeats = -1;
  long long seed = -1;
  std::string out;
  long test_n = -1;
  int workers = -1;
  std::string dump_model_path;
  std::vector<long> grid_n;
};

int run_run(const RunOptions& options) {
  lar::ExperimentSpec spec;
  if (!options.config_path.empty()) {
    std::ifstream in(options.config_path);
    if (!in)
      throw lar::ConfigError("run: cannot read " + options.config_path);
    nlohmann::json j;
    in >> j;
    spec = lar::spec_from_json(j);
  }
  // Flags override the config file.
  if (!options.name.empty()) spec.name = options.name;
  if (!options.task.empty()) spec.task = lar::task_from_string(options.task);
  if (options.n >= 0) spec.n = options.n;
  if (options.d >= 0) spec.d = options.d;
  if (options.steps >= 0) spec.steps = options.steps;
  if (options.sigma >= 0.0) spec.sigma = options.sigma;
  if (!options.k_list.empty()) spec.k_list = options.k_list;
  if (!options.epsilon_list.empty()) spec.epsilon_list = options.epsilon_list;
  if (!options.algorithms.empty()) {
    spec.algorithms.clear();
    for (const auto& name : options.algorithms)
      spec.algorithms.push_back(lar::algorithm_from_string(name));
  }
  if (options.lambda >= 0.0) spec.l2_lambda = options.lambda;
  if (options.repeats >= 0) spec.repeats = options.repeats;
  if (options.seed >= 0) spec.seed = static_cast<std::uint64_t>(options.seed);
  if (!options.out.empty()) spec.output_dir = options.out;
  if (options.test_n >= 0) spec.test_n = options.test_n;
  if (options.workers >= 0) spec.workers = options.workers;

  if (!options.grid_n.empty()) {
    std::vector<Eigen::Index> n_list(options.grid_n.begin(),
                                     options.grid_n.end());
    const lar::GridResult grid = lar::run_bag_size_sweep(spec, n_list);
    std::cout << "wrote " << grid.cells.size() << " grid cells to "
              << grid.grid_path << "\n";
    for (const auto& cell : grid.cells)
      if (cell.skipped || cell.diverged) return kExitPartial;
    return kExitOk;
  }

  const lar::ExperimentResult result = lar::run_experiment(spec);
  std::cout << "wrote " << result.curves_path << "\n";
  std::cout << "wrote " << result.final_path << "\n";
  std::cout << "wrote " << result.manifest_path << "\n";

  if (!options.dump_model_path.empty()) {
    nlohmann::json models = nlohmann::json::array();
    for (const auto& cell : result.cells) {
      if (cell.skipped || cell.diverged) continue;
      nlohmann::json entry;
      entry["algorithm"] = lar::to_string(cell.algorithm);
      entry["k"] = cell.k;
      if (cell.epsilon) entry["epsilon"] = *cell.epsilon;
      entry["repeat"] = cell.repeat;
      entry["theta"] = lar::model_to_json(cell.final_theta);
      models.push_back(std::move(entry));
    }
    std::ofstream out(options.dump_model_path);
    if (!out)
      throw lar::ConfigError("run: cannot write " + options.dump_model_path);
    out << models.dump(2) << "\n";
    std::cout << "wrote " << options.dump_model_path << "\n";
  }

  return (result.any_skipped || result.any_diverged) ? kExitPartial : kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"learning from aggregate responses with curated bags"};
  app.set_version_flag("--version", lar::kVersion);
  app.require_subcommand(1);

  GenOptions gen;
  auto* gen_cmd = app.add_subcommand("gen", "generate a synthetic dataset");
  gen_cmd->add_option("--task", gen.task, "linear or logistic");
  gen_cmd->add_option("--n", gen.n, "sample count");
  gen_cmd->add_option("--d", gen.d, "feature dimension");
  gen_cmd->add_option("--sigma", gen.sigma, "noise level");
  gen_cmd->add_option("--seed", gen.seed, "generator seed");
  gen_cmd->add_option("--out", gen.out, "output path")->required();
  gen_cmd->add_option("--format", gen.format, "csv or bin");

  BagsOptions bags;
  auto* bags_cmd =
      app.add_subcommand("bags", "cluster a file of values into bags");
  bags_cmd->add_option("--values", bags.values_path, "one value per line")
      ->required();
  bags_cmd->add_option("--k", bags.k, "minimum bag size")->required();
  bags_cmd->add_option("--dump-bags", bags.dump_path,
                       "write the partition json here instead of stdout");

  RiskOptions risk;
  auto* risk_cmd =
      app.add_subcommand("risk", "print a risk decomposition table");
  risk_cmd->add_option("--n", risk.n, "sample count");
  risk_cmd->add_option("--d", risk.d, "feature dimension");
  risk_cmd->add_option("--sigma", risk.sigma, "noise level");
  risk_cmd->add_option("--k", risk.k, "bag size");
  risk_cmd->add_option("--seed", risk.seed, "generator seed");
  risk_cmd->add_option("--bagging", risk.bagging, "random or curated");
  risk_cmd->add_option("--out", risk.out, "also write the report json here");

  RunOptions run;
  auto* run_cmd = app.add_subcommand("run", "run an experiment sweep");
  run_cmd->add_option("--config", run.config_path,
                      "json spec; flags override its fields");
  run_cmd->add_option("--name", run.name, "experiment name");
  run_cmd->add_option("--task", run.task, "linear or logistic");
  run_cmd->add_option("--n", run.n, "training samples");
  run_cmd->add_option("--d", run.d, "feature dimension");
  run_cmd->add_option("--steps", run.steps, "adaptive steps T");
  run_cmd->add_option("--sigma", run.sigma, "noise level");
  run_cmd->add_option("--k", run.k_list, "bag size (repeatable)");
  run_cmd->add_option("--epsilon", run.epsilon_list,
                      "label dp epsilon (repeatable)");
  run_cmd->add_option("--algorithm", run.algorithms,
                      "priorboost, oneshot or pbprefix (repeatable)");
  run_cmd->add_option("--lambda", run.lambda, "l2 penalty (sum convention)");
  run_cmd->add_option("--repeats", run.repeats, "independent repeats");
  run_cmd->add_option("--seed", run.seed, "master seed");
  run_cmd->add_option("--out", run.out, "output directory");
  run_cmd->add_option("--test-n", run.test_n, "test samples (default n)");
  run_cmd->add_option("--workers", run.workers, "worker threads (0 = cores)");
  run_cmd->add_option("--dump-model", run.dump_model_path,
                      "write final models json here");
  run_cmd->add_option("--grid-n", run.grid_n,
                      "run the bag size sweep over these n (repeatable)");

  try {
    app.parse(argc, argv);
    if (gen_cmd->parsed()) return run_gen(gen);
    if (bags_cmd->parsed()) return run_bags(bags);
    if (risk_cmd->parsed()) return run_risk(risk);
    if (run_cmd->parsed()) return run_run(run);
  } catch (const CLI::ParseError& error) {
    return app.exit(error) == 0 ? kExitOk : kExitConfig;
  } catch (const lar::ConfigError& error) {
    std::cerr << "error: " << error.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& error) {
    std::cerr << "error: " << error.what() << "\n";
    return kExitConfig;
  }
  return kExitOk;
}
