#include "lar/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <thread>

#include "lar/datagen.hpp"
#include "lar/io.hpp"
#include "lar/rng.hpp"
#include "lar/version.hpp"

namespace lar {
namespace {

void check_spec(const ExperimentSpec& spec) {
  if (spec.name.empty()) throw ConfigError("experiment: name must be nonempty");
  if (spec.n <= 0 || spec.d <= 0)
    throw ConfigError("experiment: n and d must be positive");
  if (spec.steps < 1) throw ConfigError("experiment: steps must be at least 1");
  if (spec.sigma < 0.0)
    throw ConfigError("experiment: sigma must be nonnegative");
  if (spec.k_list.empty()) throw ConfigError("experiment: k_list is empty");
  for (std::size_t k : spec.k_list)
    if (k == 0) throw ConfigError("experiment: k values must be positive");
  if (spec.algorithms.empty())
    throw ConfigError("experiment: algorithms list is empty");
  if (spec.repeats < 1)
    throw ConfigError("experiment: repeats must be at least 1");
  if (!spec.epsilon_list.empty() && spec.task != Task::logistic)
    throw ConfigError("experiment: label dp sweeps require the logistic task");
  for (double epsilon : spec.epsilon_list)
    if (epsilon <= 0.0)
      throw ConfigError("experiment: epsilon values must be positive");
  if (spec.l2_lambda < 0.0)
    throw ConfigError("experiment: l2_lambda must be nonnegative");
  if (spec.test_n && *spec.test_n <= 0)
    throw ConfigError("experiment: test_n must be positive");
  if (spec.workers < 0)
    throw ConfigError("experiment: workers must be nonnegative");
}

GlmFamily family_for(Task task) {
  return task == Task::linear ? GlmFamily::gaussian()
                              : GlmFamily::bernoulli_logit();
}

RunConfig cell_run_config(const ExperimentSpec& spec, Algorithm algorithm,
                          std::size_t k, std::optional<double> epsilon,
                          std::uint64_t run_seed) {
  RunConfig cfg;
  cfg.algorithm = algorithm;
  // Single-round rule: see run_experiment docs.  OneShot forces steps = 1 on
  // its own; PriorBoost at k = 1 degenerates to the same single round.
  cfg.steps = (algorithm == Algorithm::priorboost && k == 1) ? 1 : spec.steps;
  cfg.min_bag_size = k;
  cfg.family = family_for(spec.task);
  cfg.round_labels = spec.task == Task::logistic;
  if (epsilon) cfg.dp = DpParams{*epsilon, std::nullopt};  // bound resolved by family
  if (spec.l2_lambda > 0.0) cfg.l2_penalty_total = spec.l2_lambda;
  cfg.seed = run_seed;
  return cfg;
}

struct RepeatData {
  Dataset train;
  Dataset test;
};

RepeatData make_repeat_data(const ExperimentSpec& spec, int repeat,
                            Eigen::Index n_train) {
  DataGenConfig base;
  base.d = spec.d;
  base.noise_sigma = spec.sigma;
  base.task = spec.task;

  DataGenConfig train_cfg = base;
  train_cfg.n = n_train;
  train_cfg.seed = rng::derive_seed(spec.seed, rng::Stream::data_train,
                                    static_cast<std::uint64_t>(repeat),
                                    static_cast<std::uint64_t>(n_train));
  DataGenConfig test_cfg = base;
  test_cfg.n = spec.test_n.value_or(spec.n);
  test_cfg.seed = rng::derive_seed(spec.seed, rng::Stream::data_test,
                                   static_cast<std::uint64_t>(repeat),
                                   static_cast<std::uint64_t>(n_train));
  Dataset train = generate_dataset(train_cfg);
  // The held-out set shares theta* with the training set (fresh X and noise)
  // so that test loss measures estimation error, not model mismatch.
  Dataset test = generate_dataset(test_cfg, *train.truth);
  return RepeatData{std::move(train), std::move(test)};
}

// Runs `total` jobs on a bounded pool; job(i) must only touch state owned by
// index i.
void run_pool(std::size_t total, int workers,
              const std::function<void(std::size_t)>& job) {
  unsigned pool_size = workers > 0
                           ? static_cast<unsigned>(workers)
                           : std::max(1u, std::thread::hardware_concurrency());
  pool_size = static_cast<unsigned>(
      std::min<std::size_t>(pool_size, std::max<std::size_t>(total, 1)));
  if (pool_size <= 1) {
    for (std::size_t i = 0; i < total; ++i) job(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(pool_size);
  for (unsigned w = 0; w < pool_size; ++w)
    pool.emplace_back([&] {
      for (std::size_t i = next.fetch_add(1); i < total;
           i = next.fetch_add(1))
        job(i);
    });
  for (auto& thread : pool) thread.join();
}

std::string csv_epsilon(const std::optional<double>& epsilon) {
  return epsilon ? format_double(*epsilon) : "";
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::out | std::ios::trunc);
  if (!out) throw ConfigError("experiment: cannot write " + path);
  return out;
}

}  // namespace

nlohmann::json spec_to_json(const ExperimentSpec& spec) {
  nlohmann::json j;
  j["name"] = spec.name;
  j["task"] = to_string(spec.task);
  j["n"] = spec.n;
  j["d"] = spec.d;
  j["steps"] = spec.steps;
  j["sigma"] = spec.sigma;
  j["k_list"] = spec.k_list;
  j["epsilon_list"] = spec.epsilon_list;
  nlohmann::json algorithms = nlohmann::json::array();
  for (Algorithm a : spec.algorithms) algorithms.push_back(to_string(a));
  j["algorithms"] = std::move(algorithms);
  j["l2_lambda"] = spec.l2_lambda;
  j["repeats"] = spec.repeats;
  j["seed"] = spec.seed;
  j["output_dir"] = spec.output_dir;
  if (spec.test_n) j["test_n"] = *spec.test_n;
  j["workers"] = spec.workers;
  return j;
}

ExperimentSpec spec_from_json(const nlohmann::json& j) {
  ExperimentSpec spec;
  if (j.contains("name")) spec.name = j.at("name").get<std::string>();
  if (j.contains("task"))
    spec.task = task_from_string(j.at("task").get<std::string>());
  if (j.contains("n")) spec.n = j.at("n").get<Eigen::Index>();
  if (j.contains("d")) spec.d = j.at("d").get<Eigen::Index>();
  if (j.contains("steps")) spec.steps = j.at("steps").get<int>();
  if (j.contains("sigma")) spec.sigma = j.at("sigma").get<double>();
  if (j.contains("k_list"))
    spec.k_list = j.at("k_list").get<std::vector<std::size_t>>();
  if (j.contains("epsilon_list"))
    spec.epsilon_list = j.at("epsilon_list").get<std::vector<double>>();
  if (j.contains("algorithms")) {
    spec.algorithms.clear();
    for (const auto& name : j.at("algorithms"))
      spec.algorithms.push_back(algorithm_from_string(name.get<std::string>()));
  }
  if (j.contains("l2_lambda")) spec.l2_lambda = j.at("l2_lambda").get<double>();
  if (j.contains("repeats")) spec.repeats = j.at("repeats").get<int>();
  if (j.contains("seed")) spec.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("output_dir"))
    spec.output_dir = j.at("output_dir").get<std::string>();
  if (j.contains("test_n")) spec.test_n = j.at("test_n").get<Eigen::Index>();
  if (j.contains("workers")) spec.workers = j.at("workers").get<int>();
  return spec;
}

ExperimentResult run_experiment(const ExperimentSpec& spec) {
  check_spec(spec);
  std::filesystem::create_directories(spec.output_dir);

  std::vector<RepeatData> data;
  data.reserve(static_cast<std::size_t>(spec.repeats));
  for (int repeat = 0; repeat < spec.repeats; ++repeat)
    data.push_back(make_repeat_data(spec, repeat, spec.n));

  // Canonical cell order: algorithm, k, epsilon, repeat.
  std::vector<CellResult> cells;
  const std::vector<std::optional<double>> epsilons = [&] {
    std::vector<std::optional<double>> out;
    if (spec.epsilon_list.empty())
      out.push_back(std::nullopt);
    else
      for (double epsilon : spec.epsilon_list) out.emplace_back(epsilon);
    return out;
  }();
  for (Algorithm algorithm : spec.algorithms)
    for (std::size_t k : spec.k_list)
      for (const auto& epsilon : epsilons)
        for (int repeat = 0; repeat < spec.repeats; ++repeat) {
          CellResult cell;
          cell.algorithm = algorithm;
          cell.k = k;
          cell.epsilon = epsilon;
          cell.repeat = repeat;
          cells.push_back(std::move(cell));
        }

  std::vector<std::string> warnings(cells.size());
  run_pool(cells.size(), spec.workers, [&](std::size_t index) {
    CellResult& cell = cells[index];
    const std::uint64_t run_seed =
        rng::derive_seed(spec.seed, rng::Stream::cell,
                         static_cast<std::uint64_t>(cell.repeat), cell.k);
    const RunConfig cfg =
        cell_run_config(spec, cell.algorithm, cell.k, cell.epsilon, run_seed);
    const int effective_steps =
        cell.algorithm == Algorithm::oneshot ? 1 : cfg.steps;
    const auto& repeat_data = data[static_cast<std::size_t>(cell.repeat)];
    if (spec.n / effective_steps < static_cast<Eigen::Index>(cell.k)) {
      cell.skipped = true;
      cell.final_loss = std::numeric_limits<double>::quiet_NaN();
      warnings[index] = "skipping infeasible cell: algorithm=" +
                        to_string(cell.algorithm) +
                        " k=" + std::to_string(cell.k) +
                        " repeat=" + std::to_string(cell.repeat);
      return;
    }
    try {
      const RunTrace trace =
          run_adaptive(repeat_data.train, repeat_data.test, cfg);
      cell.step_losses.reserve(trace.per_step.size());
      for (const auto& record : trace.per_step)
        cell.step_losses.push_back(record.test_loss);
      cell.final_loss = cell.step_losses.back();
      cell.final_theta = trace.final_theta;
    } catch (const DivergenceError& error) {
      cell.diverged = true;
      cell.final_loss = std::numeric_limits<double>::quiet_NaN();
      warnings[index] = std::string("fit diverged: ") + error.what();
    }
  });

  ExperimentResult result;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (!warnings[i].empty()) std::cerr << "warning: " << warnings[i] << "\n";
    result.any_skipped = result.any_skipped || cells[i].skipped;
    result.any_diverged = result.any_diverged || cells[i].diverged;
  }

  const std::filesystem::path dir(spec.output_dir);
  result.curves_path = (dir / (spec.name + "_curves.csv")).string();
  result.final_path = (dir / (spec.name + "_final.csv")).string();
  result.manifest_path = (dir / (spec.name + "_manifest.json")).string();

  {
    auto out = open_output(result.curves_path);
    out << "algorithm,k,epsilon,repeat,step,test_loss,diverged\n";
    for (const CellResult& cell : cells) {
      if (cell.skipped) continue;
      if (cell.diverged) {
        out << to_string(cell.algorithm) << "," << cell.k << ","
            << csv_epsilon(cell.epsilon) << "," << cell.repeat << ",0,nan,1\n";
        continue;
      }
      for (std::size_t step = 0; step < cell.step_losses.size(); ++step)
        out << to_string(cell.algorithm) << "," << cell.k << ","
            << csv_epsilon(cell.epsilon) << "," << cell.repeat << ","
            << step + 1 << "," << format_double(cell.step_losses[step])
            << ",0\n";
    }
  }

  {
    auto out = open_output(result.final_path);
    out << "algorithm,k,epsilon,mean_final_loss,stderr_final_loss,"
           "repeats_used,diverged\n";
    // One aggregate row per (algorithm, k, epsilon) in canonical order; the
    // cells vector is grouped exactly that way with repeats adjacent.
    for (std::size_t start = 0; start < cells.size();
         start += static_cast<std::size_t>(spec.repeats)) {
      const CellResult& head = cells[start];
      double sum = 0.0, sum_sq = 0.0;
      int used = 0, diverged = 0;
      for (int r = 0; r < spec.repeats; ++r) {
        const CellResult& cell = cells[start + static_cast<std::size_t>(r)];
        if (cell.diverged) ++diverged;
        if (cell.skipped || cell.diverged) continue;
        sum += cell.final_loss;
        sum_sq += cell.final_loss * cell.final_loss;
        ++used;
      }
      const double mean =
          used > 0 ? sum / used : std::numeric_limits<double>::quiet_NaN();
      double stderr_value = 0.0;
      if (used > 1) {
        const double var = (sum_sq - sum * sum / used) / (used - 1);
        stderr_value = std::sqrt(std::max(var, 0.0) / used);
      }
      out << to_string(head.algorithm) << "," << head.k << ","
          << csv_epsilon(head.epsilon) << "," << format_double(mean) << ","
          << format_double(stderr_value) << "," << used << "," << diverged
          << "\n";
    }
  }

  {
    nlohmann::json manifest;
    manifest["spec"] = spec_to_json(spec);
    manifest["version"] = kVersion;
    manifest["outputs"] = {result.curves_path, result.final_path};
    manifest["cells"] = cells.size();
    auto out = open_output(result.manifest_path);
    out << manifest.dump(2) << "\n";
  }

  result.cells = std::move(cells);
  return result;
}

GridResult run_bag_size_sweep(const ExperimentSpec& spec,
                              const std::vector<Eigen::Index>& n_list) {
  if (spec.task != Task::logistic)
    throw ConfigError("bag sweep: task must be logistic");
  if (spec.epsilon_list.size() != 1)
    throw ConfigError("bag sweep: exactly one epsilon is required");
  if (n_list.empty()) throw ConfigError("bag sweep: n_list is empty");
  for (Eigen::Index n : n_list)
    if (n <= 0) throw ConfigError("bag sweep: n values must be positive");
  {
    ExperimentSpec probe = spec;
    probe.n = n_list.front();
    check_spec(probe);
  }
  std::filesystem::create_directories(spec.output_dir);
  const double epsilon = spec.epsilon_list.front();

  // One dataset pair per (n, repeat), shared across k.
  std::vector<RepeatData> data;
  data.reserve(n_list.size() * static_cast<std::size_t>(spec.repeats));
  for (Eigen::Index n : n_list)
    for (int repeat = 0; repeat < spec.repeats; ++repeat) {
      ExperimentSpec sized = spec;
      sized.n = n;
      if (!spec.test_n) sized.test_n = n;
      data.push_back(make_repeat_data(sized, repeat, n));
    }

  GridResult result;
  for (std::size_t ni = 0; ni < n_list.size(); ++ni)
    for (std::size_t ki = 0; ki < spec.k_list.size(); ++ki)
      for (int repeat = 0; repeat < spec.repeats; ++repeat) {
        GridCell cell;
        cell.n = n_list[ni];
        cell.k = spec.k_list[ki];
        cell.repeat = repeat;
        result.cells.push_back(cell);
      }

  std::vector<std::string> warnings(result.cells.size());
  run_pool(result.cells.size(), spec.workers, [&](std::size_t index) {
    GridCell& cell = result.cells[index];
    const std::size_t ni = static_cast<std::size_t>(
        std::find(n_list.begin(), n_list.end(), cell.n) - n_list.begin());
    const auto& repeat_data =
        data[ni * static_cast<std::size_t>(spec.repeats) +
             static_cast<std::size_t>(cell.repeat)];
    const std::uint64_t run_seed = rng::derive_seed(
        rng::derive_seed(spec.seed, rng::Stream::trial,
                         static_cast<std::uint64_t>(cell.n)),
        rng::Stream::cell, static_cast<std::uint64_t>(cell.repeat), cell.k);
    const RunConfig cfg = cell_run_config(spec, Algorithm::priorboost, cell.k,
                                          epsilon, run_seed);
    if (cell.n / cfg.steps < static_cast<Eigen::Index>(cell.k)) {
      cell.skipped = true;
      cell.final_loss = std::numeric_limits<double>::quiet_NaN();
      warnings[index] =
          "skipping infeasible grid cell: n=" + std::to_string(cell.n) +
          " k=" + std::to_string(cell.k);
      return;
    }
    try {
      const RunTrace trace =
          run_adaptive(repeat_data.train, repeat_data.test, cfg);
      cell.final_loss = trace.per_step.back().test_loss;
    } catch (const DivergenceError& error) {
      cell.diverged = true;
      cell.final_loss = std::numeric_limits<double>::quiet_NaN();
      warnings[index] = std::string("fit diverged: ") + error.what();
    }
  });

  for (const auto& warning : warnings)
    if (!warning.empty()) std::cerr << "warning: " << warning << "\n";

  const std::filesystem::path dir(spec.output_dir);
  result.grid_path = (dir / (spec.name + "_grid.csv")).string();
  auto out = open_output(result.grid_path);
  out << "n,k,epsilon,repeat,final_loss,diverged\n";
  for (const GridCell& cell : result.cells)
    out << cell.n << "," << cell.k << "," << format_double(epsilon) << ","
        << cell.repeat << "," << format_double(cell.final_loss) << ","
        << (cell.diverged ? 1 : 0) << "\n";
  return result;
}

}  // namespace lar
