#include "lar/adaptive.hpp"

#include "lar/bagging.hpp"
#include "lar/rng.hpp"

namespace lar {
namespace {

void check_run_config(const RunConfig& cfg, Eigen::Index n) {
  if (cfg.steps < 1) throw ConfigError("run: steps must be at least 1");
  if (cfg.min_bag_size == 0)
    throw ConfigError("run: min_bag_size must be positive");
  if (n / cfg.steps < static_cast<Eigen::Index>(cfg.min_bag_size))
    throw InfeasibleError("run: slices smaller than the minimum bag size");
  if (cfg.round_labels && cfg.family.kind != GlmFamily::Kind::bernoulli_logit)
    throw ConfigError("run: label rounding requires the bernoulli family");
  metric_for(cfg.family);  // rejects families without a reporting metric
}

// DP bound resolution: binary responses are bounded by 1, anything else has
// to say what its bound is.
std::optional<DpParams> resolve_dp(const RunConfig& cfg) {
  if (!cfg.dp) return std::nullopt;
  DpParams dp = *cfg.dp;
  if (!dp.bound) {
    if (cfg.family.kind != GlmFamily::Kind::bernoulli_logit)
      throw ConfigError("run: label dp without a response bound is only "
                        "defined for binary responses");
    dp.bound = 1.0;
  }
  return dp;
}

FitResult fit_event_level(const Eigen::MatrixXd& features,
                          const Eigen::VectorXd& targets,
                          const RunConfig& cfg) {
  FitConfig fit = cfg.fit;
  if (cfg.l2_penalty_total)
    fit.l2_lambda = *cfg.l2_penalty_total / static_cast<double>(features.rows());
  if (cfg.family.kind == GlmFamily::Kind::gaussian && fit.l2_lambda == 0.0)
    return fit_linear_event_level(features, targets);
  return fit_glm_event_level(features, targets, cfg.family, fit);
}

std::map<std::size_t, std::size_t> size_histogram(const Partition& partition) {
  std::map<std::size_t, std::size_t> histogram;
  for (const auto& bag : partition.bags) ++histogram[bag.size()];
  return histogram;
}

}  // namespace

std::string to_string(Algorithm algorithm) {
  switch (algorithm) {
    case Algorithm::priorboost:
      return "priorboost";
    case Algorithm::oneshot:
      return "oneshot";
    case Algorithm::pbprefix:
      return "pbprefix";
  }
  return "";
}

Algorithm algorithm_from_string(const std::string& name) {
  if (name == "priorboost") return Algorithm::priorboost;
  if (name == "oneshot") return Algorithm::oneshot;
  if (name == "pbprefix") return Algorithm::pbprefix;
  throw ConfigError("unknown algorithm: " + name);
}

RunTrace run_with_oracle(const Eigen::MatrixXd& train_features,
                         const Dataset& test, const RunConfig& cfg,
                         ResponseOracle& oracle,
                         const ModelParams* warm_prior) {
  const Eigen::Index n = train_features.rows();
  const int steps = cfg.algorithm == Algorithm::oneshot ? 1 : cfg.steps;
  RunConfig checked = cfg;
  checked.steps = steps;
  check_run_config(checked, n);
  const Metric metric = metric_for(cfg.family);
  const bool cumulative = cfg.algorithm == Algorithm::pbprefix;

  // Slice boundaries; the first n mod T slices take one extra sample.
  const Eigen::Index base = n / steps;
  const Eigen::Index extra = n % steps;

  RunTrace trace;
  ModelParams previous;  // model from the step before; empty at step 1
  Eigen::VectorXd accumulated_targets;
  if (cumulative) accumulated_targets.resize(n);

  Eigen::Index offset = 0;
  for (int step = 1; step <= steps; ++step) {
    const Eigen::Index len = base + (step <= extra ? 1 : 0);
    const auto slice = train_features.middleRows(offset, len);

    Partition bags;
    if (step == 1 && warm_prior == nullptr) {
      bags = random_bagging(static_cast<std::size_t>(len), cfg.min_bag_size,
                            rng::derive_seed(cfg.seed, rng::Stream::bagging,
                                             static_cast<std::uint64_t>(step)));
    } else {
      const ModelParams& pilot = step == 1 ? *warm_prior : previous;
      const Eigen::VectorXd predictions = predict(pilot, slice, cfg.family);
      std::vector<double> values(predictions.data(),
                                 predictions.data() + predictions.size());
      bags = solve_constrained_kmeans(values, cfg.min_bag_size).partition;
    }

    const AggregateBatch batch =
        oracle.query(bags, static_cast<std::size_t>(offset),
                     static_cast<std::uint64_t>(step));
    const Eigen::VectorXd targets = expand_to_samples(batch);

    FitResult fitted;
    std::size_t used = 0;
    if (cumulative) {
      accumulated_targets.segment(offset, len) = targets;
      used = static_cast<std::size_t>(offset + len);
      fitted = fit_event_level(train_features.topRows(offset + len),
                               accumulated_targets.head(offset + len), cfg);
    } else {
      used = static_cast<std::size_t>(len);
      fitted = fit_event_level(slice, targets, cfg);
    }
    previous = fitted.params;

    StepRecord record;
    record.step = step;
    record.theta = fitted.params;
    record.train_samples_used = used;
    record.test_loss = evaluate_loss(fitted.params, test.features,
                                     test.responses, cfg.family, metric);
    record.bag_size_histogram = size_histogram(bags);
    trace.per_step.push_back(std::move(record));
    offset += len;
  }

  trace.final_theta = previous;
  return trace;
}

namespace {

RunTrace run_public(const Dataset& train, const Dataset& test,
                    const RunConfig& cfg, Algorithm algorithm,
                    const ModelParams* warm_prior = nullptr) {
  validate(train);
  validate(test);
  RunConfig effective = cfg;
  effective.algorithm = algorithm;
  if (algorithm == Algorithm::oneshot) effective.steps = 1;
  OracleConfig oracle_cfg{effective.round_labels, resolve_dp(effective)};
  ResponseOracle oracle(train.responses, oracle_cfg, effective.seed);
  return run_with_oracle(train.features, test, effective, oracle, warm_prior);
}

}  // namespace

RunTrace run_priorboost(const Dataset& train, const Dataset& test,
                        const RunConfig& cfg) {
  return run_public(train, test, cfg, Algorithm::priorboost);
}

RunTrace run_oneshot(const Dataset& train, const Dataset& test,
                     const RunConfig& cfg) {
  return run_public(train, test, cfg, Algorithm::oneshot);
}

RunTrace run_pbprefix(const Dataset& train, const Dataset& test,
                      const RunConfig& cfg) {
  return run_public(train, test, cfg, Algorithm::pbprefix);
}

RunTrace warm_start_priorboost(const Dataset& train, const Dataset& test,
                               const RunConfig& cfg,
                               const ModelParams& prior) {
  return run_public(train, test, cfg, Algorithm::priorboost, &prior);
}

RunTrace run_adaptive(const Dataset& train, const Dataset& test,
                      const RunConfig& cfg) {
  switch (cfg.algorithm) {
    case Algorithm::priorboost:
      return run_priorboost(train, test, cfg);
    case Algorithm::oneshot:
      return run_oneshot(train, test, cfg);
    case Algorithm::pbprefix:
      return run_pbprefix(train, test, cfg);
  }
  throw ConfigError("run: unknown algorithm");
}

}  // namespace lar
