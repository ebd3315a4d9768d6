#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "lar/glm.hpp"
#include "lar/oracle.hpp"
#include "lar/types.hpp"

namespace lar {

enum class Algorithm { priorboost, oneshot, pbprefix };

std::string to_string(Algorithm algorithm);
Algorithm algorithm_from_string(const std::string& name);

struct RunConfig {
  Algorithm algorithm = Algorithm::priorboost;
  int steps = 1;                 // T; forced to 1 for oneshot
  std::size_t min_bag_size = 1;  // k
  GlmFamily family = GlmFamily::gaussian();
  FitConfig fit;
  std::optional<DpParams> dp;
  bool round_labels = false;  // requires bernoulli_logit
  std::uint64_t seed = 0;
  // When set, each fit's penalty is l2_penalty_total / n_fit instead of
  // fit.l2_lambda, i.e. the penalty is fixed in the unnormalized-likelihood
  // convention across fits of different sizes.
  std::optional<double> l2_penalty_total;
};

struct StepRecord {
  int step = 0;
  ModelParams theta;
  std::size_t train_samples_used = 0;
  double test_loss = 0.0;
  std::map<std::size_t, std::size_t> bag_size_histogram;
};

struct RunTrace {
  std::vector<StepRecord> per_step;  // one record per step, evaluated after
                                     // that step's model update
  ModelParams final_theta;
};

// Adaptive bagging over T equal slices of the training set (the first
// n mod T slices hold one extra sample).  Step 1 bags its slice at random;
// step t >= 2 predicts responses for slice t with the step t-1 model, sorts
// the predictions and solves the size-constrained clustering, then fits from
// scratch on that slice's aggregated responses.  All label access goes
// through the aggregation oracle configured by cfg.dp / cfg.round_labels.
RunTrace run_priorboost(const Dataset& train, const Dataset& test,
                        const RunConfig& cfg);

// Single round over the whole training set with random bagging; identical to
// run_priorboost with steps = 1.
RunTrace run_oneshot(const Dataset& train, const Dataset& test,
                     const RunConfig& cfg);

// Same bagging schedule as run_priorboost, but step t fits on the union of
// slices 1..t (aggregated targets accumulated as queried).
RunTrace run_pbprefix(const Dataset& train, const Dataset& test,
                      const RunConfig& cfg);

// run_priorboost with step 1 bagged by clustering the prior model's
// predictions instead of randomly.  With a zero prior and a logistic family
// every prediction ties at 1/2 and the clustering degenerates to index
// order.
RunTrace warm_start_priorboost(const Dataset& train, const Dataset& test,
                               const RunConfig& cfg, const ModelParams& prior);

// Dispatch on cfg.algorithm.
RunTrace run_adaptive(const Dataset& train, const Dataset& test,
                      const RunConfig& cfg);

// Instrumented entry point: identical to the drivers above but reads labels
// through the supplied oracle, letting tests audit response access.  The
// public drivers wrap this with a plain ResponseOracle over train.responses.
RunTrace run_with_oracle(const Eigen::MatrixXd& train_features,
                         const Dataset& test, const RunConfig& cfg,
                         ResponseOracle& oracle,
                         const ModelParams* warm_prior = nullptr);

}  // namespace lar
