#include "lar/oracle.hpp"

#include <cmath>

#include "lar/rng.hpp"

namespace lar {

AggregateBatch aggregate(const Eigen::VectorXd& responses,
                         const Partition& partition) {
  if (partition.sample_count() != static_cast<std::size_t>(responses.size()))
    throw ConfigError("aggregate: partition does not cover the responses");
  AggregateBatch batch;
  batch.bag_means.reserve(partition.bag_count());
  for (const auto& bag : partition.bags) {
    double total = 0.0;
    for (std::size_t index : bag)
      total += responses[static_cast<Eigen::Index>(index)];
    batch.bag_means.push_back(total / static_cast<double>(bag.size()));
  }
  batch.partition = partition;
  return batch;
}

AggregateBatch apply_label_dp(AggregateBatch batch, double epsilon,
                              double bound, std::uint64_t seed) {
  if (epsilon <= 0.0)
    throw ConfigError("apply_label_dp: epsilon must be positive");
  if (bound <= 0.0)
    throw ConfigError("apply_label_dp: response bound must be positive");
  const double scale =
      bound / (epsilon * static_cast<double>(batch.partition.min_size));
  for (std::size_t l = 0; l < batch.bag_means.size(); ++l) {
    rng::RngStream stream(seed, rng::Stream::dp_noise, l);
    batch.bag_means[l] += stream.laplace(scale);
  }
  batch.privacy = PrivacyParams{epsilon, bound, scale};
  return batch;
}

AggregateBatch round_binary(AggregateBatch batch, std::uint64_t seed,
                            std::size_t index_offset) {
  for (std::size_t l = 0; l < batch.bag_means.size(); ++l) {
    const double mean = batch.bag_means[l];
    if (!batch.privacy && (mean < 0.0 || mean > 1.0))
      throw ConfigError("round_binary: exact bag means must lie in [0,1]");
    double label;
    if (std::abs(mean - 0.5) <= 1e-12) {
      const std::uint64_t key =
          static_cast<std::uint64_t>(index_offset + batch.partition.bags[l].front());
      label = rng::fair_coin(seed, key) ? 1.0 : 0.0;
    } else {
      label = mean > 0.5 ? 1.0 : 0.0;
    }
    batch.bag_means[l] = label;
  }
  batch.rounded = true;
  return batch;
}

Eigen::VectorXd expand_to_samples(const AggregateBatch& batch) {
  Eigen::VectorXd out(
      static_cast<Eigen::Index>(batch.partition.sample_count()));
  for (std::size_t l = 0; l < batch.partition.bags.size(); ++l)
    for (std::size_t index : batch.partition.bags[l])
      out[static_cast<Eigen::Index>(index)] = batch.bag_means[l];
  return out;
}

ResponseOracle::ResponseOracle(const Eigen::VectorXd& responses,
                               OracleConfig cfg, std::uint64_t seed)
    : responses_(responses), cfg_(std::move(cfg)), seed_(seed) {
  if (cfg_.dp && cfg_.dp->epsilon <= 0.0)
    throw ConfigError("oracle: dp epsilon must be positive");
  if (cfg_.dp && cfg_.dp->bound && *cfg_.dp->bound <= 0.0)
    throw ConfigError("oracle: dp response bound must be positive");
}

double ResponseOracle::read_response(std::size_t global_index) const {
  return responses_[static_cast<Eigen::Index>(global_index)];
}

AggregateBatch ResponseOracle::query(const Partition& bags,
                                     std::size_t slice_offset,
                                     std::uint64_t step) {
  if (slice_offset + bags.sample_count() > sample_count())
    throw ConfigError("oracle: slice extends past the training set");

  // If dp is on without an explicit bound, binary responses justify B = 1;
  // verify that while reading so each sample is still touched exactly once.
  const bool need_binary = cfg_.dp && !cfg_.dp->bound;
  bool all_binary = true;

  AggregateBatch batch;
  batch.bag_means.reserve(bags.bag_count());
  for (const auto& bag : bags.bags) {
    double total = 0.0;
    for (std::size_t index : bag) {
      const double value = read_response(slice_offset + index);
      if (need_binary && value != 0.0 && value != 1.0) all_binary = false;
      total += value;
    }
    batch.bag_means.push_back(total / static_cast<double>(bag.size()));
  }
  batch.partition = bags;

  if (cfg_.dp) {
    double bound = 1.0;
    if (cfg_.dp->bound) {
      bound = *cfg_.dp->bound;
    } else if (!all_binary) {
      throw ConfigError("oracle: dp on non-binary responses needs a bound");
    }
    batch = apply_label_dp(std::move(batch), cfg_.dp->epsilon, bound,
                           rng::derive_seed(seed_, rng::Stream::dp_noise, step));
  }
  if (cfg_.round_labels)
    batch = round_binary(std::move(batch),
                         rng::derive_seed(seed_, rng::Stream::oracle_coin, step),
                         slice_offset);
  return batch;
}

}  // namespace lar
