#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <vector>

#include "lar/types.hpp"

namespace lar {

// Label differential privacy settings for an aggregation request.
struct DpParams {
  double epsilon = 0.0;
  // Response magnitude bound B.  When absent, binary responses are assumed
  // and B = 1; non-binary tasks must supply it.
  std::optional<double> bound;
};

struct PrivacyParams {
  double epsilon = 0.0;
  double bound = 0.0;
  double noise_scale = 0.0;  // bound / (epsilon * declared min bag size)
};

// Bag-level view of responses: one mean per bag, plus how it was degraded.
struct AggregateBatch {
  Partition partition;
  std::vector<double> bag_means;  // aligned with partition.bags
  std::optional<PrivacyParams> privacy;
  bool rounded = false;
};

// Exact within-bag means.  The partition must cover the response vector.
AggregateBatch aggregate(const Eigen::VectorXd& responses,
                         const Partition& partition);

// Laplace mechanism on bag means.  One response moves a mean of a size-s bag
// by at most bound/s <= bound/k, so noise Laplace(0, bound/(epsilon*k)) with
// k the partition's declared min_size gives epsilon-label-DP.  Noise for bag
// l comes from the substream (seed, dp_noise, l), so results do not depend
// on evaluation order.  No clipping is applied afterward; means may leave
// the response range.  Throws ConfigError for nonpositive epsilon or bound.
AggregateBatch apply_label_dp(AggregateBatch batch, double epsilon,
                              double bound, std::uint64_t seed);

// Rounds bag means to {0,1}: above 1/2 up, below 1/2 down, and within 1e-12
// of 1/2 by a fair deterministic coin keyed on (seed, index_offset + bag's
// smallest sample index), so a bag rounds the same way on every rerun.
// Exact means must lie in [0,1]; noised means (privacy set) may not, and the
// threshold extends to them unchanged.
AggregateBatch round_binary(AggregateBatch batch, std::uint64_t seed,
                            std::size_t index_offset = 0);

// Per-sample targets: every sample receives its bag's (possibly degraded)
// mean.
Eigen::VectorXd expand_to_samples(const AggregateBatch& batch);

struct OracleConfig {
  bool round_labels = false;
  std::optional<DpParams> dp;
};

// Sole gateway from raw responses to the adaptive drivers.  A driver hands
// bags over a slice of the training set and gets degraded bag means back; it
// never touches responses itself, which is what makes everything after the
// noise post-processing.  All raw reads funnel through read_response so a
// test double can audit that each sample is read exactly once per run.
class ResponseOracle {
 public:
  ResponseOracle(const Eigen::VectorXd& responses, OracleConfig cfg,
                 std::uint64_t seed);
  virtual ~ResponseOracle() = default;

  // `bags` partitions the local index range {0..len-1} of the slice that
  // starts at slice_offset; `step` selects the noise substreams.  Virtual so
  // test doubles can also observe the partitions the drivers request.
  virtual AggregateBatch query(const Partition& bags,
                               std::size_t slice_offset, std::uint64_t step);

  std::size_t sample_count() const {
    return static_cast<std::size_t>(responses_.size());
  }

 protected:
  virtual double read_response(std::size_t global_index) const;

 private:
  const Eigen::VectorXd& responses_;
  OracleConfig cfg_;
  std::uint64_t seed_;
};

}  // namespace lar
