#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "lar/types.hpp"

namespace lar {

// Result of clustering scalar values into bags of size at least k.
struct ClusteringSolution {
  // Bags hold original sample indices; each bag is a contiguous run of the
  // sorted value sequence.
  Partition partition;
  // Sum over bags of squared deviations from the bag mean.
  double objective = 0.0;
  // sort_permutation[j] is the original index of the j-th smallest value
  // (stable: ties keep original order).
  std::vector<std::size_t> sort_permutation;
};

// Optimal size-constrained 1-D k-means.
//
// Sorts the values, then runs a dynamic program over prefixes where the last
// bag's size s ranges over k <= s < 2k; any partition with a larger bag can
// be split into one of this form without increasing the objective, so the
// window loses nothing.  Within-bag costs follow a rolling mean/SSE update,
// giving O(nk) time after the O(n log n) sort and O(k) extra space for the
// cost window (the prefix cost and parent arrays are O(n)).
//
// Ties between equal-objective partitions are broken toward the smaller last
// bag at every prefix.  Throws ConfigError for k = 0, InfeasibleError for
// n < k.
ClusteringSolution solve_constrained_kmeans(const std::vector<double>& values,
                                            std::size_t k);

// Exhaustive reference: enumerates every contiguous partition of the sorted
// values with all parts of size >= k.  Guard rail for tests; throws
// ConfigError when n > 16.
ClusteringSolution brute_force_kmeans(const std::vector<double>& values,
                                      std::size_t k);

// Data-independent bagging: a uniformly random permutation of {0..n-1} cut
// into floor(n/k) consecutive bags of size k, with the n mod k leftover
// samples handed one each to the first bags.
Partition random_bagging(std::size_t n, std::size_t k, std::uint64_t seed);

// Applies the within-bag averaging operator: out[i] is the mean of v over
// the bag containing i.  This is the projection S'S of the bagging matrix S
// with rows e_bag / sqrt(|bag|); S itself is never materialized.
Eigen::VectorXd bag_mean_expand(const Partition& partition,
                                const Eigen::VectorXd& v);

// Recomputes the clustering objective of a partition from scratch.
double clustering_objective(const std::vector<double>& values,
                            const Partition& partition);

}  // namespace lar
