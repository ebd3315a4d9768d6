#include "lar/bagging.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

#include "lar/rng.hpp"

namespace lar {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::vector<std::size_t> stable_argsort(const std::vector<double>& values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) {
                     return values[a] < values[b];
                   });
  return order;
}

// Turns bag sizes over sorted positions into a normalized Partition of
// original indices.
ClusteringSolution assemble(const std::vector<double>& values,
                            std::vector<std::size_t> order,
                            const std::vector<std::size_t>& sizes,
                            double objective, std::size_t k) {
  std::vector<std::vector<std::size_t>> bags;
  bags.reserve(sizes.size());
  std::size_t position = 0;
  for (std::size_t size : sizes) {
    std::vector<std::size_t> bag(order.begin() + position,
                                 order.begin() + position + size);
    bags.push_back(std::move(bag));
    position += size;
  }
  ClusteringSolution out;
  out.partition = Partition::from_bags(std::move(bags), k);
  out.objective = objective;
  out.sort_permutation = std::move(order);
  (void)values;
  return out;
}

void check_args(std::size_t n, std::size_t k) {
  if (k == 0) throw ConfigError("kmeans: k must be positive");
  if (n < k)
    throw InfeasibleError("kmeans: fewer values than the minimum bag size");
}

}  // namespace

ClusteringSolution solve_constrained_kmeans(const std::vector<double>& values,
                                            std::size_t k) {
  const std::size_t n = values.size();
  check_args(n, k);

  std::vector<std::size_t> order = stable_argsort(values);
  std::vector<double> sorted(n);
  for (std::size_t j = 0; j < n; ++j) sorted[j] = values[order[j]];

  // cost[i]: optimal objective for the first i sorted values; last_size[i]:
  // size of the final bag in that optimum.
  std::vector<double> cost(n + 1, kInf);
  std::vector<std::size_t> last_size(n + 1, 0);
  cost[0] = 0.0;

  for (std::size_t i = k; i <= n; ++i) {
    // Grow the candidate last bag [i-s, i) one value at a time, keeping its
    // mean and SSE by Welford-style updates, so each (i, s) costs O(1).
    double mean = sorted[i - 1];
    double sse = 0.0;
    double best = kInf;
    std::size_t best_s = 0;
    const std::size_t s_max = std::min(2 * k - 1, i);
    for (std::size_t s = 1; s <= s_max; ++s) {
      if (s > 1) {
        const double incoming = sorted[i - s];
        const double delta = incoming - mean;
        sse += delta * delta * static_cast<double>(s - 1) /
               static_cast<double>(s);
        mean += (incoming - mean) / static_cast<double>(s);
      }
      if (s < k) continue;
      const std::size_t prefix = i - s;
      if (prefix != 0 && prefix < k) continue;
      const double candidate = cost[prefix] + sse;
      // Strict comparison with s ascending keeps the smallest last bag on
      // ties.
      if (candidate < best) {
        best = candidate;
        best_s = s;
      }
    }
    cost[i] = best;
    last_size[i] = best_s;
  }

  std::vector<std::size_t> sizes;
  for (std::size_t i = n; i > 0; i -= last_size[i])
    sizes.push_back(last_size[i]);
  std::reverse(sizes.begin(), sizes.end());

  return assemble(values, std::move(order), sizes, cost[n], k);
}

ClusteringSolution brute_force_kmeans(const std::vector<double>& values,
                                      std::size_t k) {
  const std::size_t n = values.size();
  if (n > 16)
    throw ConfigError("brute_force_kmeans: refusing n > 16");
  check_args(n, k);

  std::vector<std::size_t> order = stable_argsort(values);
  std::vector<double> sorted(n);
  for (std::size_t j = 0; j < n; ++j) sorted[j] = values[order[j]];

  // Prefix sums for O(1) within-bag SSE of any sorted run.
  std::vector<double> sum(n + 1, 0.0), sq(n + 1, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    sum[j + 1] = sum[j] + sorted[j];
    sq[j + 1] = sq[j] + sorted[j] * sorted[j];
  }
  auto run_sse = [&](std::size_t a, std::size_t b) {
    const double s = sum[b] - sum[a];
    const double count = static_cast<double>(b - a);
    return (sq[b] - sq[a]) - s * s / count;
  };

  double best = kInf;
  std::vector<std::size_t> best_sizes;
  std::vector<std::size_t> sizes;
  // Depth-first over compositions of n with all parts >= k.
  auto enumerate = [&](auto&& self, std::size_t position,
                       double partial) -> void {
    if (position == n) {
      if (partial < best) {
        best = partial;
        best_sizes = sizes;
      }
      return;
    }
    for (std::size_t s = k; position + s <= n; ++s) {
      const double piece = run_sse(position, position + s);
      if (partial + piece >= best) continue;
      sizes.push_back(s);
      self(self, position + s, partial + piece);
      sizes.pop_back();
    }
  };
  enumerate(enumerate, 0, 0.0);

  return assemble(values, std::move(order), best_sizes, best, k);
}

Partition random_bagging(std::size_t n, std::size_t k, std::uint64_t seed) {
  check_args(n, k);
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  rng::RngStream stream(seed, rng::Stream::bagging);
  // Fisher-Yates.
  for (std::size_t i = n - 1; i > 0; --i) {
    const std::size_t j = stream.uniform_below(i + 1);
    std::swap(perm[i], perm[j]);
  }
  const std::size_t m = n / k;
  const std::size_t remainder = n % k;
  std::vector<std::vector<std::size_t>> bags(m);
  std::size_t position = 0;
  for (std::size_t b = 0; b < m; ++b) {
    const std::size_t size = k + (b < remainder ? 1 : 0);
    bags[b].assign(perm.begin() + position, perm.begin() + position + size);
    position += size;
  }
  return Partition::from_bags(std::move(bags), k);
}

Eigen::VectorXd bag_mean_expand(const Partition& partition,
                                const Eigen::VectorXd& v) {
  if (partition.sample_count() != static_cast<std::size_t>(v.size()))
    throw ConfigError("bag_mean_expand: partition does not cover the vector");
  Eigen::VectorXd out(v.size());
  for (const auto& bag : partition.bags) {
    double total = 0.0;
    for (std::size_t index : bag) total += v[static_cast<Eigen::Index>(index)];
    const double mean = total / static_cast<double>(bag.size());
    for (std::size_t index : bag) out[static_cast<Eigen::Index>(index)] = mean;
  }
  return out;
}

double clustering_objective(const std::vector<double>& values,
                            const Partition& partition) {
  double total = 0.0;
  for (const auto& bag : partition.bags) {
    double mean = 0.0;
    for (std::size_t index : bag) mean += values[index];
    mean /= static_cast<double>(bag.size());
    for (std::size_t index : bag) {
      const double dev = values[index] - mean;
      total += dev * dev;
    }
  }
  return total;
}

}  // namespace lar
