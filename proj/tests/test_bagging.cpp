#include <doctest.h>

#include <Eigen/Dense>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <set>
#include <vector>

#include "lar/bagging.hpp"
#include "lar/io.hpp"
#include "lar/rng.hpp"
#include "lar/types.hpp"

using lar::ClusteringSolution;
using lar::Partition;

namespace {

std::vector<double> random_values(std::size_t n, std::uint64_t seed,
                                  bool integer_grid = false) {
  lar::rng::RngStream stream(seed);
  std::vector<double> values(n);
  for (auto& v : values)
    v = integer_grid ? static_cast<double>(stream.uniform_below(10))
                     : stream.normal();
  return values;
}

// Bags must be contiguous runs of the sorted values (allowing any order
// among tied values).  Partition lists bags by smallest original index, so
// order the bags by value before checking the concatenation.
void check_sorted_contiguity(const std::vector<double>& values,
                             const ClusteringSolution& solution) {
  std::vector<double> sorted_values(values);
  std::sort(sorted_values.begin(), sorted_values.end());
  std::vector<std::vector<double>> bag_values;
  for (const auto& bag : solution.partition.bags) {
    std::vector<double> entries;
    entries.reserve(bag.size());
    for (std::size_t index : bag) entries.push_back(values[index]);
    std::sort(entries.begin(), entries.end());
    bag_values.push_back(std::move(entries));
  }
  std::sort(bag_values.begin(), bag_values.end());
  std::size_t position = 0;
  for (const auto& entries : bag_values)
    for (double v : entries) {
      REQUIRE(v == sorted_values[position]);
      ++position;
    }
  REQUIRE(position == values.size());
}

}  // namespace

TEST_CASE("all-equal values cluster with zero objective") {
  const std::vector<double> values(6, 3.25);
  const auto solution = lar::solve_constrained_kmeans(values, 2);
  CHECK(solution.objective == 0.0);
}

TEST_CASE("two exact clusters are found") {
  const std::vector<double> values{0.0, 0.0, 10.0, 10.0};
  const auto solution = lar::solve_constrained_kmeans(values, 2);
  CHECK(solution.objective == 0.0);
  REQUIRE(solution.partition.bag_count() == 2);
  CHECK(solution.partition.bags[0] == std::vector<std::size_t>{0, 1});
  CHECK(solution.partition.bags[1] == std::vector<std::size_t>{2, 3});
}

TEST_CASE("arithmetic ramp prefers three pairs over two triples") {
  const std::vector<double> values{0, 1, 2, 3, 4, 5};
  const auto solution = lar::solve_constrained_kmeans(values, 2);
  // Pairs cost 3 * 0.5; triples would cost 2 * 2.0.
  CHECK(solution.objective == doctest::Approx(1.5).epsilon(1e-12));
  REQUIRE(solution.partition.bag_count() == 3);
  for (const auto& bag : solution.partition.bags) CHECK(bag.size() == 2);
}

TEST_CASE("brute force handles the tiny cases") {
  SUBCASE("single value") {
    const auto solution = lar::brute_force_kmeans({5.0}, 1);
    CHECK(solution.objective == 0.0);
    CHECK(solution.partition.bag_count() == 1);
  }
  SUBCASE("forced single bag") {
    const auto solution = lar::brute_force_kmeans({0.0, 10.0}, 2);
    CHECK(solution.partition.bag_count() == 1);
    CHECK(solution.objective == doctest::Approx(50.0).epsilon(1e-12));
  }
  SUBCASE("k=1 goes all singletons") {
    const auto solution = lar::brute_force_kmeans({3.0, 1.0, 4.0, 1.0, 5.0}, 1);
    CHECK(solution.objective == 0.0);
    CHECK(solution.partition.bag_count() == 5);
  }
  SUBCASE("refuses large n") {
    CHECK_THROWS_AS(lar::brute_force_kmeans(std::vector<double>(17, 0.0), 2),
                    lar::ConfigError);
  }
}

TEST_CASE("dynamic program matches the exhaustive oracle") {
  std::size_t instance = 0;
  for (std::size_t k : {1, 2, 3}) {
    for (int rep = 0; rep < 25; ++rep) {
      for (std::size_t n : {k, k + 1, std::size_t{7}, std::size_t{12}}) {
        if (n < k) continue;
        // Integer grids force ties; gaussian values are the generic case.
        const bool grid = (rep % 2 == 0);
        const auto values = random_values(n, 1000 + 17 * instance, grid);
        ++instance;
        const auto fast = lar::solve_constrained_kmeans(values, k);
        const auto brute = lar::brute_force_kmeans(values, k);
        REQUIRE(fast.objective ==
                doctest::Approx(brute.objective).epsilon(1e-9));
        // The reported objective must match a from-scratch recompute.
        REQUIRE(fast.objective ==
                doctest::Approx(lar::clustering_objective(
                                    values, fast.partition))
                    .epsilon(1e-9));
        check_sorted_contiguity(values, fast);
      }
    }
  }
}

TEST_CASE("bag sizes stay inside the half-open window") {
  for (std::size_t k : {2, 5, 8}) {
    for (std::uint64_t seed : {1, 2, 3}) {
      const auto values = random_values(500 + 13 * k, seed);
      const auto solution = lar::solve_constrained_kmeans(values, k);
      for (const auto& bag : solution.partition.bags) {
        REQUIRE(bag.size() >= k);
        REQUIRE(bag.size() < 2 * k);
      }
    }
  }
}

TEST_CASE("ties prefer the smaller last bag") {
  // All-equal values: every split has objective 0; the tie rule should give
  // minimal (size k) bags rather than merging.
  const std::vector<double> values(8, 1.0);
  const auto solution = lar::solve_constrained_kmeans(values, 2);
  REQUIRE(solution.partition.bag_count() == 4);
  for (const auto& bag : solution.partition.bags) CHECK(bag.size() == 2);
}

TEST_CASE("k=1 objective is always zero") {
  for (std::uint64_t seed : {4, 5, 6}) {
    const auto values = random_values(101, seed);
    const auto solution = lar::solve_constrained_kmeans(values, 1);
    CHECK(solution.objective == 0.0);
    CHECK(solution.partition.bag_count() == values.size());
  }
}

TEST_CASE("doubling the multiset at most doubles the objective") {
  // Appending values is not monotone in general: [0,10] at k=2 costs 50 but
  // [0,10,10] still fits only one bag and costs 66.67.  Duplicating every
  // value, though, keeps the optimal bags available at twice the cost.
  const std::vector<double> base{0.0, 10.0};
  const auto single = lar::solve_constrained_kmeans(base, 2);
  const auto appended = lar::solve_constrained_kmeans({0.0, 10.0, 10.0}, 2);
  CHECK(single.objective == doctest::Approx(50.0));
  CHECK(appended.objective > single.objective);

  for (std::uint64_t seed : {7, 8, 9}) {
    const auto values = random_values(40, seed);
    std::vector<double> doubled;
    doubled.reserve(2 * values.size());
    for (double v : values) {
      doubled.push_back(v);
      doubled.push_back(v);
    }
    for (std::size_t k : {2, 3}) {
      const auto one = lar::solve_constrained_kmeans(values, k);
      const auto two = lar::solve_constrained_kmeans(doubled, k);
      CHECK(two.objective <= 2.0 * one.objective + 1e-9);
    }
  }
}

TEST_CASE("sort permutation is stable and inverse-consistent") {
  const std::vector<double> values{3.0, 1.0, 3.0, 1.0};
  const auto solution = lar::solve_constrained_kmeans(values, 2);
  // Ties keep original order: sorted order is indices 1,3 then 0,2.
  CHECK(solution.sort_permutation == std::vector<std::size_t>{1, 3, 0, 2});
}

TEST_CASE("random bagging splits sizes as specified") {
  SUBCASE("exact division") {
    const Partition p = lar::random_bagging(8, 4, 0);
    REQUIRE(p.bag_count() == 2);
    CHECK(p.bags[0].size() == 4);
    CHECK(p.bags[1].size() == 4);
  }
  SUBCASE("remainder spreads one each") {
    const Partition p = lar::random_bagging(10, 4, 0);
    REQUIRE(p.bag_count() == 2);
    std::multiset<std::size_t> sizes{p.bags[0].size(), p.bags[1].size()};
    CHECK(sizes == std::multiset<std::size_t>{5, 5});
  }
  SUBCASE("n equals k") {
    const Partition p = lar::random_bagging(6, 6, 3);
    REQUIRE(p.bag_count() == 1);
    CHECK(p.bags[0].size() == 6);
  }
  SUBCASE("deterministic in seed, varies across seeds") {
    const Partition a = lar::random_bagging(50, 5, 9);
    const Partition b = lar::random_bagging(50, 5, 9);
    const Partition c = lar::random_bagging(50, 5, 10);
    CHECK(a.bags == b.bags);
    CHECK(a.bags != c.bags);
  }
  SUBCASE("covers every index exactly once") {
    const Partition p = lar::random_bagging(37, 4, 1);
    std::set<std::size_t> seen;
    for (const auto& bag : p.bags)
      for (std::size_t index : bag) seen.insert(index);
    CHECK(seen.size() == 37);
    CHECK(*seen.rbegin() == 36);
  }
}

TEST_CASE("bag mean expansion behaves like the averaging projection") {
  SUBCASE("singletons are the identity") {
    const Partition p = lar::random_bagging(5, 1, 0);
    Eigen::VectorXd v(5);
    v << 1, 2, 3, 4, 5;
    CHECK(lar::bag_mean_expand(p, v) == v);
  }
  SUBCASE("single bag gives the global mean") {
    const Partition p = lar::random_bagging(3, 3, 0);
    Eigen::VectorXd v(3);
    v << 1, 2, 3;
    const Eigen::VectorXd out = lar::bag_mean_expand(p, v);
    for (int i = 0; i < 3; ++i) CHECK(out[i] == doctest::Approx(2.0));
  }
  SUBCASE("idempotent and zero-mean complement per bag") {
    const Partition p = lar::random_bagging(60, 7, 2);
    lar::rng::RngStream stream(5);
    Eigen::VectorXd v(60);
    for (int i = 0; i < 60; ++i) v[i] = stream.normal();
    const Eigen::VectorXd once = lar::bag_mean_expand(p, v);
    const Eigen::VectorXd twice = lar::bag_mean_expand(p, once);
    CHECK((once - twice).cwiseAbs().maxCoeff() < 1e-12);
    const Eigen::VectorXd residual = v - once;
    for (const auto& bag : p.bags) {
      double total = 0.0;
      for (std::size_t index : bag) total += residual[index];
      CHECK(std::abs(total) < 1e-10);
    }
  }
  SUBCASE("trace of the complement is n minus m") {
    // trace(I - S'S) computed per bag as sum of (1 - 1/|B|).
    const Partition p = lar::random_bagging(100, 6, 4);
    double trace = 0.0;
    for (const auto& bag : p.bags)
      trace += static_cast<double>(bag.size()) *
               (1.0 - 1.0 / static_cast<double>(bag.size()));
    CHECK(trace == doctest::Approx(100.0 - p.bag_count()).epsilon(1e-12));
  }
}

TEST_CASE("error taxonomy for bad arguments") {
  CHECK_THROWS_AS(lar::solve_constrained_kmeans({1.0, 2.0}, 0),
                  lar::ConfigError);
  CHECK_THROWS_AS(lar::solve_constrained_kmeans({1.0, 2.0}, 3),
                  lar::InfeasibleError);
  CHECK_THROWS_AS(lar::random_bagging(2, 3, 0), lar::InfeasibleError);
  CHECK_THROWS_AS(lar::random_bagging(2, 0, 0), lar::ConfigError);
}

TEST_CASE("runtime grows at most linearly in k") {
  const auto values = random_values(100000, 99);
  auto time_solve = [&](std::size_t k) {
    double best = 1e100;
    for (int rep = 0; rep < 3; ++rep) {
      const auto start = std::chrono::steady_clock::now();
      const auto solution = lar::solve_constrained_kmeans(values, k);
      const auto stop = std::chrono::steady_clock::now();
      CHECK(solution.objective >= 0.0);
      best = std::min(
          best, std::chrono::duration<double>(stop - start).count());
    }
    return best;
  };
  const double t8 = time_solve(8);
  const double t16 = time_solve(16);
  const double t32 = time_solve(32);
  // Doubling k doubles work; allow 3x the ideal ratio for noise.
  CHECK(t16 / t8 < 6.0);
  CHECK(t32 / t16 < 6.0);
}

TEST_CASE("partition json round trip") {
  const auto values = random_values(20, 3);
  const auto solution = lar::solve_constrained_kmeans(values, 3);
  const auto j = lar::partition_to_json(solution.partition);
  const Partition back = lar::partition_from_json(j);
  CHECK(back.bags == solution.partition.bags);
  CHECK(back.min_size == solution.partition.min_size);
}
