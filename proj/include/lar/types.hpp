#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace lar {

// ============================================================================
// errors
// ============================================================================

// Bad caller-supplied configuration (sizes, ranges, incompatible options).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// No feasible solution exists under the stated constraints.
class InfeasibleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Design matrix numerically rank deficient.
class SingularDesignError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Iterative fit produced a non-finite objective.
class DivergenceError : public std::runtime_error {
 public:
  explicit DivergenceError(const std::string& what, int iteration)
      : std::runtime_error(what), iteration(iteration) {}
  int iteration;
};

// ============================================================================
// samples
// ============================================================================

enum class Task { linear, logistic };

std::string to_string(Task task);
Task task_from_string(const std::string& name);

// A supervised sample set.  `truth` and `noise_sigma` are populated by the
// synthetic generators and power the risk diagnostics; imported data may
// leave them empty.
struct Dataset {
  Eigen::MatrixXd features;               // n x d, one row per sample
  Eigen::VectorXd responses;              // length n
  std::optional<Eigen::VectorXd> truth;   // generating coefficients, length d
  std::optional<double> noise_sigma;      // generating noise level

  Eigen::Index sample_count() const { return features.rows(); }
  Eigen::Index dimension() const { return features.cols(); }
};

// Throws ConfigError unless the block shapes agree.
void validate(const Dataset& data);

struct DataGenConfig {
  Eigen::Index n = 0;
  Eigen::Index d = 0;
  double noise_sigma = 0.0;
  // Feature covariance; identity when absent.  Must be symmetric positive
  // definite (symmetry tolerance 1e-10).
  std::optional<Eigen::MatrixXd> feature_covariance;
  Task task = Task::linear;
  std::uint64_t seed = 0;
};

// ============================================================================
// partitions
// ============================================================================

// A partition of sample indices {0..n-1} into bags.
//
// Invariants, established by from_bags and relied on everywhere else:
//   - bags are disjoint and cover exactly {0..n-1}
//   - every bag has at least min_size elements
//   - indices inside a bag are increasing
//   - bags are ordered by their smallest index
struct Partition {
  std::vector<std::vector<std::size_t>> bags;
  std::size_t min_size = 1;

  // Validates and normalizes (sorts within bags, orders bags).  Throws
  // ConfigError on any invariant violation.
  static Partition from_bags(std::vector<std::vector<std::size_t>> bags,
                             std::size_t min_size);

  std::size_t sample_count() const;
  std::size_t bag_count() const { return bags.size(); }
};

}  // namespace lar
