#include "lar/risk.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <numeric>

#include "lar/bagging.hpp"
#include "lar/datagen.hpp"
#include "lar/rng.hpp"

namespace lar {
namespace {

constexpr double kConditionLimit = 1e12;

Eigen::LDLT<Eigen::MatrixXd> checked_gram(const Eigen::MatrixXd& features) {
  const Eigen::MatrixXd gram = features.transpose() * features;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram);
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  if (lo <= 0.0 || hi / lo > kConditionLimit)
    throw SingularDesignError("risk: design matrix is rank deficient");
  return Eigen::LDLT<Eigen::MatrixXd>(gram);
}

// Largest eigenvalue of an SPD operator given by `apply`, by power iteration:
// 50 rounds or relative change below 1e-8.  The start vector is a fixed
// deterministic ramp, which is never orthogonal to the leading eigenvector
// in practice and keeps reruns identical.
template <typename Apply>
double power_iteration_lambda_max(Eigen::Index dim, Apply&& apply) {
  Eigen::VectorXd v(dim);
  for (Eigen::Index j = 0; j < dim; ++j)
    v[j] = 1.0 + static_cast<double>(j) / static_cast<double>(dim);
  v.normalize();
  double lambda = 0.0;
  for (int round = 0; round < 50; ++round) {
    Eigen::VectorXd w = apply(v);
    const double next = v.dot(w);
    const double norm = w.norm();
    if (norm == 0.0) return 0.0;
    v = w / norm;
    if (round > 0 && std::abs(next - lambda) <= 1e-8 * std::abs(next)) {
      lambda = next;
      break;
    }
    lambda = next;
  }
  return lambda;
}

void check_inputs(const Eigen::MatrixXd& features,
                  const Eigen::VectorXd& theta_star,
                  const Partition& partition) {
  if (theta_star.size() != features.cols())
    throw ConfigError("risk: theta* length does not match dimension");
  if (partition.sample_count() !=
      static_cast<std::size_t>(features.rows()))
    throw ConfigError("risk: partition does not cover the samples");
}

}  // namespace

RiskReport linear_risk_decomposition(const Eigen::MatrixXd& features,
                                     const Eigen::VectorXd& theta_star,
                                     double sigma,
                                     const Partition& partition) {
  check_inputs(features, theta_star, partition);
  const auto ldlt = checked_gram(features);
  const Eigen::Index d = features.cols();

  RiskReport report;
  // Bias: (X'X)^-1 X' (S'S - I) X theta*.  Singleton bags make the averaging
  // residual identically zero and the bias exactly 0.0.
  const Eigen::VectorXd signal = features * theta_star;
  const Eigen::VectorXd residual = bag_mean_expand(partition, signal) - signal;
  report.bias_sq = ldlt.solve(features.transpose() * residual).squaredNorm();

  // Variance: sigma^2 tr((X'X)^-1 X' S'S X (X'X)^-1).  With M = X (X'X)^-1
  // and the projection P = S'S this is sigma^2 sum_j ||P m_j||^2.
  Eigen::MatrixXd m = ldlt.solve(features.transpose()).transpose();
  double trace = 0.0;
  for (Eigen::Index j = 0; j < d; ++j)
    trace += bag_mean_expand(partition, m.col(j)).squaredNorm();
  report.variance = sigma * sigma * trace;
  report.total = report.bias_sq + report.variance;
  return report;
}

RiskReport linear_risk_upper_bound(const Eigen::MatrixXd& features,
                                   const Eigen::VectorXd& theta_star,
                                   double sigma, const Partition& partition) {
  RiskReport report =
      linear_risk_decomposition(features, theta_star, sigma, partition);
  const auto ldlt = checked_gram(features);
  // ||(X'X)^-1 X'||_op^2 = 1 / lambda_min(X'X) = lambda_max((X'X)^-1).
  const double op_sq = power_iteration_lambda_max(
      features.cols(), [&](const Eigen::VectorXd& v) { return ldlt.solve(v); });
  const Eigen::VectorXd signal = features * theta_star;
  const double distortion =
      (bag_mean_expand(partition, signal) - signal).squaredNorm();
  const double rank = static_cast<double>(
      std::min<std::size_t>(partition.bag_count(),
                            static_cast<std::size_t>(features.cols())));
  report.upper_bound = op_sq * (distortion + sigma * sigma * rank);
  return report;
}

RiskReport glm_gradient_moments(const Eigen::MatrixXd& features,
                                const Eigen::VectorXd& theta_star,
                                const GlmFamily& family,
                                const Partition& partition) {
  check_inputs(features, theta_star, partition);
  const Eigen::Index n = features.rows();
  const Eigen::Index d = features.cols();
  const double phi = family.dispersion;

  const Eigen::VectorXd eta = features * theta_star;
  Eigen::VectorXd mu(n), curvature(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    mu[i] = family.mean(eta[i]);
    curvature[i] = family.mean_derivative(eta[i]);
  }

  RiskReport report;
  const Eigen::VectorXd residual = bag_mean_expand(partition, mu) - mu;
  report.bias_sq = (features.transpose() * residual / phi).squaredNorm();

  // || X' D^-1 S'S D^(1/2) diag(b'')^(1/2) ||_F^2
  //   = (1/phi) sum_j sum_i (P x_j)_i^2 b''_i     with P = S'S.
  double frob = 0.0;
  for (Eigen::Index j = 0; j < d; ++j) {
    const Eigen::VectorXd projected = bag_mean_expand(partition, features.col(j));
    frob += (projected.array().square() * curvature.array()).sum();
  }
  report.variance = frob / phi;
  report.total = report.bias_sq + report.variance;
  return report;
}

double bag_weighted_variance_sum(const Eigen::VectorXd& variances,
                                 const Partition& partition) {
  if (partition.sample_count() != static_cast<std::size_t>(variances.size()))
    throw ConfigError("risk: partition does not cover the variance vector");
  double total = 0.0;
  for (const auto& bag : partition.bags) {
    double bag_sum = 0.0;
    for (std::size_t index : bag)
      bag_sum += variances[static_cast<Eigen::Index>(index)];
    total += bag_sum / static_cast<double>(bag.size());
  }
  return total;
}

RiskReport glm_gradient_upper_bound(const Eigen::MatrixXd& features,
                                    const Eigen::VectorXd& theta_star,
                                    const GlmFamily& family,
                                    const Partition& partition) {
  RiskReport report =
      glm_gradient_moments(features, theta_star, family, partition);
  const double phi = family.dispersion;

  const Eigen::MatrixXd gram = features.transpose() * features;
  const double op_sq = power_iteration_lambda_max(
      features.cols(),
      [&](const Eigen::VectorXd& v) { return (gram * v).eval(); }) /
      (phi * phi);

  const Eigen::Index n = features.rows();
  const Eigen::VectorXd eta = features * theta_star;
  Eigen::VectorXd mu(n), v(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    mu[i] = family.mean(eta[i]);
    v[i] = family.variance(eta[i]);
  }
  const double distortion =
      (bag_mean_expand(partition, mu) - mu).squaredNorm();
  const double variance_cap =
      std::min(bag_weighted_variance_sum(v, partition),
               static_cast<double>(features.cols()) * v.maxCoeff());
  report.upper_bound = op_sq * (distortion + variance_cap);
  return report;
}

Partition curated_bags_by_score(const Eigen::VectorXd& scores, std::size_t k) {
  const std::size_t n = static_cast<std::size_t>(scores.size());
  if (k == 0) throw ConfigError("curated_bags: k must be positive");
  if (n < k) throw InfeasibleError("curated_bags: fewer samples than k");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return scores[static_cast<Eigen::Index>(a)] <
           scores[static_cast<Eigen::Index>(b)];
  });
  const std::size_t m = n / k;  // last bag takes the n mod k leftovers
  std::vector<std::vector<std::size_t>> bags(m);
  std::size_t position = 0;
  for (std::size_t b = 0; b < m; ++b) {
    const std::size_t size = b + 1 == m ? n - position : k;
    bags[b].assign(order.begin() + position, order.begin() + position + size);
    position += size;
  }
  return Partition::from_bags(std::move(bags), k);
}

BiasSeparation bias_separation_experiment(const DataGenConfig& cfg,
                                          std::size_t k, int trials) {
  if (trials < 1) throw ConfigError("bias_separation: trials must be positive");
  if (cfg.n < static_cast<Eigen::Index>(2 * k) * cfg.d)
    throw InfeasibleError("bias_separation: need n >= 2 k d");

  BiasSeparation out;
  out.random_reference =
      (1.0 - 1.0 / static_cast<double>(k)) * (1.0 - 1.0 / static_cast<double>(k));
  for (int trial = 0; trial < trials; ++trial) {
    DataGenConfig trial_cfg = cfg;
    trial_cfg.task = Task::linear;
    trial_cfg.seed = rng::derive_seed(cfg.seed, rng::Stream::trial,
                                      static_cast<std::uint64_t>(trial));
    const Dataset data = generate_linear_dataset(trial_cfg);
    const Eigen::VectorXd theta_unit = *data.truth / data.truth->norm();
    const Eigen::VectorXd signal = data.features * theta_unit;

    const Partition curated = curated_bags_by_score(signal, k);
    const Partition random = random_bagging(
        static_cast<std::size_t>(cfg.n), k,
        rng::derive_seed(trial_cfg.seed, rng::Stream::bagging));

    out.curated_bias_sq +=
        linear_risk_decomposition(data.features, theta_unit, 0.0, curated)
            .bias_sq;
    out.random_bias_sq +=
        linear_risk_decomposition(data.features, theta_unit, 0.0, random)
            .bias_sq;
  }
  out.curated_bias_sq /= trials;
  out.random_bias_sq /= trials;
  return out;
}

}  // namespace lar
