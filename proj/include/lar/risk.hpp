#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>

#include "lar/glm.hpp"
#include "lar/types.hpp"

namespace lar {

// Exact conditional risk split for an estimator trained on aggregated
// responses.  All quantities are computed through the within-bag averaging
// operator; the bagging matrix is never formed.
struct RiskReport {
  double bias_sq = 0.0;
  double variance = 0.0;
  double total = 0.0;  // bias_sq + variance
  std::optional<double> upper_bound;  // set by the *_upper_bound entry points
};

// E[ ||theta_hat - theta*||^2 | X ] for least squares on bag-averaged
// responses with noise level sigma:
//
//   bias_sq  = || (X'X)^-1 X' (S'S - I) X theta* ||^2
//   variance = sigma^2 || (X'X)^-1 X' S' ||_F^2
//
// Singleton bags give bias_sq identically zero.  Throws SingularDesignError
// when X'X is numerically rank deficient.
RiskReport linear_risk_decomposition(const Eigen::MatrixXd& features,
                                     const Eigen::VectorXd& theta_star,
                                     double sigma, const Partition& partition);

// Decomposition plus the closed-form bound
//
//   ||(X'X)^-1 X'||_op^2 ( ||(S'S - I) X theta*||^2 + sigma^2 min(m, d) )
//
// with the operator norm obtained by power iteration (50 rounds or relative
// change below 1e-8).
RiskReport linear_risk_upper_bound(const Eigen::MatrixXd& features,
                                   const Eigen::VectorXd& theta_star,
                                   double sigma, const Partition& partition);

// Conditional moments of the aggregate GLM gradient at theta*, with
// mu = b'(X theta*), v_i = dispersion * b''(x_i' theta*), D = dispersion * I:
//
//   bias_sq  = || X' D^-1 (S'S - I) mu ||^2
//   variance = || X' D^-1 S'S D^(1/2) diag(b'')^(1/2) ||_F^2
RiskReport glm_gradient_moments(const Eigen::MatrixXd& features,
                                const Eigen::VectorXd& theta_star,
                                const GlmFamily& family,
                                const Partition& partition);

// Moments plus the bound
//
//   ||X' D^-1||_op^2 ( ||(S'S - I) mu||^2
//                      + min( sum_l sum_{i in l} v_i / |B_l|, d max_i v_i ) )
RiskReport glm_gradient_upper_bound(const Eigen::MatrixXd& features,
                                    const Eigen::VectorXd& theta_star,
                                    const GlmFamily& family,
                                    const Partition& partition);

// The per-bag variance reduction sum_l sum_{i in l} v_i / |B_l| used by the
// gradient bound; exposed on its own because for constant v it collapses to
// v * (number of bags).
double bag_weighted_variance_sum(const Eigen::VectorXd& variances,
                                 const Partition& partition);

// Averages the curated-vs-random bias contrast over fresh datasets.  Each
// trial draws a dataset from cfg with a derived seed, normalizes theta* to
// unit norm, builds curated bags by sorting the true means X theta* into
// consecutive groups of k (the last group absorbs any remainder) and random
// bags by permutation, and records both squared biases.  Requires
// n >= 2 k d.
struct BiasSeparation {
  double curated_bias_sq = 0.0;   // mean over trials
  double random_bias_sq = 0.0;    // mean over trials
  double random_reference = 0.0;  // (1 - 1/k)^2, the unit-norm prediction
};

BiasSeparation bias_separation_experiment(const DataGenConfig& cfg,
                                          std::size_t k, int trials);

// Curated bags for a known score vector: sort, then cut into consecutive
// groups of k with the remainder folded into the last group.
Partition curated_bags_by_score(const Eigen::VectorXd& scores, std::size_t k);

}  // namespace lar
