#pragma once

#include "lar/types.hpp"

namespace lar {

// Synthetic regression data: truth theta* with i.i.d. standard normal
// entries, feature rows i.i.d. N(0, Sigma) via the Cholesky factor of
// cfg.feature_covariance (identity when absent), responses
// y = X theta* + eps with eps i.i.d. N(0, sigma^2).
//
// Draw order is fixed: theta* from the `truth` substream (d draws), features
// from the `features` substream row by row, noise from the `noise` substream
// (n draws).  Equal seeds give bit-identical datasets.
Dataset generate_linear_dataset(const DataGenConfig& cfg);

// Same theta*, X and eps as generate_linear_dataset under the same seed;
// responses are sigmoid(x' theta* + eps) rounded to {0,1}.  noise_sigma
// records the sigma that was folded into the labels.
Dataset generate_logistic_dataset(const DataGenConfig& cfg);

// Dispatches on cfg.task.
Dataset generate_dataset(const DataGenConfig& cfg);

// Overloads that pin theta* instead of drawing it, for held-out sets that
// must share the training distribution while using fresh features and noise.
// The feature and noise substreams are consumed exactly as above.
Dataset generate_linear_dataset(const DataGenConfig& cfg,
                                const Eigen::VectorXd& truth);
Dataset generate_logistic_dataset(const DataGenConfig& cfg,
                                  const Eigen::VectorXd& truth);
Dataset generate_dataset(const DataGenConfig& cfg,
                         const Eigen::VectorXd& truth);

inline double sigmoid(double z) {
  return z >= 0.0 ? 1.0 / (1.0 + std::exp(-z))
                  : std::exp(z) / (1.0 + std::exp(z));
}

}  // namespace lar
