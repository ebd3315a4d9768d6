#include "lar/datagen.hpp"

#include <Eigen/Cholesky>
#include <cmath>

#include "lar/rng.hpp"

namespace lar {
namespace {

void check_config(const DataGenConfig& cfg) {
  if (cfg.n <= 0 || cfg.d <= 0)
    throw ConfigError("datagen: n and d must be positive");
  if (cfg.noise_sigma < 0.0)
    throw ConfigError("datagen: noise_sigma must be nonnegative");
  if (cfg.feature_covariance) {
    const auto& sigma = *cfg.feature_covariance;
    if (sigma.rows() != cfg.d || sigma.cols() != cfg.d)
      throw ConfigError("datagen: covariance must be d x d");
    if ((sigma - sigma.transpose()).cwiseAbs().maxCoeff() > 1e-10)
      throw ConfigError("datagen: covariance must be symmetric");
  }
}

// theta*, X and eps; shared verbatim by both tasks so that equal seeds give
// equal latent draws regardless of task.
struct LatentDraws {
  Eigen::VectorXd theta;
  Eigen::MatrixXd features;
  Eigen::VectorXd noise;
};

LatentDraws draw_latents(const DataGenConfig& cfg,
                         const Eigen::VectorXd* truth_override) {
  check_config(cfg);
  LatentDraws out;

  if (truth_override) {
    if (truth_override->size() != cfg.d)
      throw ConfigError("datagen: truth override must have length d");
    out.theta = *truth_override;
  } else {
    rng::RngStream truth_stream(cfg.seed, rng::Stream::truth);
    out.theta.resize(cfg.d);
    for (Eigen::Index j = 0; j < cfg.d; ++j)
      out.theta[j] = truth_stream.normal();
  }

  Eigen::MatrixXd chol;  // empty means identity covariance
  if (cfg.feature_covariance) {
    Eigen::LLT<Eigen::MatrixXd> llt(*cfg.feature_covariance);
    if (llt.info() != Eigen::Success)
      throw ConfigError("datagen: covariance must be positive definite");
    chol = llt.matrixL();
  }

  rng::RngStream feature_stream(cfg.seed, rng::Stream::features);
  out.features.resize(cfg.n, cfg.d);
  Eigen::VectorXd row(cfg.d);
  for (Eigen::Index i = 0; i < cfg.n; ++i) {
    for (Eigen::Index j = 0; j < cfg.d; ++j) row[j] = feature_stream.normal();
    if (chol.size() > 0)
      out.features.row(i) = (chol * row).transpose();
    else
      out.features.row(i) = row.transpose();
  }

  rng::RngStream noise_stream(cfg.seed, rng::Stream::noise);
  out.noise.resize(cfg.n);
  for (Eigen::Index i = 0; i < cfg.n; ++i)
    out.noise[i] = cfg.noise_sigma * noise_stream.normal();

  return out;
}

Dataset assemble_linear(const DataGenConfig& cfg, LatentDraws latents) {
  Dataset data;
  data.responses = latents.features * latents.theta + latents.noise;
  data.features = std::move(latents.features);
  data.truth = std::move(latents.theta);
  data.noise_sigma = cfg.noise_sigma;
  return data;
}

Dataset assemble_logistic(const DataGenConfig& cfg, LatentDraws latents) {
  Eigen::VectorXd margin = latents.features * latents.theta + latents.noise;
  Dataset data;
  data.responses.resize(cfg.n);
  for (Eigen::Index i = 0; i < cfg.n; ++i)
    data.responses[i] = sigmoid(margin[i]) >= 0.5 ? 1.0 : 0.0;
  data.features = std::move(latents.features);
  data.truth = std::move(latents.theta);
  data.noise_sigma = cfg.noise_sigma;
  return data;
}

}  // namespace

Dataset generate_linear_dataset(const DataGenConfig& cfg) {
  return assemble_linear(cfg, draw_latents(cfg, nullptr));
}

Dataset generate_logistic_dataset(const DataGenConfig& cfg) {
  return assemble_logistic(cfg, draw_latents(cfg, nullptr));
}

Dataset generate_dataset(const DataGenConfig& cfg) {
  return cfg.task == Task::linear ? generate_linear_dataset(cfg)
                                  : generate_logistic_dataset(cfg);
}

Dataset generate_linear_dataset(const DataGenConfig& cfg,
                                const Eigen::VectorXd& truth) {
  return assemble_linear(cfg, draw_latents(cfg, &truth));
}

Dataset generate_logistic_dataset(const DataGenConfig& cfg,
                                  const Eigen::VectorXd& truth) {
  return assemble_logistic(cfg, draw_latents(cfg, &truth));
}

Dataset generate_dataset(const DataGenConfig& cfg,
                         const Eigen::VectorXd& truth) {
  return cfg.task == Task::linear ? generate_linear_dataset(cfg, truth)
                                  : generate_logistic_dataset(cfg, truth);
}

}  // namespace lar
