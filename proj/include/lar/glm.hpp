#pragma once

#include <Eigen/Dense>
#include <string>

#include "lar/types.hpp"

namespace lar {

// Exponential-family model with canonical link, eta = x' theta.
//
//   gaussian        b(eta) = eta^2 / 2
//   bernoulli_logit b(eta) = log(1 + e^eta), evaluated in a form that stays
//                   finite for |eta| up to at least 700
//   poisson_log     b(eta) = e^eta
//
// mean() is b', mean_derivative() is b'' (nonnegative for all three, which
// keeps the fitting Hessian positive semidefinite), variance() is
// dispersion * b''.
struct GlmFamily {
  enum class Kind { gaussian, bernoulli_logit, poisson_log };

  Kind kind = Kind::gaussian;
  double dispersion = 1.0;  // a(phi); 1 unless a caller says otherwise

  double cumulant(double eta) const;
  double mean(double eta) const;
  double mean_derivative(double eta) const;
  double variance(double eta) const { return dispersion * mean_derivative(eta); }

  std::string name() const;

  static GlmFamily gaussian(double dispersion = 1.0);
  static GlmFamily bernoulli_logit();
  static GlmFamily poisson_log();
};

struct ModelParams {
  Eigen::VectorXd theta;
};

struct FitConfig {
  double l2_lambda = 0.0;   // strength of the (lambda/2)||theta||^2 penalty
  int max_iter = 100;
  double grad_tol = 1e-10;
  bool line_search = true;  // halve the step until the objective improves
};

struct FitResult {
  ModelParams params;
  int iterations = 0;
  double grad_norm = 0.0;
  bool converged = true;  // false means max_iter hit; a warning, not an error
};

// Least squares of expanded targets on X through the normal equations with a
// stable factorization and one round of iterative refinement.  Throws
// SingularDesignError when the Gram condition estimate exceeds 1e12.
FitResult fit_linear_event_level(const Eigen::MatrixXd& features,
                                 const Eigen::VectorXd& expanded_targets);

// Newton's method with step halving on the per-sample objective
//
//   (1/(n phi)) sum_i [ b(x_i' theta) - t_i x_i' theta ] + (lambda/2)||theta||^2
//
// started from theta = 0.  When the Hessian condition estimate exceeds 1e12
// the step falls back to the negative gradient (unit step, then halving).
// A non-finite objective raises DivergenceError; hitting max_iter only
// clears FitResult::converged.
FitResult fit_glm_event_level(const Eigen::MatrixXd& features,
                              const Eigen::VectorXd& targets,
                              const GlmFamily& family, const FitConfig& cfg);

// Mean responses b'(X theta).
Eigen::VectorXd predict(const ModelParams& params,
                        const Eigen::MatrixXd& features,
                        const GlmFamily& family);

enum class Metric { mse, log_loss };

std::string to_string(Metric metric);

// Mean squared error of the linear predictor, or mean negative log
// likelihood of the sigmoid probabilities clamped to [1e-12, 1 - 1e-12].
// The metric must match the family (mse with gaussian, log_loss with
// bernoulli_logit); any other pairing throws ConfigError.
double evaluate_loss(const ModelParams& params,
                     const Eigen::MatrixXd& features,
                     const Eigen::VectorXd& responses,
                     const GlmFamily& family, Metric metric);

// The loss conventionally reported for a family's task.
Metric metric_for(const GlmFamily& family);

// Objective value and gradient of the fit_glm_event_level objective; shared
// by the fitter and the finite-difference tests.
double glm_objective(const Eigen::MatrixXd& features,
                     const Eigen::VectorXd& targets, const GlmFamily& family,
                     double l2_lambda, const Eigen::VectorXd& theta);
Eigen::VectorXd glm_gradient(const Eigen::MatrixXd& features,
                             const Eigen::VectorXd& targets,
                             const GlmFamily& family, double l2_lambda,
                             const Eigen::VectorXd& theta);

}  // namespace lar
