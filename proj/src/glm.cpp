#include "lar/glm.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <cmath>

#include "lar/datagen.hpp"

namespace lar {
namespace {

constexpr double kConditionLimit = 1e12;

// Condition estimate of a symmetric matrix from its eigenvalue extremes.
// Returns infinity when the smallest eigenvalue is not safely positive.
double spd_condition(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m);
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  if (lo <= 0.0 || hi <= 0.0) return std::numeric_limits<double>::infinity();
  return hi / lo;
}

void check_targets(const Eigen::VectorXd& targets, const GlmFamily& family) {
  switch (family.kind) {
    case GlmFamily::Kind::gaussian:
      return;
    case GlmFamily::Kind::bernoulli_logit:
      if ((targets.array() < 0.0).any() || (targets.array() > 1.0).any())
        throw ConfigError("glm: bernoulli targets must lie in [0,1]");
      return;
    case GlmFamily::Kind::poisson_log:
      if ((targets.array() < 0.0).any())
        throw ConfigError("glm: poisson targets must be nonnegative");
      return;
  }
}

}  // namespace

double GlmFamily::cumulant(double eta) const {
  switch (kind) {
    case Kind::gaussian:
      return 0.5 * eta * eta;
    case Kind::bernoulli_logit:
      // log(1 + e^eta) without overflow on either tail.
      return eta > 0.0 ? eta + std::log1p(std::exp(-eta))
                       : std::log1p(std::exp(eta));
    case Kind::poisson_log:
      return std::exp(eta);
  }
  return 0.0;
}

double GlmFamily::mean(double eta) const {
  switch (kind) {
    case Kind::gaussian:
      return eta;
    case Kind::bernoulli_logit:
      return sigmoid(eta);
    case Kind::poisson_log:
      return std::exp(eta);
  }
  return 0.0;
}

double GlmFamily::mean_derivative(double eta) const {
  switch (kind) {
    case Kind::gaussian:
      return 1.0;
    case Kind::bernoulli_logit: {
      const double p = sigmoid(eta);
      return p * (1.0 - p);
    }
    case Kind::poisson_log:
      return std::exp(eta);
  }
  return 0.0;
}

std::string GlmFamily::name() const {
  switch (kind) {
    case Kind::gaussian:
      return "gaussian";
    case Kind::bernoulli_logit:
      return "bernoulli_logit";
    case Kind::poisson_log:
      return "poisson_log";
  }
  return "";
}

GlmFamily GlmFamily::gaussian(double dispersion) {
  return GlmFamily{Kind::gaussian, dispersion};
}
GlmFamily GlmFamily::bernoulli_logit() {
  return GlmFamily{Kind::bernoulli_logit, 1.0};
}
GlmFamily GlmFamily::poisson_log() {
  return GlmFamily{Kind::poisson_log, 1.0};
}

FitResult fit_linear_event_level(const Eigen::MatrixXd& features,
                                 const Eigen::VectorXd& expanded_targets) {
  if (features.rows() != expanded_targets.size())
    throw ConfigError("fit_linear: target length does not match sample count");
  const Eigen::MatrixXd gram = features.transpose() * features;
  if (spd_condition(gram) > kConditionLimit)
    throw SingularDesignError("fit_linear: design matrix is rank deficient");
  const Eigen::VectorXd rhs = features.transpose() * expanded_targets;
  Eigen::LDLT<Eigen::MatrixXd> ldlt(gram);
  Eigen::VectorXd theta = ldlt.solve(rhs);
  // One refinement pass keeps the residual gradient near machine precision.
  theta += ldlt.solve(rhs - gram * theta);

  FitResult out;
  out.params.theta = std::move(theta);
  out.iterations = 1;
  out.grad_norm = (gram * out.params.theta - rhs).norm();
  out.converged = true;
  return out;
}

double glm_objective(const Eigen::MatrixXd& features,
                     const Eigen::VectorXd& targets, const GlmFamily& family,
                     double l2_lambda, const Eigen::VectorXd& theta) {
  const Eigen::VectorXd eta = features * theta;
  double nll = 0.0;
  for (Eigen::Index i = 0; i < eta.size(); ++i)
    nll += family.cumulant(eta[i]) - targets[i] * eta[i];
  const double n = static_cast<double>(features.rows());
  return nll / (n * family.dispersion) + 0.5 * l2_lambda * theta.squaredNorm();
}

Eigen::VectorXd glm_gradient(const Eigen::MatrixXd& features,
                             const Eigen::VectorXd& targets,
                             const GlmFamily& family, double l2_lambda,
                             const Eigen::VectorXd& theta) {
  const Eigen::VectorXd eta = features * theta;
  Eigen::VectorXd mu(eta.size());
  for (Eigen::Index i = 0; i < eta.size(); ++i) mu[i] = family.mean(eta[i]);
  const double n = static_cast<double>(features.rows());
  return features.transpose() * (mu - targets) / (n * family.dispersion) +
         l2_lambda * theta;
}

FitResult fit_glm_event_level(const Eigen::MatrixXd& features,
                              const Eigen::VectorXd& targets,
                              const GlmFamily& family, const FitConfig& cfg) {
  if (features.rows() != targets.size())
    throw ConfigError("fit_glm: target length does not match sample count");
  if (cfg.l2_lambda < 0.0)
    throw ConfigError("fit_glm: l2_lambda must be nonnegative");
  check_targets(targets, family);

  const Eigen::Index n = features.rows();
  const Eigen::Index d = features.cols();
  const double scale = static_cast<double>(n) * family.dispersion;

  Eigen::VectorXd theta = Eigen::VectorXd::Zero(d);
  double objective = glm_objective(features, targets, family, cfg.l2_lambda,
                                   theta);

  FitResult out;
  for (int iter = 1; iter <= cfg.max_iter; ++iter) {
    const Eigen::VectorXd eta = features * theta;
    Eigen::VectorXd mu(n), weight(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      mu[i] = family.mean(eta[i]);
      weight[i] = family.mean_derivative(eta[i]);
    }
    const Eigen::VectorXd grad =
        features.transpose() * (mu - targets) / scale + cfg.l2_lambda * theta;
    out.grad_norm = grad.norm();
    out.iterations = iter - 1;
    if (out.grad_norm <= cfg.grad_tol) {
      out.converged = true;
      out.params.theta = std::move(theta);
      return out;
    }

    Eigen::MatrixXd hessian =
        features.transpose() * weight.asDiagonal() * features / scale;
    hessian.diagonal().array() += cfg.l2_lambda;

    Eigen::VectorXd direction;
    if (spd_condition(hessian) > kConditionLimit)
      direction = -grad;  // unit gradient step; halving below tames it
    else
      direction = Eigen::LDLT<Eigen::MatrixXd>(hessian).solve(-grad);

    double step = 1.0;
    Eigen::VectorXd next = theta + step * direction;
    double next_objective =
        glm_objective(features, targets, family, cfg.l2_lambda, next);
    if (cfg.line_search) {
      while (!(next_objective <= objective) && step > 1e-18) {
        step *= 0.5;
        next = theta + step * direction;
        next_objective =
            glm_objective(features, targets, family, cfg.l2_lambda, next);
      }
    }
    if (!std::isfinite(next_objective))
      throw DivergenceError("fit_glm: objective diverged", iter);
    theta = std::move(next);
    objective = next_objective;
  }

  out.grad_norm =
      glm_gradient(features, targets, family, cfg.l2_lambda, theta).norm();
  out.iterations = cfg.max_iter;
  out.converged = false;
  out.params.theta = std::move(theta);
  return out;
}

Eigen::VectorXd predict(const ModelParams& params,
                        const Eigen::MatrixXd& features,
                        const GlmFamily& family) {
  if (features.cols() != params.theta.size())
    throw ConfigError("predict: feature dimension does not match theta");
  const Eigen::VectorXd eta = features * params.theta;
  Eigen::VectorXd mu(eta.size());
  for (Eigen::Index i = 0; i < eta.size(); ++i) mu[i] = family.mean(eta[i]);
  return mu;
}

std::string to_string(Metric metric) {
  return metric == Metric::mse ? "mse" : "log_loss";
}

Metric metric_for(const GlmFamily& family) {
  switch (family.kind) {
    case GlmFamily::Kind::gaussian:
      return Metric::mse;
    case GlmFamily::Kind::bernoulli_logit:
      return Metric::log_loss;
    case GlmFamily::Kind::poisson_log:
      break;
  }
  throw ConfigError("no reporting metric defined for family " + family.name());
}

double evaluate_loss(const ModelParams& params,
                     const Eigen::MatrixXd& features,
                     const Eigen::VectorXd& responses,
                     const GlmFamily& family, Metric metric) {
  if (features.rows() != responses.size())
    throw ConfigError("evaluate_loss: response length mismatch");
  const bool compatible =
      (metric == Metric::mse && family.kind == GlmFamily::Kind::gaussian) ||
      (metric == Metric::log_loss &&
       family.kind == GlmFamily::Kind::bernoulli_logit);
  if (!compatible)
    throw ConfigError("evaluate_loss: metric " + to_string(metric) +
                      " is incompatible with family " + family.name());

  const Eigen::VectorXd eta = features * params.theta;
  const double n = static_cast<double>(features.rows());
  if (metric == Metric::mse) return (responses - eta).squaredNorm() / n;

  double total = 0.0;
  for (Eigen::Index i = 0; i < eta.size(); ++i) {
    const double p =
        std::clamp(sigmoid(eta[i]), 1e-12, 1.0 - 1e-12);
    total -= responses[i] * std::log(p) +
             (1.0 - responses[i]) * std::log(1.0 - p);
  }
  return total / n;
}

}  // namespace lar
