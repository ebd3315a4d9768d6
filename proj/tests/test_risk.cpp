#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "lar/bagging.hpp"
#include "lar/datagen.hpp"
#include "lar/glm.hpp"
#include "lar/risk.hpp"
#include "lar/rng.hpp"
#include "lar/types.hpp"

using lar::GlmFamily;
using lar::Partition;
using lar::RiskReport;

namespace {

Eigen::MatrixXd random_matrix(Eigen::Index n, Eigen::Index d,
                              std::uint64_t seed) {
  lar::rng::RngStream stream(seed);
  Eigen::MatrixXd m(n, d);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < d; ++j) m(i, j) = stream.normal();
  return m;
}

Eigen::VectorXd random_vector(Eigen::Index n, std::uint64_t seed) {
  lar::rng::RngStream stream(seed);
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = stream.normal();
  return v;
}

// Dense bag-averaging projection for small n; the reference for everything
// the library computes implicitly.
Eigen::MatrixXd dense_projection(const Partition& partition) {
  const auto n = static_cast<Eigen::Index>(partition.sample_count());
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(n, n);
  for (const auto& bag : partition.bags) {
    const double w = 1.0 / static_cast<double>(bag.size());
    for (std::size_t a : bag)
      for (std::size_t b : bag)
        p(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = w;
  }
  return p;
}

// Rows e_bag / sqrt(|bag|); materialized only here, for small-n checks.
Eigen::MatrixXd dense_bagging_matrix(const Partition& partition) {
  const auto n = static_cast<Eigen::Index>(partition.sample_count());
  const auto m = static_cast<Eigen::Index>(partition.bag_count());
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(m, n);
  for (std::size_t l = 0; l < partition.bag_count(); ++l) {
    const double w = 1.0 / std::sqrt(static_cast<double>(
                               partition.bags[l].size()));
    for (std::size_t i : partition.bags[l])
      s(static_cast<Eigen::Index>(l), static_cast<Eigen::Index>(i)) = w;
  }
  return s;
}

}  // namespace

TEST_CASE("singleton bags have zero bias") {
  const Eigen::MatrixXd X = random_matrix(120, 4, 1);
  const Eigen::VectorXd theta = random_vector(4, 2);
  const auto report = lar::linear_risk_decomposition(
      X, theta, 0.3, lar::random_bagging(120, 1, 3));
  CHECK(report.bias_sq == 0.0);
  CHECK(report.total == report.bias_sq + report.variance);
}

TEST_CASE("single bag with zero signal matches the direct variance formula") {
  const Eigen::Index n = 80;
  const Eigen::MatrixXd X = random_matrix(n, 3, 4);
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(3);
  const double sigma = 0.7;
  const Partition p = lar::random_bagging(n, n, 5);
  const auto report = lar::linear_risk_decomposition(X, zero, sigma, p);
  CHECK(report.bias_sq == 0.0);

  const Eigen::MatrixXd gram_inv =
      (X.transpose() * X).ldlt().solve(Eigen::MatrixXd::Identity(3, 3));
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(n);
  const Eigen::MatrixXd direct =
      gram_inv * X.transpose() * ones * ones.transpose() * X * gram_inv /
      static_cast<double>(n);
  CHECK(report.variance ==
        doctest::Approx(sigma * sigma * direct.trace()).epsilon(1e-9));
}

TEST_CASE("implicit computation matches the materialized bagging matrix") {
  for (std::uint64_t seed : {6, 7, 8}) {
    const Eigen::Index n = 150 + static_cast<Eigen::Index>(seed) * 10;
    const Eigen::MatrixXd X = random_matrix(n, 5, seed);
    const Eigen::VectorXd theta = random_vector(5, seed + 50);
    const double sigma = 0.4;
    const Partition p =
        lar::random_bagging(static_cast<std::size_t>(n), 6, seed + 100);
    const auto report = lar::linear_risk_decomposition(X, theta, sigma, p);

    const Eigen::MatrixXd s = dense_bagging_matrix(p);
    const Eigen::MatrixXd proj = dense_projection(p);
    // The two dense forms agree: S'S is the averaging projection, SS' = I.
    CHECK((s.transpose() * s - proj).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((s * s.transpose() -
           Eigen::MatrixXd::Identity(s.rows(), s.rows()))
              .cwiseAbs()
              .maxCoeff() < 1e-12);

    const Eigen::MatrixXd gram_inv =
        (X.transpose() * X)
            .ldlt()
            .solve(Eigen::MatrixXd::Identity(5, 5));
    const Eigen::VectorXd bias_vec =
        gram_inv * X.transpose() *
        ((proj - Eigen::MatrixXd::Identity(n, n)) * (X * theta));
    const Eigen::MatrixXd var_mat = gram_inv * X.transpose() * s.transpose();
    CHECK(report.bias_sq ==
          doctest::Approx(bias_vec.squaredNorm()).epsilon(1e-9));
    CHECK(report.variance ==
          doctest::Approx(sigma * sigma * var_mat.squaredNorm())
              .epsilon(1e-9));
    // trace(I - S'S) = n - m.
    CHECK((Eigen::MatrixXd::Identity(n, n) - proj).trace() ==
          doctest::Approx(static_cast<double>(n) -
                          static_cast<double>(p.bag_count()))
              .epsilon(1e-9));
  }
}

TEST_CASE("analytic linear risk matches a monte carlo oracle") {
  const Eigen::Index n = 500;
  const Eigen::Index d = 4;
  const std::size_t k = 8;
  const double sigma = 0.5;
  const Eigen::MatrixXd X = random_matrix(n, d, 9);
  const Eigen::VectorXd theta = random_vector(d, 10);
  const Partition p = lar::random_bagging(n, k, 11);
  const auto report = lar::linear_risk_decomposition(X, theta, sigma, p);

  const Eigen::VectorXd signal = X * theta;
  const Eigen::LDLT<Eigen::MatrixXd> gram((X.transpose() * X).eval());
  const int redraws = 2000;
  double mean = 0.0;
  double m2 = 0.0;
  lar::rng::RngStream noise(12, lar::rng::Stream::monte_carlo, 0, 0);
  for (int t = 0; t < redraws; ++t) {
    Eigen::VectorXd eps(n);
    for (Eigen::Index i = 0; i < n; ++i) eps[i] = sigma * noise.normal();
    const Eigen::VectorXd averaged = lar::bag_mean_expand(p, signal + eps);
    const Eigen::VectorXd fit = gram.solve(X.transpose() * averaged);
    const double err = (fit - theta).squaredNorm();
    const double delta = err - mean;
    mean += delta / (t + 1);
    m2 += delta * (err - mean);
  }
  const double se = std::sqrt(m2 / (redraws - 1.0) / redraws);
  CHECK(std::abs(report.total - mean) < 3.0 * se);
}

TEST_CASE("linear upper bound dominates and collapses correctly at k=1") {
  const Eigen::Index n = 200;
  const Eigen::Index d = 4;
  const Eigen::MatrixXd X = random_matrix(n, d, 13);
  const Eigen::VectorXd theta = random_vector(d, 14);

  const auto bounded = lar::linear_risk_upper_bound(
      X, theta, 0.3, lar::random_bagging(n, 4, 15));
  REQUIRE(bounded.upper_bound.has_value());
  CHECK(*bounded.upper_bound >= bounded.total);

  const auto singletons = lar::linear_risk_upper_bound(
      X, theta, 0.3, lar::random_bagging(n, 1, 16));
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eigs(
      (X.transpose() * X).eval());
  const double op_sq = 1.0 / eigs.eigenvalues().minCoeff();
  CHECK(*singletons.upper_bound ==
        doctest::Approx(op_sq * 0.09 * d).epsilon(1e-6));
}

TEST_CASE("gaussian gradient moments reduce to the linear numerators") {
  const Eigen::Index n = 90;
  const Eigen::MatrixXd X = random_matrix(n, 3, 17);
  const Eigen::VectorXd theta = random_vector(3, 18);
  const Partition p = lar::random_bagging(n, 3, 19);
  const auto moments =
      lar::glm_gradient_moments(X, theta, GlmFamily::gaussian(), p);

  const Eigen::MatrixXd proj = dense_projection(p);
  const Eigen::VectorXd mu = X * theta;  // identity mean function
  const double bias_direct =
      (X.transpose() * (proj * mu - mu)).squaredNorm();
  CHECK(moments.bias_sq == doctest::Approx(bias_direct).epsilon(1e-9));

  // b'' = 1: variance = || X' S'S ||_F^2 with unit dispersion.
  const double var_direct = (X.transpose() * proj).squaredNorm();
  CHECK(moments.variance == doctest::Approx(var_direct).epsilon(1e-9));

  const auto k1 = lar::glm_gradient_moments(X, theta, GlmFamily::gaussian(),
                                            lar::random_bagging(n, 1, 20));
  CHECK(k1.bias_sq == 0.0);
}

TEST_CASE("logistic gradient moments match a monte carlo oracle") {
  const Eigen::Index n = 300;
  const Eigen::Index d = 4;
  const std::size_t k = 4;
  const Eigen::MatrixXd X = random_matrix(n, d, 21);
  Eigen::VectorXd theta = random_vector(d, 22);
  theta *= 0.8 / theta.norm();
  const Partition p = lar::random_bagging(n, k, 23);
  const auto moments =
      lar::glm_gradient_moments(X, theta, GlmFamily::bernoulli_logit(), p);

  Eigen::VectorXd mu(n);
  const Eigen::VectorXd eta = X * theta;
  for (Eigen::Index i = 0; i < n; ++i)
    mu[i] = GlmFamily::bernoulli_logit().mean(eta[i]);

  const int redraws = 5000;
  double mean = 0.0;
  double m2 = 0.0;
  lar::rng::RngStream stream(24, lar::rng::Stream::monte_carlo, 1, 0);
  for (int t = 0; t < redraws; ++t) {
    Eigen::VectorXd y(n);
    for (Eigen::Index i = 0; i < n; ++i)
      y[i] = stream.uniform() < mu[i] ? 1.0 : 0.0;
    // Unnormalized gradient of the aggregate loss at theta*.
    const Eigen::VectorXd grad =
        X.transpose() * (lar::bag_mean_expand(p, y) - mu);
    const double norm_sq = grad.squaredNorm();
    const double delta = norm_sq - mean;
    mean += delta / (t + 1);
    m2 += delta * (norm_sq - mean);
  }
  const double se = std::sqrt(m2 / (redraws - 1.0) / redraws);
  CHECK(std::abs(moments.total - mean) < 3.0 * se);
}

TEST_CASE("glm bound dominates the moments on random instances") {
  int instances = 0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const Eigen::Index n = 40 + static_cast<Eigen::Index>(seed % 7) * 15;
    const Eigen::Index d = 2 + static_cast<Eigen::Index>(seed % 3);
    const std::size_t k = 1 + seed % 5;
    const Eigen::MatrixXd X = random_matrix(n, d, 200 + seed);
    Eigen::VectorXd theta = random_vector(d, 300 + seed);
    theta *= 0.6;
    const GlmFamily family = (seed % 2 == 0) ? GlmFamily::bernoulli_logit()
                                             : GlmFamily::gaussian();
    const Partition p =
        lar::random_bagging(static_cast<std::size_t>(n), k, 400 + seed);
    const auto bounded = lar::glm_gradient_upper_bound(X, theta, family, p);
    REQUIRE(bounded.upper_bound.has_value());
    REQUIRE(*bounded.upper_bound >= bounded.total * (1.0 - 1e-12));
    ++instances;
  }
  CHECK(instances == 50);
}

TEST_CASE("constant variance recovers the min(m,d) structure") {
  const Eigen::Index n = 120;
  const Eigen::Index d = 3;
  const Eigen::MatrixXd X = random_matrix(n, d, 25);
  const Partition p = lar::random_bagging(n, 5, 26);
  // Gaussian: v_i = dispersion for every i, so the bag-weighted sum is
  // dispersion * m.
  const double dispersion = 0.49;
  const Eigen::VectorXd v = Eigen::VectorXd::Constant(n, dispersion);
  CHECK(lar::bag_weighted_variance_sum(v, p) ==
        doctest::Approx(dispersion * static_cast<double>(p.bag_count()))
            .epsilon(1e-12));
}

TEST_CASE("logistic variance factors obey the margin ratio bound") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Eigen::Index n = 200;
    const Eigen::Index d = 4;
    Eigen::MatrixXd X = random_matrix(n, d, 500 + seed);
    // Rescale rows to a hard norm cap B.
    const double cap = 1.5;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double norm = X.row(i).norm();
      if (norm > cap) X.row(i) *= cap / norm;
    }
    Eigen::VectorXd theta = random_vector(d, 600 + seed);
    const Eigen::VectorXd eta = X * theta;
    double v_min = 1e300;
    double v_max = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double v = GlmFamily::bernoulli_logit().mean_derivative(eta[i]);
      v_min = std::min(v_min, v);
      v_max = std::max(v_max, v);
    }
    CHECK(v_max / v_min <= std::exp(2.0 * cap * theta.norm()) * (1.0 + 1e-9));
  }
}

TEST_CASE("curated bias grows with the bag size") {
  const Eigen::Index n = 1 << 12;
  const Eigen::Index d = 4;
  const Eigen::MatrixXd X = random_matrix(n, d, 27);
  Eigen::VectorXd theta = random_vector(d, 28);
  theta /= theta.norm();
  double previous = -1.0;
  for (std::size_t k : {1, 2, 4, 8, 16}) {
    const Partition p = lar::curated_bags_by_score(X * theta, k);
    const auto report = lar::linear_risk_decomposition(X, theta, 0.0, p);
    CHECK(report.bias_sq >= previous);
    previous = report.bias_sq;
  }
}

TEST_CASE("curated bags separate bias from random bags") {
  lar::DataGenConfig cfg;
  cfg.n = 1 << 14;
  cfg.d = 8;
  cfg.noise_sigma = 0.1;
  cfg.seed = 29;
  const std::size_t k = 4;
  const auto result = lar::bias_separation_experiment(cfg, k, 5);
  const double reference = (1.0 - 1.0 / static_cast<double>(k)) *
                           (1.0 - 1.0 / static_cast<double>(k));
  CHECK(result.random_reference == doctest::Approx(reference));
  CHECK(result.random_bias_sq >= 0.8 * reference);
  CHECK(result.random_bias_sq <= 1.0 * reference * (1.0 + 1e-9));
  CHECK(result.curated_bias_sq <= 0.05 * result.random_bias_sq);

  SUBCASE("singleton bags have no bias on either side") {
    const auto none = lar::bias_separation_experiment(cfg, 1, 2);
    CHECK(none.curated_bias_sq == 0.0);
    CHECK(none.random_bias_sq == 0.0);
  }
  SUBCASE("infeasible sizes are rejected") {
    lar::DataGenConfig tiny = cfg;
    tiny.n = 60;  // 2kd = 64 > 60
    CHECK_THROWS_AS(lar::bias_separation_experiment(tiny, k, 1),
                    lar::InfeasibleError);
  }
}

TEST_CASE("rank deficient designs are rejected") {
  Eigen::MatrixXd X = random_matrix(50, 3, 30);
  X.col(2) = 2.0 * X.col(0);
  const Eigen::VectorXd theta = random_vector(3, 31);
  CHECK_THROWS_AS(
      lar::linear_risk_decomposition(X, theta, 0.1,
                                     lar::random_bagging(50, 2, 32)),
      lar::SingularDesignError);
}
