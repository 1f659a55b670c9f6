#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "hatgp/constraints.hpp"
#include "hatgp/hyperfit.hpp"
#include "hatgp/kernel.hpp"
#include "oracles.hpp"

using namespace hatgp;

TEST_CASE("kernel families at reference distances", "[kernel]") {
  KernelModel se = KernelModel::isotropic(KernelFamily::SquaredExponential, 1, 1.0, 1.0);
  Eigen::VectorXd u(1), v(1);
  u << 0.0;
  v << 1.0;
  CHECK(kernel_eval(se, {0}, u, v) == Catch::Approx(std::exp(-0.5)));
  CHECK(kernel_eval(se, {0}, u, u) == 1.0);

  KernelModel m52 = KernelModel::isotropic(KernelFamily::Matern52, 1, 2.0, 0.5);
  const double r = std::sqrt(5.0) * 2.0;  // scaled distance of |u-v| = 1
  CHECK(kernel_eval(m52, {0}, u, v) ==
        Catch::Approx(2.0 * (1.0 + r + r * r / 3.0) * std::exp(-r)));
  KernelModel m32 = KernelModel::isotropic(KernelFamily::Matern32, 1, 1.5, 2.0);
  const double r3 = std::sqrt(3.0) * 0.5;
  CHECK(kernel_eval(m32, {0}, u, v) == Catch::Approx(1.5 * (1.0 + r3) * std::exp(-r3)));

  CHECK(parse_kernel_family("matern-5/2") == KernelFamily::Matern52);
  CHECK(kernel_family_name(KernelFamily::SquaredExponential) == "squared-exponential");
  CHECK_THROWS_AS(parse_kernel_family("cubic"), ConfigError);
}

TEST_CASE("restriction to active variables drops inactive coordinates", "[kernel]") {
  // Evaluating on the active pair must agree with the full kernel when the
  // inactive coordinates share any common value.
  std::mt19937_64 rng(11);
  KernelModel model = KernelModel::isotropic(KernelFamily::Matern52, 4, 1.3, 1.0);
  model.lengthscales << 0.3, 0.9, 2.0, 0.5;
  std::vector<int> active{1, 3};
  for (int rep = 0; rep < 20; ++rep) {
    Eigen::VectorXd u2 = oracle::random_point(rng, 2);
    Eigen::VectorXd v2 = oracle::random_point(rng, 2);
    Eigen::VectorXd u4 = oracle::random_point(rng, 4);
    Eigen::VectorXd v4 = u4;  // common inactive values
    u4[1] = u2[0];
    u4[3] = u2[1];
    v4[1] = v2[0];
    v4[3] = v2[1];
    CHECK(kernel_eval(model, active, u2, v2) ==
          Catch::Approx(kernel_eval(model, {0, 1, 2, 3}, u4, v4)).epsilon(1e-14));
  }
}

TEST_CASE("knot covariance is symmetric with a cached factor", "[kernel]") {
  std::mt19937_64 rng(5);
  Subdivision sub = oracle::random_subdivision(rng, 3, 2, 4);
  KernelModel model = KernelModel::isotropic(KernelFamily::SquaredExponential, 3, 2.0, 0.8);
  KnotCovariance cov = knot_covariance(model, sub);
  const Eigen::Index n = sub.grid_size();
  REQUIRE(cov.matrix.rows() == n);
  CHECK(cov.matrix.isApprox(cov.matrix.transpose(), 1e-14));
  CHECK((cov.matrix.diagonal().array() - 2.0).abs().maxCoeff() < 1e-14);
  CHECK(cov.jitter >= 1e-10 * model.variance);
  CHECK(cov.jitter <= 1e-6 * model.variance);
  Eigen::MatrixXd shifted = cov.matrix;
  shifted.diagonal().array() += cov.jitter;
  CHECK((cov.chol_lower * cov.chol_lower.transpose() - shifted).cwiseAbs().maxCoeff() <
        1e-10 * model.variance * static_cast<double>(n));
}

TEST_CASE("grid size guard rejects oversized tensors", "[kernel]") {
  std::vector<double> big;
  for (int i = 0; i <= 400; ++i) big.push_back(i / 400.0);
  Subdivision1D dense(big);
  Subdivision sub(2, {0, 1}, {dense, dense});  // 401^2 > 1e5 knots
  KernelModel model = KernelModel::isotropic(KernelFamily::SquaredExponential, 2, 1.0, 1.0);
  CHECK_THROWS_AS(knot_covariance(model, sub), ConfigError);
}

TEST_CASE("log marginal likelihood closed forms", "[kernel]") {
  // Single observation at a knot with unit prior variance and no noise:
  // the density of N(0,1) at zero.
  Subdivision sub = Subdivision::initial(1, 0);
  KernelModel model = KernelModel::isotropic(KernelFamily::SquaredExponential, 1, 1.0, 1.0);
  Eigen::MatrixXd phi(1, 2);
  phi << 1.0, 0.0;
  Eigen::VectorXd y(1);
  y << 0.0;
  CHECK(log_marginal_likelihood(model, sub, phi, y) ==
        Catch::Approx(-0.5 * std::log(2.0 * M_PI)).margin(1e-9));

  // Two observations against a dense-algebra evaluation of the same density.
  std::mt19937_64 rng(17);
  model.noise_variance = 0.05;
  Eigen::MatrixXd x(2, 1);
  x << 0.2, 0.7;
  Eigen::MatrixXd phi2(2, 2);
  phi2 << 0.8, 0.2, 0.3, 0.7;
  Eigen::VectorXd y2(2);
  y2 << 0.4, -0.1;
  KnotCovariance cov = knot_covariance(model, sub);
  Eigen::MatrixXd c = phi2 * cov.matrix * phi2.transpose();
  c.diagonal().array() += model.noise_variance;
  const double expected = -0.5 * (y2.dot(c.inverse() * y2) + std::log(c.determinant()) +
                                  2.0 * std::log(2.0 * M_PI));
  CHECK(log_marginal_likelihood(model, sub, phi2, y2) == Catch::Approx(expected).margin(1e-9));
}

TEST_CASE("hyperparameter fit stays in bounds and is deterministic", "[kernel]") {
  std::mt19937_64 rng(23);
  // Synthetic observations from a smooth monotone-ish function.
  const int n = 25;
  Eigen::MatrixXd x(n, 1);
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) {
    x(i, 0) = (i + 0.5) / n;
    y[i] = std::atan(6.0 * x(i, 0)) + 0.01 * std::sin(40.0 * x(i, 0));
  }
  Subdivision sub(1, {0}, {Subdivision1D({0.0, 0.25, 0.5, 0.75, 1.0})});
  Eigen::MatrixXd phi = build_interpolation(sub, x);

  KernelModel init = KernelModel::isotropic(KernelFamily::SquaredExponential, 1, 1.0, 1.0, 0.01);
  HyperFitOptions opt;
  opt.restarts = 3;
  KernelModel fit = fit_hyperparameters(init, sub, phi, y, opt, 99);
  KernelModel fit_again = fit_hyperparameters(init, sub, phi, y, opt, 99);
  CHECK(fit.lengthscales[0] == fit_again.lengthscales[0]);
  CHECK(fit.variance == fit_again.variance);
  CHECK(fit.noise_variance == fit_again.noise_variance);

  const double vy = (y.array() - y.mean()).square().sum() / (n - 1);
  CHECK(fit.lengthscales[0] >= 1e-2);
  CHECK(fit.lengthscales[0] <= 10.0);
  CHECK(fit.variance >= 1e-4 * vy);
  CHECK(fit.variance <= 10.0 * vy);
  CHECK(fit.noise_variance >= 1e-8 * vy);
  CHECK(fit.noise_variance <= vy);

  // The optimum it reports must beat the warm start.
  CHECK(log_marginal_likelihood(fit, sub, phi, y) >=
        log_marginal_likelihood(init, sub, phi, y) - 1e-9);
}
