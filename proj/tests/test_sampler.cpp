#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <random>

#include "hatgp/mode.hpp"
#include "hatgp/sampler.hpp"
#include "oracles.hpp"

using namespace hatgp;

namespace {

TruncatedGaussianSpec scalar_spec(double mean, double var, bool nonneg) {
  TruncatedGaussianSpec spec;
  spec.mean = Eigen::VectorXd::Constant(1, mean);
  spec.covariance = Eigen::MatrixXd::Constant(1, 1, var);
  if (nonneg) {
    spec.truncation.rows = {{{0, -1.0}}};  // -alpha <= 0
    spec.truncation.bounds = Eigen::VectorXd::Zero(1);
    spec.truncation.cols = 1;
  }
  return spec;
}

double lag1_autocorrelation(const std::vector<Eigen::VectorXd>& draws, Eigen::Index coord) {
  const std::size_t n = draws.size();
  double mean = 0.0;
  for (const auto& d : draws) mean += d[coord];
  mean /= static_cast<double>(n);
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double c = draws[i][coord] - mean;
    den += c * c;
    if (i + 1 < n) num += c * (draws[i + 1][coord] - mean);
  }
  return num / den;
}

}  // namespace

TEST_CASE("normal quantile inverts the CDF", "[sampler]") {
  for (double p : {1e-12, 1e-6, 0.01, 0.3, 0.5, 0.7, 0.99, 1.0 - 1e-6}) {
    const double z = hatgp::detail::normal_quantile(p);
    CHECK(hatgp::detail::normal_cdf(z) == Catch::Approx(p).epsilon(1e-10));
  }
  CHECK(hatgp::detail::normal_quantile(0.5) == Catch::Approx(0.0).margin(1e-15));
  CHECK(hatgp::detail::normal_quantile(0.975) == Catch::Approx(1.959963984540054).margin(1e-12));
}

TEST_CASE("posterior conditioning matches the dense formula", "[sampler]") {
  std::mt19937_64 rng(601);
  std::normal_distribution<double> gauss;
  for (int trial = 0; trial < 8; ++trial) {
    Subdivision sub = oracle::random_subdivision(rng, 2, 1 + trial % 2, 2);
    KernelModel model = KernelModel::isotropic(KernelFamily::Matern52, 2, 1.2, 0.6);
    const double tau2 = 0.05;
    const int n = 6;
    Eigen::MatrixXd x(n, 2);
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) {
      x.row(i) = oracle::random_point(rng, 2).transpose();
      y[i] = gauss(rng);
    }
    Eigen::MatrixXd phi = build_interpolation(sub, x);
    TruncatedGaussianSpec spec = posterior_spec(model, sub, {}, phi, y, tau2);

    KnotCovariance cov = knot_covariance(model, sub);
    Eigen::MatrixXd k = cov.matrix;
    k.diagonal().array() += cov.jitter;
    Eigen::MatrixXd c = phi * k * phi.transpose();
    c.diagonal().array() += tau2;
    const Eigen::MatrixXd cinv = c.inverse();
    const Eigen::VectorXd mean = k * phi.transpose() * cinv * y;
    const Eigen::MatrixXd sigma = k - k * phi.transpose() * cinv * phi * k;
    CHECK((spec.mean - mean).lpNorm<Eigen::Infinity>() < 1e-8);
    CHECK((spec.covariance - sigma).lpNorm<Eigen::Infinity>() < 1e-8);
  }
}

TEST_CASE("posterior degenerates correctly without data and under huge noise", "[sampler]") {
  Subdivision sub(1, {0}, {Subdivision1D({0.0, 0.5, 1.0})});
  KernelModel model = KernelModel::isotropic(KernelFamily::SquaredExponential, 1, 2.0, 0.5);
  TruncatedGaussianSpec empty =
      posterior_spec(model, sub, {}, Eigen::MatrixXd(0, 3), Eigen::VectorXd(0), 0.1);
  CHECK(empty.mean.isZero(0.0));
  KnotCovariance cov = knot_covariance(model, sub);
  Eigen::MatrixXd k = cov.matrix;
  k.diagonal().array() += cov.jitter;
  CHECK((empty.covariance - k).lpNorm<Eigen::Infinity>() < 1e-12);

  Eigen::MatrixXd x(4, 1);
  x << 0.1, 0.4, 0.6, 0.9;
  Eigen::VectorXd y(4);
  y << 1.0, 2.0, 1.5, 2.5;
  Eigen::MatrixXd phi = build_interpolation(sub, x);
  const double var_y = (y.array() - y.mean()).square().sum() / 3.0;
  TruncatedGaussianSpec flooded = posterior_spec(model, sub, {}, phi, y, 1e6 * var_y);
  CHECK(flooded.mean.lpNorm<Eigen::Infinity>() < 1e-3);
}

TEST_CASE("unconstrained draws reproduce the spec moments", "[sampler]") {
  TruncatedGaussianSpec spec;
  spec.mean = Eigen::VectorXd(2);
  spec.mean << 1.0, -2.0;
  spec.covariance = Eigen::MatrixXd(2, 2);
  spec.covariance << 1.0, 0.3, 0.3, 0.5;

  const int n = 10000;
  for (SampleMethod method : {SampleMethod::Rejection, SampleMethod::Gibbs}) {
    auto draws = sample(spec, n, method, 42);
    REQUIRE(draws.size() == static_cast<std::size_t>(n));
    Eigen::Vector2d mean = Eigen::Vector2d::Zero();
    for (const auto& d : draws) mean += d;
    mean /= n;
    for (int i = 0; i < 2; ++i) {
      const double band = 4.0 * std::sqrt(spec.covariance(i, i) / n);
      INFO(sample_method_name(method) << " coordinate " << i);
      CHECK(std::abs(mean[i] - spec.mean[i]) < band);
    }
  }
}

TEST_CASE("half-normal mean is recovered by both methods", "[sampler]") {
  TruncatedGaussianSpec spec = scalar_spec(0.0, 1.0, /*nonneg=*/true);
  const double target = std::sqrt(2.0 / std::numbers::pi);
  const int n = 4000;
  const double mc_sd = std::sqrt(1.0 - 2.0 / std::numbers::pi) / std::sqrt(double(n));
  for (SampleMethod method : {SampleMethod::Rejection, SampleMethod::Gibbs}) {
    auto draws = sample(spec, n, method, 123);
    double mean = 0.0;
    for (const auto& d : draws) {
      REQUIRE(d[0] >= -1e-10);
      mean += d[0];
    }
    mean /= n;
    INFO(sample_method_name(method));
    CHECK(std::abs(mean - target) < 3.0 * mc_sd);
  }
}

TEST_CASE("every constrained draw is feasible and seeds are reproducible", "[sampler]") {
  // Monotone 1-D posterior fixture.
  Subdivision sub(1, {0}, {Subdivision1D({0.0, 0.25, 0.5, 0.75, 1.0})});
  KernelModel model = KernelModel::isotropic(KernelFamily::Matern52, 1, 1.0, 0.4);
  Eigen::MatrixXd x(6, 1);
  x << 0.05, 0.2, 0.4, 0.55, 0.8, 0.95;
  Eigen::VectorXd y(6);
  y << 0.0, 0.15, 0.3, 0.55, 0.8, 0.9;
  Eigen::MatrixXd phi = build_interpolation(sub, x);
  ConstraintSet cons = {Constraint::monotone()};
  TruncatedGaussianSpec spec = posterior_spec(model, sub, cons, phi, y, 0.01);
  KnotCovariance cov = knot_covariance(model, sub);
  ModeResult mode = compute_noisy_map(sub, cov, spec.truncation, phi, y, 0.01);

  for (SampleMethod method : {SampleMethod::Rejection, SampleMethod::Gibbs}) {
    auto draws = sample(spec, 50, method, 7, {}, mode.alpha.values());
    for (const auto& d : draws) {
      CHECK(spec.truncation.violation(d) <= 1e-10);
      CHECK(check_feasible_grid(cons, sub, CoefficientGrid(sub.shape(), d), 1e-8));
    }
    auto again = sample(spec, 50, method, 7, {}, mode.alpha.values());
    double diff = 0.0;
    for (std::size_t i = 0; i < draws.size(); ++i) {
      diff = std::max(diff, (draws[i] - again[i]).lpNorm<Eigen::Infinity>());
    }
    INFO(sample_method_name(method));
    CHECK(diff == 0.0);
  }

  // Thinned Gibbs mixes: lag-1 autocorrelation stays moderate.
  auto chain = sample(spec, 400, SampleMethod::Gibbs, 11, {}, mode.alpha.values());
  for (Eigen::Index coord = 0; coord < 5; ++coord) {
    CHECK(std::abs(lag1_autocorrelation(chain, coord)) < 0.9);
  }
}

TEST_CASE("gibbs rejects an infeasible start, rejection advises gibbs on tiny regions",
          "[sampler]") {
  TruncatedGaussianSpec spec = scalar_spec(0.0, 1.0, /*nonneg=*/true);
  Eigen::VectorXd bad = Eigen::VectorXd::Constant(1, -1.0);
  CHECK_THROWS_AS(sample(spec, 5, SampleMethod::Gibbs, 1, {}, bad), InfeasibleError);

  // Shift the mean far outside the half-line: acceptance ~ Phi(-8) ~ 6e-16.
  TruncatedGaussianSpec hopeless = scalar_spec(-8.0, 1.0, /*nonneg=*/true);
  SamplerOptions opt;
  opt.max_rejection_attempts = 20000;
  CHECK_THROWS_AS(sample(hopeless, 5, SampleMethod::Rejection, 1, opt), NumericalError);
}

TEST_CASE("credible bands are ordered, nested, and degenerate correctly", "[sampler]") {
  Subdivision sub(1, {0}, {Subdivision1D({0.0, 0.5, 1.0})});
  TruncatedGaussianSpec spec;
  spec.mean = Eigen::VectorXd::Zero(3);
  spec.covariance = Eigen::MatrixXd::Identity(3, 3);
  auto draws = sample(spec, 500, SampleMethod::Rejection, 77);
  Eigen::MatrixXd points(5, 1);
  points << 0.0, 0.25, 0.5, 0.75, 1.0;

  auto band90 = credible_band(draws, sub, points, 0.9);
  auto band50 = credible_band(draws, sub, points, 0.5);
  auto envelope = credible_band(draws, sub, points, 1.0);
  for (std::size_t p = 0; p < band90.size(); ++p) {
    CHECK(band90[p].first <= band50[p].first);
    CHECK(band50[p].first <= band50[p].second);
    CHECK(band50[p].second <= band90[p].second);
    CHECK(envelope[p].first <= band90[p].first);
    CHECK(envelope[p].second >= band90[p].second);
  }

  // Identical draws collapse the band to a point.
  std::vector<Eigen::VectorXd> constant(10, Eigen::VectorXd::Constant(3, 0.4));
  auto flat = credible_band(constant, sub, points, 0.9);
  for (const auto& [lo, hi] : flat) {
    CHECK(lo == Catch::Approx(0.4).margin(1e-14));
    CHECK(hi == Catch::Approx(0.4).margin(1e-14));
  }
  CHECK_THROWS_AS(credible_band({draws[0]}, sub, points, 0.9), ConfigError);
}
