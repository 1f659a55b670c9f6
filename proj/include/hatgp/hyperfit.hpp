#pragma once

#include <cmath>
#include <random>
#include <vector>

#include <Eigen/Core>

#include "hatgp/errors.hpp"
#include "hatgp/kernel.hpp"
#include "hatgp/nelder_mead.hpp"

namespace hatgp {

// Box bounds of the maximum-likelihood search.  Lengthscales are absolute;
// signal and noise variance bounds scale with the sample variance of y.
struct HyperBounds {
  double lengthscale_min = 1e-2;
  double lengthscale_max = 10.0;
  double variance_min_factor = 1e-4;
  double variance_max_factor = 10.0;
  double noise_min_factor = 1e-8;
  double noise_max_factor = 1.0;
};

struct HyperFitOptions {
  HyperBounds bounds;
  int restarts = 5;       // random restarts in addition to the warm start
  int max_evals = 2000;   // optimizer budget per start
  bool fit_noise = true;  // when false the noise variance is kept fixed
};

namespace detail {

inline double sample_variance(const Eigen::VectorXd& y) {
  if (y.size() < 2) return 1.0;
  const double mean = y.mean();
  const double var = (y.array() - mean).square().sum() / static_cast<double>(y.size() - 1);
  return std::max(var, 1e-12);
}

}  // namespace detail

// Maximum-likelihood estimate of the kernel hyperparameters: lengthscales of
// the ACTIVE variables, the signal variance and (optionally) the noise
// variance, optimized in log space by Nelder-Mead with seeded random
// restarts.  Inactive lengthscales are carried over from `init` untouched.
// The returned parameters always lie inside the bounds.
inline KernelModel fit_hyperparameters(const KernelModel& init, const Subdivision& sub,
                                       const Eigen::MatrixXd& phi, const Eigen::VectorXd& y,
                                       const HyperFitOptions& opt, std::uint64_t seed) {
  init.validate(sub.ambient_dim());
  if (phi.rows() != y.size()) throw ConfigError("Phi and y row counts differ");

  const double vy = detail::sample_variance(y);
  const int d = sub.dim();
  const int n_params = d + 1 + (opt.fit_noise ? 1 : 0);

  Eigen::VectorXd lo(n_params), hi(n_params);
  for (int k = 0; k < d; ++k) {
    lo[k] = std::log(opt.bounds.lengthscale_min);
    hi[k] = std::log(opt.bounds.lengthscale_max);
  }
  lo[d] = std::log(opt.bounds.variance_min_factor * vy);
  hi[d] = std::log(opt.bounds.variance_max_factor * vy);
  if (opt.fit_noise) {
    lo[d + 1] = std::log(opt.bounds.noise_min_factor * vy);
    hi[d + 1] = std::log(opt.bounds.noise_max_factor * vy);
  }

  auto clamp_params = [&](Eigen::VectorXd p) {
    for (int k = 0; k < n_params; ++k) p[k] = std::min(std::max(p[k], lo[k]), hi[k]);
    return p;
  };
  auto to_model = [&](const Eigen::VectorXd& p) {
    KernelModel m = init;
    for (int k = 0; k < d; ++k) {
      m.lengthscales[sub.active()[static_cast<std::size_t>(k)]] = std::exp(p[k]);
    }
    m.variance = std::exp(p[d]);
    if (opt.fit_noise) m.noise_variance = std::exp(p[d + 1]);
    return m;
  };

  auto objective = [&](const Eigen::VectorXd& p) {
    // Soft wall outside the box keeps the simplex search inside bounds while
    // still pointing back towards the feasible region.
    double violation = 0.0;
    for (int k = 0; k < n_params; ++k) {
      violation += std::max(0.0, lo[k] - p[k]) + std::max(0.0, p[k] - hi[k]);
    }
    if (violation > 0.0) return 1e15 * (1.0 + violation);
    try {
      return -log_marginal_likelihood(to_model(p), sub, phi, y);
    } catch (const NumericalError&) {
      return std::numeric_limits<double>::infinity();
    }
  };

  // Warm start from `init`, then seeded uniform restarts inside the box.
  Eigen::VectorXd warm(n_params);
  for (int k = 0; k < d; ++k) {
    warm[k] = std::log(init.lengthscales[sub.active()[static_cast<std::size_t>(k)]]);
  }
  warm[d] = std::log(init.variance);
  if (opt.fit_noise) {
    warm[d + 1] = std::log(std::max(init.noise_variance, opt.bounds.noise_min_factor * vy));
  }

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  NelderMeadOptions nm;
  nm.max_evals = opt.max_evals;

  Eigen::VectorXd best_p;
  double best_f = std::numeric_limits<double>::infinity();
  for (int start = 0; start <= opt.restarts; ++start) {
    Eigen::VectorXd p0(n_params);
    if (start == 0) {
      p0 = clamp_params(warm);
    } else {
      for (int k = 0; k < n_params; ++k) p0[k] = lo[k] + unif(rng) * (hi[k] - lo[k]);
    }
    const NelderMeadResult res = nelder_mead(objective, p0, nm);
    if (res.fval < best_f) {
      best_f = res.fval;
      best_p = res.x;
    }
  }
  if (!std::isfinite(best_f)) {
    throw NumericalError("hyperparameter fit failed: no start produced a finite likelihood");
  }
  return to_model(clamp_params(best_p));
}

}  // namespace hatgp
