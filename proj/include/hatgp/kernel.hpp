#pragma once

#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "hatgp/errors.hpp"
#include "hatgp/grid.hpp"

namespace hatgp {

enum class KernelFamily { SquaredExponential, Matern52, Matern32 };

inline std::string kernel_family_name(KernelFamily family) {
  switch (family) {
    case KernelFamily::SquaredExponential: return "squared-exponential";
    case KernelFamily::Matern52: return "matern-5/2";
    case KernelFamily::Matern32: return "matern-3/2";
  }
  throw ConfigError("unknown kernel family");
}

inline KernelFamily parse_kernel_family(const std::string& name) {
  if (name == "squared-exponential") return KernelFamily::SquaredExponential;
  if (name == "matern-5/2") return KernelFamily::Matern52;
  if (name == "matern-3/2") return KernelFamily::Matern32;
  throw ConfigError("unknown kernel family '" + name + "'");
}

// Stationary anisotropic covariance: one lengthscale per AMBIENT variable,
// a signal variance and an observation-noise variance.  Restricting the
// kernel to a subset of active variables amounts to dropping the inactive
// coordinates from the distance (they contribute zero for any common value).
struct KernelModel {
  KernelFamily family = KernelFamily::SquaredExponential;
  double variance = 1.0;
  Eigen::VectorXd lengthscales;  // size = ambient dimension
  double noise_variance = 0.0;

  static KernelModel isotropic(KernelFamily family, int ambient_dim,
                               double variance, double lengthscale,
                               double noise_variance = 0.0) {
    KernelModel m;
    m.family = family;
    m.variance = variance;
    m.lengthscales = Eigen::VectorXd::Constant(ambient_dim, lengthscale);
    m.noise_variance = noise_variance;
    return m;
  }

  void validate(int ambient_dim) const {
    if (lengthscales.size() != ambient_dim) {
      throw ConfigError("one lengthscale per ambient variable required");
    }
    if (!(variance > 0.0)) throw ConfigError("kernel variance must be positive");
    if (!(noise_variance >= 0.0)) throw ConfigError("noise variance must be >= 0");
    for (Eigen::Index j = 0; j < lengthscales.size(); ++j) {
      if (!(lengthscales[j] > 0.0)) throw ConfigError("lengthscales must be positive");
    }
  }
};

// Covariance between two points given in ACTIVE coordinates (one entry per
// variable in `active`, ambient indices).
inline double kernel_eval(const KernelModel& model, const std::vector<int>& active,
                          const Eigen::VectorXd& u, const Eigen::VectorXd& v) {
  const auto d = static_cast<Eigen::Index>(active.size());
  if (u.size() != d || v.size() != d) {
    throw ConfigError("kernel points must match the active variable count");
  }
  double r2 = 0.0;
  for (Eigen::Index k = 0; k < d; ++k) {
    const double scaled = (u[k] - v[k]) / model.lengthscales[active[static_cast<std::size_t>(k)]];
    r2 += scaled * scaled;
  }
  switch (model.family) {
    case KernelFamily::SquaredExponential:
      return model.variance * std::exp(-0.5 * r2);
    case KernelFamily::Matern52: {
      const double r = std::sqrt(5.0 * r2);
      return model.variance * (1.0 + r + r * r / 3.0) * std::exp(-r);
    }
    case KernelFamily::Matern32: {
      const double r = std::sqrt(3.0 * r2);
      return model.variance * (1.0 + r) * std::exp(-r);
    }
  }
  throw ConfigError("unknown kernel family");
}

// Hard cap on the tensorized grid: beyond this a dense knot covariance no
// longer fits the desk-scale budget.
inline constexpr Eigen::Index kMaxGridSize = 100000;

// Dense covariance of the tensorized knots together with a cached Cholesky
// factor of K + jitter*I.  Every subsequent K^{-1} application goes through
// this factor; the inverse itself is never formed.
struct KnotCovariance {
  Eigen::MatrixXd matrix;      // K, without jitter
  Eigen::MatrixXd chol_lower;  // L with L L^T = K + jitter*I
  double jitter = 0.0;
};

inline KnotCovariance knot_covariance(const KernelModel& model, const Subdivision& sub) {
  model.validate(sub.ambient_dim());
  const Eigen::Index n = sub.grid_size();
  if (n > kMaxGridSize) {
    throw ConfigError("knot grid of size " + std::to_string(n) +
                      " exceeds the supported maximum of " +
                      std::to_string(kMaxGridSize));
  }
  const Eigen::MatrixXd knots = grid_knots(sub);
  KnotCovariance cov;
  cov.matrix.resize(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j <= i; ++j) {
      const double k = kernel_eval(model, sub.active(), knots.row(i).transpose(),
                                   knots.row(j).transpose());
      cov.matrix(i, j) = k;
      cov.matrix(j, i) = k;
    }
  }
  // Jitter ladder: retry with a tenfold increase until the factorization
  // succeeds or the ceiling of 1e-6 * variance is passed.
  for (double jitter = 1e-10 * model.variance; jitter <= 1.0000001e-6 * model.variance;
       jitter *= 10.0) {
    Eigen::MatrixXd shifted = cov.matrix;
    shifted.diagonal().array() += jitter;
    Eigen::LLT<Eigen::MatrixXd> llt(shifted);
    if (llt.info() == Eigen::Success) {
      cov.chol_lower = llt.matrixL();
      cov.jitter = jitter;
      return cov;
    }
  }
  const double rcond = cov.matrix.ldlt().rcond();
  throw NumericalError(
      "knot covariance Cholesky failed for all jitter levels up to 1e-6*variance"
      " (reciprocal condition estimate " + std::to_string(rcond) + ")");
}

// Log marginal likelihood of observations y with interpolation matrix Phi:
// the Gaussian log-density of y under N(0, Phi K Phi^T + noise*I).
inline double log_marginal_likelihood(const KernelModel& model, const Subdivision& sub,
                                      const Eigen::MatrixXd& phi, const Eigen::VectorXd& y) {
  const KnotCovariance cov = knot_covariance(model, sub);
  const Eigen::Index n = y.size();
  if (phi.rows() != n || phi.cols() != cov.matrix.rows()) {
    throw ConfigError("interpolation matrix does not match the data and grid");
  }
  Eigen::MatrixXd c = phi * cov.matrix * phi.transpose();
  c.diagonal().array() += model.noise_variance;
  Eigen::LLT<Eigen::MatrixXd> llt(c);
  if (llt.info() != Eigen::Success) {
    // Same ladder as the knot covariance, now on the n x n data covariance.
    const double scale = std::max(model.variance, model.noise_variance);
    for (double jitter = 1e-10 * scale; jitter <= 1.0000001e-6 * scale; jitter *= 10.0) {
      Eigen::MatrixXd shifted = c;
      shifted.diagonal().array() += jitter;
      llt.compute(shifted);
      if (llt.info() == Eigen::Success) break;
    }
    if (llt.info() != Eigen::Success) {
      throw NumericalError("data covariance Cholesky failed for all jitter levels");
    }
  }
  const double log_det =
      2.0 * llt.matrixLLT().diagonal().array().log().sum();
  const double quad = y.dot(llt.solve(y));
  constexpr double kLog2Pi = 1.8378770664093454836;
  return -0.5 * (quad + log_det + static_cast<double>(n) * kLog2Pi);
}

}  // namespace hatgp
