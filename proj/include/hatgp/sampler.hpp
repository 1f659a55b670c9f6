#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "hatgp/basis.hpp"
#include "hatgp/constraints.hpp"
#include "hatgp/errors.hpp"
#include "hatgp/grid.hpp"
#include "hatgp/kernel.hpp"

namespace hatgp {

// Law of the knot values conditioned on noisy observations, truncated to the
// constraint polytope.
struct TruncatedGaussianSpec {
  Eigen::VectorXd mean;
  Eigen::MatrixXd covariance;  // symmetric positive definite (jittered)
  InequalitySystem truncation;
};

namespace detail {

// Normal quantile function (inverse CDF), Wichura's AS 241 rational
// approximation; relative error below 1e-15 across the open unit interval.
inline double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    if (p == 0.0) return -std::numeric_limits<double>::infinity();
    if (p == 1.0) return std::numeric_limits<double>::infinity();
    throw ConfigError("normal quantile needs a probability in [0, 1]");
  }
  const double q = p - 0.5;
  if (std::abs(q) <= 0.425) {
    const double r = 0.180625 - q * q;
    return q *
           (((((((2.5090809287301226727e3 * r + 3.3430575583588128105e4) * r +
                 6.7265770927008700853e4) *
                    r +
                4.5921953931549871457e4) *
                   r +
               1.3731693765509461125e4) *
                  r +
              1.9715909503065514427e3) *
                 r +
             1.3314166789178437745e2) *
                r +
            3.3871328727963666080e0) /
           (((((((5.2264952788528545610e3 * r + 2.8729085735721942674e4) * r +
                 3.9307895800092710610e4) *
                    r +
                2.1213794301586595867e4) *
                   r +
               5.3941960214247511077e3) *
                  r +
              6.8718700749205790830e2) *
                 r +
             4.2313330701600911252e1) *
                r +
            1.0);
  }
  double r = (q < 0.0) ? p : 1.0 - p;
  r = std::sqrt(-std::log(r));
  double value;
  if (r <= 5.0) {
    r -= 1.6;
    value = (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r +
                  2.41780725177450611770e-1) *
                     r +
                 1.27045825245236838258e0) *
                    r +
                3.64784832476320460504e0) *
                   r +
               5.76949722146069140550e0) *
                  r +
              4.63033784615654529590e0) *
                 r +
             1.42343711074968357734e0) /
            (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r +
                  1.51986665636164571966e-2) *
                     r +
                 1.48103976427480074590e-1) *
                    r +
                6.89767334985100004550e-1) *
                   r +
               1.67638483018380384940e0) *
                  r +
              2.05319162663775882187e0) *
                 r +
             1.0);
  } else {
    r -= 5.0;
    value = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
                  1.24266094738807843860e-3) *
                     r +
                 2.65321895265761230930e-2) *
                    r +
                2.96560571828504891230e-1) *
                   r +
               1.78482653991729133580e0) *
                  r +
              5.46378491116411436990e0) *
                 r +
             6.65790464350110377720e0) /
            (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r +
                  1.84631831751005468180e-5) *
                     r +
                 7.86869131145613259100e-4) *
                    r +
                1.48753612908506148525e-2) *
                   r +
               1.36929880922735805310e-1) *
                  r +
              5.99832206555887937690e-1) *
                 r +
             1.0);
  }
  return (q < 0.0) ? -value : value;
}

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

// Draw from a standard normal truncated to [a, b] by inverse-CDF.  Mirrors
// right-tail intervals into the left tail so the CDF evaluations stay in
// their well-conditioned region.
inline double truncated_standard_normal(double a, double b, double u) {
  if (a > 0.0) return -truncated_standard_normal(-b, -a, 1.0 - u);
  const double pa = normal_cdf(a);
  const double pb = normal_cdf(b);
  const double p = pa + u * (pb - pa);
  double z;
  if (p <= 0.0) {
    z = a;
  } else if (p >= 1.0) {
    z = b;
  } else {
    z = normal_quantile(p);
  }
  return std::clamp(z, a, b);
}

// Cholesky with an escalating diagonal shift, scaled to the matrix.
inline Eigen::LLT<Eigen::MatrixXd> jittered_llt(Eigen::MatrixXd sigma, double& jitter_out) {
  const double scale = std::max(sigma.diagonal().maxCoeff(), 1e-300);
  for (double jitter = 1e-12 * scale; jitter <= 1.0000001e-4 * scale; jitter *= 10.0) {
    Eigen::MatrixXd shifted = sigma;
    shifted.diagonal().array() += jitter;
    Eigen::LLT<Eigen::MatrixXd> llt(shifted);
    if (llt.info() == Eigen::Success) {
      jitter_out = jitter;
      return llt;
    }
  }
  throw NumericalError("posterior covariance is not factorizable even with jitter");
}

}  // namespace detail

// Gaussian conditioning of the knot values on noisy observations:
//   mean = K Phi^T (Phi K Phi^T + tau^2 I)^{-1} y
//   cov  = K - K Phi^T (Phi K Phi^T + tau^2 I)^{-1} Phi K   (+ jitter).
inline TruncatedGaussianSpec posterior_spec(const KernelModel& model, const Subdivision& sub,
                                            const ConstraintSet& constraints,
                                            const Eigen::MatrixXd& phi, const Eigen::VectorXd& y,
                                            double tau2) {
  if (!(tau2 > 0.0)) throw ConfigError("posterior conditioning requires a positive noise variance");
  if (phi.rows() != y.size()) throw DataError("interpolation rows and outputs disagree");
  const KnotCovariance cov = knot_covariance(model, sub);
  Eigen::MatrixXd k = cov.matrix;
  k.diagonal().array() += cov.jitter;

  TruncatedGaussianSpec spec;
  spec.truncation = build_inequality(constraints, sub);
  if (y.size() == 0) {
    spec.mean = Eigen::VectorXd::Zero(k.rows());
    spec.covariance = k;
    return spec;
  }
  if (phi.cols() != k.rows()) throw DataError("interpolation width and grid size disagree");

  Eigen::MatrixXd c = phi * k * phi.transpose();
  c.diagonal().array() += tau2;
  Eigen::LLT<Eigen::MatrixXd> llt(c);
  if (llt.info() != Eigen::Success) {
    throw NumericalError("observation covariance is not positive definite");
  }
  const Eigen::MatrixXd kpt = k * phi.transpose();
  spec.mean = kpt * llt.solve(y);
  spec.covariance = k - kpt * llt.solve(kpt.transpose());
  // Conditioning can push tiny negative eigenvalues in; symmetrize and let
  // the samplers re-jitter when factorizing.
  spec.covariance = 0.5 * (spec.covariance + spec.covariance.transpose());
  return spec;
}

enum class SampleMethod { Rejection, Gibbs };

inline const char* sample_method_name(SampleMethod m) {
  return m == SampleMethod::Rejection ? "rejection" : "gibbs";
}

struct SamplerOptions {
  int burn_in = 100;  // Gibbs sweeps discarded before the first draw
  int thin = 10;      // Gibbs sweeps between consecutive draws
  double feasibility_slack = 1e-10;
  long max_rejection_attempts = 0;  // 0: scaled from the requested count
};

namespace detail {

inline bool feasible(const InequalitySystem& sys, const Eigen::VectorXd& alpha, double slack) {
  return sys.violation(alpha) <= slack;
}

inline std::vector<Eigen::VectorXd> sample_rejection(const TruncatedGaussianSpec& spec,
                                                     int count, std::uint64_t seed,
                                                     const SamplerOptions& opt) {
  double jitter = 0.0;
  Eigen::LLT<Eigen::MatrixXd> llt = jittered_llt(spec.covariance, jitter);
  const Eigen::MatrixXd l = llt.matrixL();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss;
  std::vector<Eigen::VectorXd> draws;
  draws.reserve(static_cast<std::size_t>(count));
  const long budget = opt.max_rejection_attempts > 0
                          ? opt.max_rejection_attempts
                          : std::max<long>(100000, 20000L * count);
  Eigen::VectorXd eps(spec.mean.size());
  long attempts = 0;
  while (static_cast<int>(draws.size()) < count) {
    if (++attempts > budget) {
      throw NumericalError(
          "rejection sampling accepted " + std::to_string(draws.size()) + " of " +
          std::to_string(count) + " draws in " + std::to_string(budget) +
          " attempts; the constraint region has too little mass - use the gibbs method");
    }
    for (Eigen::Index i = 0; i < eps.size(); ++i) eps[i] = gauss(rng);
    Eigen::VectorXd draw = spec.mean + l * eps;
    if (feasible(spec.truncation, draw, opt.feasibility_slack)) draws.push_back(std::move(draw));
  }
  return draws;
}

inline std::vector<Eigen::VectorXd> sample_gibbs(const TruncatedGaussianSpec& spec, int count,
                                                 std::uint64_t seed, const SamplerOptions& opt,
                                                 const Eigen::VectorXd& start) {
  const Eigen::Index n = spec.mean.size();
  if (start.size() != n) throw ConfigError("gibbs start vector has the wrong size");
  if (!feasible(spec.truncation, start, opt.feasibility_slack)) {
    throw InfeasibleError("gibbs sampling needs a feasible starting point (use the fitted mode)");
  }
  double jitter = 0.0;
  Eigen::LLT<Eigen::MatrixXd> llt = jittered_llt(spec.covariance, jitter);
  const Eigen::MatrixXd precision = llt.solve(Eigen::MatrixXd::Identity(n, n));

  // Coordinate bounds induced by the truncation rows are refreshed from the
  // sparse row representation; w = Lambda (alpha - mean) is maintained
  // incrementally so one sweep costs O(n^2).
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Eigen::VectorXd alpha = start;
  Eigen::VectorXd w = precision * (alpha - spec.mean);

  std::vector<std::vector<std::pair<Eigen::Index, double>>> rows_touching(
      static_cast<std::size_t>(n));
  for (Eigen::Index r = 0; r < spec.truncation.row_count(); ++r) {
    for (const auto& [col, coef] : spec.truncation.rows[static_cast<std::size_t>(r)]) {
      if (coef != 0.0) rows_touching[static_cast<std::size_t>(col)].push_back({r, coef});
    }
  }

  auto sweep = [&]() {
    for (Eigen::Index i = 0; i < n; ++i) {
      const double lambda_ii = precision(i, i);
      const double sd = 1.0 / std::sqrt(lambda_ii);
      const double cond_mean =
          spec.mean[i] + (alpha[i] - spec.mean[i]) - w[i] / lambda_ii;
      double lo = -std::numeric_limits<double>::infinity();
      double hi = std::numeric_limits<double>::infinity();
      for (const auto& [r, coef] : rows_touching[static_cast<std::size_t>(i)]) {
        // Row: sum_j m_j alpha_j <= v.  Solve for alpha_i.
        const double rest = spec.truncation.row_dot(r, alpha) - coef * alpha[i];
        const double bound = (spec.truncation.bounds[r] - rest) / coef;
        if (coef > 0.0) {
          hi = std::min(hi, bound);
        } else {
          lo = std::max(lo, bound);
        }
      }
      // Roundoff can place the current value a hair outside; keep the
      // interval non-empty around it.
      lo = std::min(lo, alpha[i]);
      hi = std::max(hi, alpha[i]);
      const double a = (lo - cond_mean) / sd;
      const double b = (hi - cond_mean) / sd;
      const double z = truncated_standard_normal(a, b, unif(rng));
      const double updated = cond_mean + sd * z;
      const double delta = updated - alpha[i];
      if (delta != 0.0) {
        alpha[i] = updated;
        w += precision.col(i) * delta;
      }
    }
  };

  for (int s = 0; s < opt.burn_in; ++s) sweep();
  std::vector<Eigen::VectorXd> draws;
  draws.reserve(static_cast<std::size_t>(count));
  for (int d = 0; d < count; ++d) {
    for (int s = 0; s < std::max(1, opt.thin); ++s) sweep();
    draws.push_back(alpha);
  }
  return draws;
}

}  // namespace detail

// Draw `count` realizations from the truncated Gaussian.  Rejection needs no
// starting point; Gibbs starts from `start` (pass the fitted mode).  Both are
// deterministic for a fixed seed, and every draw satisfies the truncation
// within the configured slack.
inline std::vector<Eigen::VectorXd> sample(const TruncatedGaussianSpec& spec, int count,
                                           SampleMethod method, std::uint64_t seed,
                                           const SamplerOptions& opt = {},
                                           const Eigen::VectorXd& start = Eigen::VectorXd()) {
  if (count < 1) throw ConfigError("sample count must be positive");
  if (spec.covariance.rows() != spec.mean.size() ||
      spec.covariance.cols() != spec.mean.size()) {
    throw ConfigError("sampler mean and covariance sizes disagree");
  }
  if (method == SampleMethod::Rejection) return detail::sample_rejection(spec, count, seed, opt);
  Eigen::VectorXd init = start.size() > 0 ? start : spec.mean;
  return detail::sample_gibbs(spec, count, seed, opt, init);
}

// Pointwise empirical credible band of the splines induced by the draws,
// evaluated at rows of `points` (active coordinates).  Returns one
// (lower, upper) pair per point at the requested coverage level.
inline std::vector<std::pair<double, double>> credible_band(
    const std::vector<Eigen::VectorXd>& draws, const Subdivision& sub,
    const Eigen::MatrixXd& points, double level) {
  if (draws.size() < 2) throw ConfigError("credible bands need at least two draws");
  if (!(level > 0.0 && level <= 1.0)) throw ConfigError("coverage level must be in (0, 1]");
  const double tail = 0.5 * (1.0 - level);
  std::vector<CoefficientGrid> grids;
  grids.reserve(draws.size());
  for (const Eigen::VectorXd& d : draws) grids.emplace_back(sub.shape(), d);
  std::vector<std::pair<double, double>> band;
  band.reserve(static_cast<std::size_t>(points.rows()));
  std::vector<double> values(draws.size());
  for (Eigen::Index p = 0; p < points.rows(); ++p) {
    const Eigen::VectorXd x = points.row(p).transpose();
    for (std::size_t d = 0; d < draws.size(); ++d) {
      values[d] = eval_spline(sub, grids[d], x);
    }
    std::sort(values.begin(), values.end());
    auto quantile = [&](double q) {
      const double pos = q * static_cast<double>(values.size() - 1);
      const std::size_t lo = static_cast<std::size_t>(pos);
      const std::size_t hi = std::min(lo + 1, values.size() - 1);
      const double frac = pos - static_cast<double>(lo);
      return values[lo] * (1.0 - frac) + values[hi] * frac;
    };
    band.push_back({quantile(tail), quantile(1.0 - tail)});
  }
  return band;
}

}  // namespace hatgp
