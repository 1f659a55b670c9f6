#pragma once

#include <algorithm>
#include <limits>
#include <numeric>
#include <random>
#include <vector>

#include <Eigen/Core>

#include "hatgp/errors.hpp"

namespace hatgp {

namespace detail {

inline double min_pairwise_distance(const Eigen::MatrixXd& x) {
  double best = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index j = i + 1; j < x.rows(); ++j) {
      best = std::min(best, (x.row(i) - x.row(j)).squaredNorm());
    }
  }
  return std::sqrt(best);
}

// Smallest distance from row i to any other row; enough to evaluate a swap
// proposal without rescanning every pair.
inline double min_distance_to_row(const Eigen::MatrixXd& x, Eigen::Index i) {
  double best = std::numeric_limits<double>::infinity();
  for (Eigen::Index j = 0; j < x.rows(); ++j) {
    if (j == i) continue;
    best = std::min(best, (x.row(i) - x.row(j)).squaredNorm());
  }
  return best;
}

}  // namespace detail

// Space-filling design on [0,1]^dim: a Latin hypercube (one point per
// axis-aligned stratum, cell midpoints) improved by randomized coordinate
// swaps that are accepted only when they increase the minimal pairwise
// distance.  Deterministic for a fixed seed.
inline Eigen::MatrixXd maximin_lhd(int n, int dim, std::uint64_t seed, int sweeps = 50) {
  if (n < 1 || dim < 1) throw ConfigError("design needs n >= 1 and dim >= 1");
  std::mt19937_64 rng(seed);
  Eigen::MatrixXd x(n, dim);
  std::vector<int> perm(static_cast<std::size_t>(n));
  for (int j = 0; j < dim; ++j) {
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    for (int i = 0; i < n; ++i) x(i, j) = (perm[static_cast<std::size_t>(i)] + 0.5) / n;
  }
  if (n == 1) return x;

  double current = detail::min_pairwise_distance(x);
  std::uniform_int_distribution<int> pick_row(0, n - 1);
  std::uniform_int_distribution<int> pick_col(0, dim - 1);
  const long proposals = static_cast<long>(sweeps) * n * dim;
  for (long k = 0; k < proposals; ++k) {
    const int a = pick_row(rng);
    int b = pick_row(rng);
    while (b == a) b = pick_row(rng);
    const int j = pick_col(rng);
    std::swap(x(a, j), x(b, j));
    // Swapping one coordinate of two rows preserves the Latin property; keep
    // the swap only if the global minimal distance grows.
    const double moved = std::min(detail::min_distance_to_row(x, a),
                                  detail::min_distance_to_row(x, b));
    double proposed = std::sqrt(moved);
    if (proposed > current) {
      // Rows a and b improved locally, but the global minimum may live
      // elsewhere; confirm before accepting.
      proposed = detail::min_pairwise_distance(x);
    }
    if (proposed > current) {
      current = proposed;
    } else {
      std::swap(x(a, j), x(b, j));
    }
  }
  return x;
}

}  // namespace hatgp
