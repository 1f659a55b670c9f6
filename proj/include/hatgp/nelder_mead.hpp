#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include <Eigen/Core>

#include "hatgp/errors.hpp"

namespace hatgp {

struct NelderMeadOptions {
  int max_evals = 4000;
  double f_tol = 1e-10;   // absolute spread of simplex values
  double x_tol = 1e-9;    // max coordinate spread of the simplex
  double init_step = 0.25;
};

struct NelderMeadResult {
  Eigen::VectorXd x;
  double fval = 0.0;
  int evals = 0;
  bool converged = false;
};

// Classic Nelder-Mead downhill simplex (reflection 1, expansion 2,
// contraction 1/2, shrink 1/2).  Fully deterministic: the simplex is seeded
// from x0 with a fixed per-coordinate step and ties are resolved by stable
// ordering.
template <typename F>
NelderMeadResult nelder_mead(F&& f, const Eigen::VectorXd& x0,
                             const NelderMeadOptions& opt = {}) {
  const int n = static_cast<int>(x0.size());
  if (n < 1) throw ConfigError("nelder_mead needs at least one parameter");

  std::vector<Eigen::VectorXd> xs;
  std::vector<double> fs;
  xs.reserve(static_cast<std::size_t>(n + 1));
  fs.reserve(static_cast<std::size_t>(n + 1));
  int evals = 0;
  auto eval = [&](const Eigen::VectorXd& x) {
    ++evals;
    const double v = f(x);
    return std::isnan(v) ? std::numeric_limits<double>::infinity() : v;
  };

  xs.push_back(x0);
  fs.push_back(eval(x0));
  for (int k = 0; k < n; ++k) {
    Eigen::VectorXd x = x0;
    x[k] += opt.init_step;
    xs.push_back(x);
    fs.push_back(eval(x));
  }

  std::vector<int> order(static_cast<std::size_t>(n + 1));
  std::iota(order.begin(), order.end(), 0);
  auto sort_simplex = [&] {
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return fs[static_cast<std::size_t>(a)] <
                                                fs[static_cast<std::size_t>(b)]; });
  };

  while (evals < opt.max_evals) {
    sort_simplex();
    const int best = order.front();
    const int worst = order.back();
    const int second_worst = order[static_cast<std::size_t>(n - 1)];

    double f_spread = fs[static_cast<std::size_t>(worst)] - fs[static_cast<std::size_t>(best)];
    double x_spread = 0.0;
    for (int i = 1; i <= n; ++i) {
      x_spread = std::max(x_spread, (xs[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])] -
                                     xs[static_cast<std::size_t>(best)])
                                        .cwiseAbs()
                                        .maxCoeff());
    }
    if (f_spread <= opt.f_tol || x_spread <= opt.x_tol) {
      return {xs[static_cast<std::size_t>(best)], fs[static_cast<std::size_t>(best)], evals, true};
    }

    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(n);
    for (int i = 0; i < n; ++i) centroid += xs[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])];
    centroid /= static_cast<double>(n);

    const Eigen::VectorXd reflected = centroid + (centroid - xs[static_cast<std::size_t>(worst)]);
    const double f_reflected = eval(reflected);

    if (f_reflected < fs[static_cast<std::size_t>(best)]) {
      const Eigen::VectorXd expanded = centroid + 2.0 * (centroid - xs[static_cast<std::size_t>(worst)]);
      const double f_expanded = eval(expanded);
      if (f_expanded < f_reflected) {
        xs[static_cast<std::size_t>(worst)] = expanded;
        fs[static_cast<std::size_t>(worst)] = f_expanded;
      } else {
        xs[static_cast<std::size_t>(worst)] = reflected;
        fs[static_cast<std::size_t>(worst)] = f_reflected;
      }
      continue;
    }
    if (f_reflected < fs[static_cast<std::size_t>(second_worst)]) {
      xs[static_cast<std::size_t>(worst)] = reflected;
      fs[static_cast<std::size_t>(worst)] = f_reflected;
      continue;
    }
    // Contraction, outside or inside of the worst vertex.
    if (f_reflected < fs[static_cast<std::size_t>(worst)]) {
      const Eigen::VectorXd outside = centroid + 0.5 * (reflected - centroid);
      const double f_outside = eval(outside);
      if (f_outside <= f_reflected) {
        xs[static_cast<std::size_t>(worst)] = outside;
        fs[static_cast<std::size_t>(worst)] = f_outside;
        continue;
      }
    } else {
      const Eigen::VectorXd inside = centroid + 0.5 * (xs[static_cast<std::size_t>(worst)] - centroid);
      const double f_inside = eval(inside);
      if (f_inside < fs[static_cast<std::size_t>(worst)]) {
        xs[static_cast<std::size_t>(worst)] = inside;
        fs[static_cast<std::size_t>(worst)] = f_inside;
        continue;
      }
    }
    // Shrink towards the best vertex.
    for (int i = 1; i <= n; ++i) {
      const int idx = order[static_cast<std::size_t>(i)];
      xs[static_cast<std::size_t>(idx)] =
          xs[static_cast<std::size_t>(best)] +
          0.5 * (xs[static_cast<std::size_t>(idx)] - xs[static_cast<std::size_t>(best)]);
      fs[static_cast<std::size_t>(idx)] = eval(xs[static_cast<std::size_t>(idx)]);
    }
  }

  sort_simplex();
  const int best = order.front();
  return {xs[static_cast<std::size_t>(best)], fs[static_cast<std::size_t>(best)], evals, false};
}

}  // namespace hatgp
