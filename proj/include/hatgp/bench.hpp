#pragma once

#include <cmath>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "hatgp/basis.hpp"
#include "hatgp/errors.hpp"
#include "hatgp/grid.hpp"

namespace hatgp {

// Analytic benchmark target on [0,1]^dimension with its known shape
// properties.
struct TestFunction {
  std::string name;
  int dimension = 0;
  std::function<double(const Eigen::VectorXd&)> eval;
  bool monotone = false;  // nondecreasing in every coordinate
};

// f(x) = x1/2 + arctan(10 x2): monotone in both inputs, far steeper across
// the second one.
inline TestFunction atan2d_function() {
  TestFunction f;
  f.name = "atan2d";
  f.dimension = 2;
  f.monotone = true;
  f.eval = [](const Eigen::VectorXd& x) { return 0.5 * x[0] + std::atan(10.0 * x[1]); };
  return f;
}

// f(x) = sum_{i=1..active} arctan(5 (1 - i/(active+1)) x_i) embedded in an
// ambient space with `ambient - active` inert trailing variables.  Monotone
// with growth rates that decay in i.
inline TestFunction modatan_function(int ambient, int active) {
  if (active < 1 || ambient < active) {
    throw ConfigError("modatan needs 1 <= active <= ambient dimensions");
  }
  TestFunction f;
  f.name = "modatan";
  f.dimension = ambient;
  f.monotone = true;
  f.eval = [active](const Eigen::VectorXd& x) {
    double s = 0.0;
    for (int i = 1; i <= active; ++i) {
      s += std::atan(5.0 * (1.0 - static_cast<double>(i) / (active + 1)) * x[i - 1]);
    }
    return s;
  };
  return f;
}

inline TestFunction test_function(const std::string& name, int ambient = 0, int active = 0) {
  if (name == "atan2d") return atan2d_function();
  if (name == "modatan") return modatan_function(ambient, active);
  throw ConfigError("unknown test function '" + name + "' (available: atan2d, modatan)");
}

// Baseline layouts get a deliberately small budget: dense tensor grids are
// the thing the sequential algorithm exists to avoid, and past ~2k knots the
// mode solves dominate any comparison run.
inline constexpr Eigen::Index kBaselineGridGuard = 2048;

namespace detail {

inline Subdivision1D equispaced_axis(int knots) {
  if (knots < 2) throw ConfigError("baseline axes need at least two knots");
  std::vector<double> t(static_cast<std::size_t>(knots));
  for (int l = 0; l < knots; ++l) t[static_cast<std::size_t>(l)] = static_cast<double>(l) / (knots - 1);
  return Subdivision1D(t);
}

}  // namespace detail

// Equispaced tensor layout with a per-active-variable knot count (the counts
// align with the sorted active list).
inline Subdivision rect_baseline(const std::vector<int>& counts, int ambient,
                                 std::vector<int> active) {
  if (active.empty()) throw ConfigError("baseline needs at least one active variable");
  if (counts.size() != active.size()) {
    throw ConfigError("baseline needs one knot count per active variable");
  }
  std::sort(active.begin(), active.end());
  Eigen::Index total = 1;
  std::vector<Subdivision1D> axes;
  axes.reserve(active.size());
  for (int c : counts) {
    axes.push_back(detail::equispaced_axis(c));
    total *= c;
    if (total > kBaselineGridGuard) {
      throw ConfigError("baseline layout exceeds the " + std::to_string(kBaselineGridGuard) +
                        "-knot guard; use fewer knots or dimensions");
    }
  }
  return Subdivision(ambient, std::move(active), std::move(axes));
}

// Same number of equispaced knots in every active variable.
inline Subdivision square_baseline(int knots_per_dim, int ambient, std::vector<int> active) {
  const std::vector<int> counts(active.size(), knots_per_dim);
  return rect_baseline(counts, ambient, std::move(active));
}

namespace detail {

inline Eigen::VectorXd restrict_to_active(const Subdivision& sub, const Eigen::VectorXd& x) {
  Eigen::VectorXd out(sub.dim());
  for (int k = 0; k < sub.dim(); ++k) out[k] = x[sub.active()[static_cast<std::size_t>(k)]];
  return out;
}

}  // namespace detail

// Normalized bending energy against an analytic target:
//   E_n = integral (f - spline)^2 / integral f^2  over [0,1]^dimension.
// Low dimension uses a tensor midpoint rule (100 points per axis); higher
// dimension switches to seeded Monte Carlo with 1e5 points.
inline double bending_energy(const TestFunction& f, const Subdivision& sub,
                             const CoefficientGrid& coeffs, std::uint64_t seed = 20) {
  if (f.dimension < 1) throw ConfigError("bending energy needs a positive dimension");
  if (sub.ambient_dim() != f.dimension) {
    throw ConfigError("bending energy: model and target dimensions disagree");
  }
  double num = 0.0, den = 0.0;
  auto accumulate = [&](const Eigen::VectorXd& x) {
    const double target = f.eval(x);
    const double fitted = eval_spline(sub, coeffs, detail::restrict_to_active(sub, x));
    num += (target - fitted) * (target - fitted);
    den += target * target;
  };
  if (f.dimension <= 2) {
    const int points = 100;
    Eigen::VectorXd x(f.dimension);
    if (f.dimension == 1) {
      for (int i = 0; i < points; ++i) {
        x[0] = (i + 0.5) / points;
        accumulate(x);
      }
    } else {
      for (int i = 0; i < points; ++i) {
        for (int j = 0; j < points; ++j) {
          x[0] = (i + 0.5) / points;
          x[1] = (j + 0.5) / points;
          accumulate(x);
        }
      }
    }
  } else {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    Eigen::VectorXd x(f.dimension);
    for (int i = 0; i < 100000; ++i) {
      for (int j = 0; j < f.dimension; ++j) x[j] = unit(rng);
      accumulate(x);
    }
  }
  if (!(den > 0.0)) throw ConfigError("bending energy undefined: the target integrates to zero");
  return num / den;
}

// Data-only variant over paired observations: sum (y - yhat)^2 / sum y^2.
inline double bending_energy_samples(const Eigen::VectorXd& y_true,
                                     const Eigen::VectorXd& y_pred) {
  if (y_true.size() != y_pred.size() || y_true.size() == 0) {
    throw ConfigError("bending energy needs matching non-empty sample vectors");
  }
  const double den = y_true.squaredNorm();
  if (!(den > 0.0)) throw ConfigError("bending energy undefined: the target samples are all zero");
  return (y_true - y_pred).squaredNorm() / den;
}

}  // namespace hatgp
