#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "hatgp/basis.hpp"
#include "hatgp/errors.hpp"
#include "hatgp/grid.hpp"

namespace hatgp {

enum class ConstraintKind { Boundedness, Monotonicity, Convexity };

inline std::string constraint_kind_name(ConstraintKind kind) {
  switch (kind) {
    case ConstraintKind::Boundedness: return "boundedness";
    case ConstraintKind::Monotonicity: return "monotonicity";
    case ConstraintKind::Convexity: return "convexity";
  }
  throw ConfigError("unknown constraint kind");
}

inline ConstraintKind parse_constraint_kind(const std::string& name) {
  if (name == "boundedness") return ConstraintKind::Boundedness;
  if (name == "monotonicity") return ConstraintKind::Monotonicity;
  if (name == "convexity") return ConstraintKind::Convexity;
  throw ConfigError("unknown constraint kind '" + name + "'");
}

// One shape requirement.  Boundedness uses [lower, upper] (either side may
// be infinite); monotonicity and componentwise convexity apply to the listed
// ambient variables, or to every active variable when the list is empty.
struct Constraint {
  ConstraintKind kind = ConstraintKind::Boundedness;
  double lower = -std::numeric_limits<double>::infinity();
  double upper = std::numeric_limits<double>::infinity();
  std::vector<int> variables;

  static Constraint bounded(double lo, double hi) {
    Constraint c;
    c.kind = ConstraintKind::Boundedness;
    c.lower = lo;
    c.upper = hi;
    if (!(lo < hi)) throw ConfigError("boundedness requires lower < upper");
    return c;
  }
  static Constraint monotone(std::vector<int> vars = {}) {
    Constraint c;
    c.kind = ConstraintKind::Monotonicity;
    c.variables = std::move(vars);
    return c;
  }
  static Constraint convex(std::vector<int> vars = {}) {
    Constraint c;
    c.kind = ConstraintKind::Convexity;
    c.variables = std::move(vars);
    return c;
  }
};

// Conjunction of constraints; inequality rows are stacked in list order.
using ConstraintSet = std::vector<Constraint>;

// Sparse linear inequality system M alpha <= v over flattened grid
// coefficients.  Every row has at most three nonzero entries.
struct InequalitySystem {
  using Row = std::vector<std::pair<Eigen::Index, double>>;

  std::vector<Row> rows;
  Eigen::VectorXd bounds;  // v
  Eigen::Index cols = 0;

  Eigen::Index row_count() const { return static_cast<Eigen::Index>(rows.size()); }

  double row_dot(Eigen::Index r, const Eigen::VectorXd& alpha) const {
    double s = 0.0;
    for (const auto& [j, w] : rows[static_cast<std::size_t>(r)]) s += w * alpha[j];
    return s;
  }

  // Largest violation max_r (M alpha - v)_r; <= 0 means feasible.
  double violation(const Eigen::VectorXd& alpha) const {
    double worst = -std::numeric_limits<double>::infinity();
    if (rows.empty()) return 0.0;
    for (Eigen::Index r = 0; r < row_count(); ++r) {
      worst = std::max(worst, row_dot(r, alpha) - bounds[r]);
    }
    return worst;
  }

  Eigen::MatrixXd dense() const {
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(row_count(), cols);
    for (Eigen::Index r = 0; r < row_count(); ++r) {
      for (const auto& [j, w] : rows[static_cast<std::size_t>(r)]) m(r, j) = w;
    }
    return m;
  }
};

namespace detail {

// Resolve a constraint's variable mask to active-list positions.
inline std::vector<int> mask_positions(const Constraint& c, const Subdivision& sub) {
  std::vector<int> positions;
  if (c.variables.empty()) {
    positions.resize(static_cast<std::size_t>(sub.dim()));
    for (int k = 0; k < sub.dim(); ++k) positions[static_cast<std::size_t>(k)] = k;
    return positions;
  }
  for (int var : c.variables) {
    if (var < 0 || var >= sub.ambient_dim()) {
      throw ConfigError("constraint variable index out of range");
    }
    if (sub.is_active(var)) positions.push_back(sub.position(var));
  }
  return positions;
}

}  // namespace detail

// Linearized inequality rows of a constraint conjunction on a subdivision.
//
//  * boundedness [a,b]: -alpha_l <= -a for every knot, then alpha_l <= b
//    (finite sides only);
//  * monotonicity along variable i: alpha_{l-e_i} - alpha_l <= 0;
//  * componentwise convexity along variable i: consecutive slopes must not
//    decrease.  With gaps h1 = t_l-1 - t_l-2 and h2 = t_l - t_l-1 the row is
//    normalized to a middle coefficient of 2:
//      -2*h2/(h1+h2) * alpha_{l-2e_i} + 2 * alpha_{l-e_i}
//      -2*h1/(h1+h2) * alpha_l <= 0,
//    which reduces to (-1, 2, -1) for equispaced knots.  Axes with only the
//    two boundary knots are linear along that variable and contribute no
//    rows.
inline InequalitySystem build_inequality(const ConstraintSet& constraints,
                                         const Subdivision& sub) {
  InequalitySystem sys;
  sys.cols = sub.grid_size();
  std::vector<double> bounds;
  const std::vector<int> shape = sub.shape();

  for (const Constraint& c : constraints) {
    switch (c.kind) {
      case ConstraintKind::Boundedness: {
        if (!(c.lower < c.upper)) throw ConfigError("boundedness requires lower < upper");
        if (std::isfinite(c.lower)) {
          for (Eigen::Index i = 0; i < sys.cols; ++i) {
            sys.rows.push_back({{i, -1.0}});
            bounds.push_back(-c.lower);
          }
        }
        if (std::isfinite(c.upper)) {
          for (Eigen::Index i = 0; i < sys.cols; ++i) {
            sys.rows.push_back({{i, 1.0}});
            bounds.push_back(c.upper);
          }
        }
        break;
      }
      case ConstraintKind::Monotonicity: {
        for (int k : detail::mask_positions(c, sub)) {
          const Eigen::Index stride = CoefficientGrid(shape).stride(k);
          for_each_multi_index(shape, [&](const std::vector<int>& multi, Eigen::Index flat) {
            if (multi[static_cast<std::size_t>(k)] == 0) return;
            sys.rows.push_back({{flat - stride, 1.0}, {flat, -1.0}});
            bounds.push_back(0.0);
          });
        }
        break;
      }
      case ConstraintKind::Convexity: {
        for (int k : detail::mask_positions(c, sub)) {
          const Subdivision1D& axis = sub.axis(k);
          if (axis.size() < 3) continue;
          const Eigen::Index stride = CoefficientGrid(shape).stride(k);
          for_each_multi_index(shape, [&](const std::vector<int>& multi, Eigen::Index flat) {
            const int lk = multi[static_cast<std::size_t>(k)];
            if (lk < 2) return;
            const double h1 = axis.knot(lk - 1) - axis.knot(lk - 2);
            const double h2 = axis.knot(lk) - axis.knot(lk - 1);
            sys.rows.push_back({{flat - 2 * stride, -2.0 * h2 / (h1 + h2)},
                                {flat - stride, 2.0},
                                {flat, -2.0 * h1 / (h1 + h2)}});
            bounds.push_back(0.0);
          });
        }
        break;
      }
    }
  }
  sys.bounds = Eigen::Map<const Eigen::VectorXd>(bounds.data(),
                                                 static_cast<Eigen::Index>(bounds.size()));
  return sys;
}

// Whether grid coefficients satisfy the linearized constraints up to `tol`.
inline bool check_feasible_grid(const ConstraintSet& constraints, const Subdivision& sub,
                                const CoefficientGrid& grid, double tol = 1e-8) {
  if (grid.shape() != sub.shape()) {
    throw ConfigError("coefficient grid does not match the subdivision");
  }
  return build_inequality(constraints, sub).violation(grid.values()) <= tol;
}

// Interpolation (design) matrix: Phi(i, l) = phi_l(x_i) for AMBIENT data
// points, one row per observation.  Each row has at most 2^dim nonzeros; the
// dense layout is fine at desk scale.
inline Eigen::MatrixXd build_interpolation(const Subdivision& sub, const Eigen::MatrixXd& x) {
  if (x.cols() != sub.ambient_dim()) {
    throw DataError("data has " + std::to_string(x.cols()) +
                    " columns but the model is " + std::to_string(sub.ambient_dim()) +
                    "-dimensional");
  }
  const int d = sub.dim();
  Eigen::MatrixXd phi = Eigen::MatrixXd::Zero(x.rows(), sub.grid_size());
  std::vector<AxisWeights> w(static_cast<std::size_t>(d));
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (int k = 0; k < d; ++k) {
      const double coord = x(i, sub.active()[static_cast<std::size_t>(k)]);
      if (!(coord >= 0.0 && coord <= 1.0)) {
        throw DataError("input row " + std::to_string(i + 1) + " lies outside [0,1]^d");
      }
      w[static_cast<std::size_t>(k)] = axis_weights(sub.axis(k), coord);
    }
    const auto corners = Eigen::Index{1} << d;
    for (Eigen::Index cidx = 0; cidx < corners; ++cidx) {
      double weight = 1.0;
      Eigen::Index flat = 0;
      for (int k = 0; k < d; ++k) {
        const auto& wk = w[static_cast<std::size_t>(k)];
        const bool hi = (cidx >> (d - 1 - k)) & 1;
        weight *= hi ? wk.w1 : wk.w0;
        if (weight == 0.0) break;
        flat = flat * sub.axis(k).size() + (wk.nu + (hi ? 1 : 0));
      }
      if (weight != 0.0) phi(i, flat) += weight;
    }
  }
  return phi;
}

}  // namespace hatgp
