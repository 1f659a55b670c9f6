#pragma once

#include <cmath>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "hatgp/errors.hpp"
#include "hatgp/grid.hpp"

namespace hatgp {

// Asymmetric hat function with support [u, w] and peak at v:
// rises linearly from u to v, falls linearly from v to w, zero outside.
inline double hat_basis_eval(double u, double v, double w, double t) {
  if (!(u < v && v < w)) {
    throw ConfigError("hat function nodes must satisfy u < v < w");
  }
  if (t <= u || t >= w) return 0.0;
  if (t <= v) return (t - u) / (v - u);
  return (w - t) / (w - v);
}

// Interval location plus the two hat-function weights that are active there.
// For t in [knot(nu), knot(nu+1)] the only nonzero basis functions along the
// axis are nu (weight w0) and nu+1 (weight w1); w0 + w1 = 1 exactly at knots.
struct AxisWeights {
  int nu;
  double w0;
  double w1;
};

inline AxisWeights axis_weights(const Subdivision1D& axis, double t) {
  int nu = axis.locate(t);
  double lo = axis.knot(nu);
  double hi = axis.knot(nu + 1);
  double w1 = (t - lo) / (hi - lo);
  if (t == lo) w1 = 0.0;
  if (t == hi) w1 = 1.0;
  return {nu, 1.0 - w1, w1};
}

// Tensorized hat basis function indexed by a 0-based multi-index over the
// active variables, evaluated at a point given in ACTIVE coordinates (one
// entry per active variable, in active order).
inline double tensor_basis_eval(const Subdivision& sub,
                                const std::vector<int>& multi,
                                const Eigen::VectorXd& x) {
  if (static_cast<int>(multi.size()) != sub.dim() || x.size() != sub.dim()) {
    throw ConfigError("tensor basis expects one index and coordinate per active variable");
  }
  double value = 1.0;
  for (int k = 0; k < sub.dim(); ++k) {
    const Subdivision1D& axis = sub.axis(k);
    int l = multi[static_cast<std::size_t>(k)];
    if (l < 0 || l >= axis.size()) throw ConfigError("basis index out of range");
    value *= hat_basis_eval(axis.extended_knot(l - 1), axis.knot(l),
                            axis.extended_knot(l + 1), x[k]);
    if (value == 0.0) return 0.0;
  }
  return value;
}

// Evaluate the tensorized spline sum_l coeffs[l] * phi_l at a point in
// ACTIVE coordinates.  Only the 2^d corners of the containing grid cell
// contribute; zero-weight corners are skipped so that values stored at grid
// knots are reproduced exactly.
inline double eval_spline(const Subdivision& sub, const CoefficientGrid& grid,
                          const Eigen::VectorXd& x) {
  const int d = sub.dim();
  if (x.size() != d) {
    throw ConfigError("eval_spline expects one coordinate per active variable");
  }
  if (grid.shape() != sub.shape()) {
    throw ConfigError("coefficient grid does not match the subdivision");
  }
  std::vector<AxisWeights> w(static_cast<std::size_t>(d));
  for (int k = 0; k < d; ++k) w[static_cast<std::size_t>(k)] = axis_weights(sub.axis(k), x[k]);

  double value = 0.0;
  const auto corners = Eigen::Index{1} << d;
  for (Eigen::Index c = 0; c < corners; ++c) {
    double weight = 1.0;
    Eigen::Index flat = 0;
    for (int k = 0; k < d; ++k) {
      const auto& wk = w[static_cast<std::size_t>(k)];
      const bool hi = (c >> (d - 1 - k)) & 1;
      weight *= hi ? wk.w1 : wk.w0;
      if (weight == 0.0) break;
      flat = flat * sub.axis(k).size() + (wk.nu + (hi ? 1 : 0));
    }
    if (weight != 0.0) value += weight * grid[flat];
  }
  return value;
}

// Projection onto the spline space: coefficients are the values of f at the
// tensorized knots.  f is called with a point in ACTIVE coordinates.
template <typename F>
CoefficientGrid project(const Subdivision& sub, F&& f) {
  CoefficientGrid grid(sub.shape());
  Eigen::VectorXd point(sub.dim());
  for_each_multi_index(sub.shape(), [&](const std::vector<int>& multi, Eigen::Index flat) {
    for (int k = 0; k < sub.dim(); ++k) {
      point[k] = sub.axis(k).knot(multi[static_cast<std::size_t>(k)]);
    }
    grid[flat] = f(point);
  });
  return grid;
}

struct RefinedModel {
  Subdivision sub;
  CoefficientGrid coeffs;
};

// Re-express a spline on a subdivision refined by one extra knot t on the
// axis of `variable`.  The returned coefficients reproduce the original
// spline exactly: the coefficient at the new knot is the linear interpolation
// of its two axis neighbours, all others are copied (shifted above t).
inline RefinedModel insert_knot(const Subdivision& sub, const CoefficientGrid& grid,
                                int variable, double t, double min_separation) {
  if (grid.shape() != sub.shape()) {
    throw ConfigError("coefficient grid does not match the subdivision");
  }
  Subdivision refined = sub.with_inserted_knot(variable, t, min_separation);
  const int k = sub.position(variable);
  const Subdivision1D& axis = sub.axis(k);
  const int nu = axis.locate(t);  // knot(nu) < t < knot(nu+1)
  const double lo = axis.knot(nu);
  const double hi = axis.knot(nu + 1);
  const double w_hi = (t - lo) / (hi - lo);

  CoefficientGrid out(refined.shape());
  for_each_multi_index(refined.shape(), [&](const std::vector<int>& multi, Eigen::Index flat) {
    const auto uk = static_cast<std::size_t>(k);
    std::vector<int> src = multi;
    const int lk = multi[uk];
    if (lk <= nu) {
      out[flat] = grid.at(src);
    } else if (lk == nu + 1) {
      src[uk] = nu;
      const double a_lo = grid.at(src);
      src[uk] = nu + 1;
      const double a_hi = grid.at(src);
      out[flat] = (1.0 - w_hi) * a_lo + w_hi * a_hi;
    } else {
      src[uk] = lk - 1;
      out[flat] = grid.at(src);
    }
  });
  return {std::move(refined), std::move(out)};
}

// Re-express a spline after activating one more variable with the minimal
// subdivision {0,1}.  Coefficients are duplicated along the new axis: the
// two new hat functions sum to one, so the spline is unchanged as a function
// of the enlarged active set.
inline RefinedModel add_variable(const Subdivision& sub, const CoefficientGrid& grid,
                                 int variable) {
  if (grid.shape() != sub.shape()) {
    throw ConfigError("coefficient grid does not match the subdivision");
  }
  Subdivision refined = sub.with_variable(variable);
  const int pos = refined.position(variable);

  CoefficientGrid out(refined.shape());
  for_each_multi_index(refined.shape(), [&](const std::vector<int>& multi, Eigen::Index flat) {
    std::vector<int> src = multi;
    src.erase(src.begin() + pos);
    out[flat] = grid.at(src);
  });
  return {std::move(refined), std::move(out)};
}

}  // namespace hatgp
