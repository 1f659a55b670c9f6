#pragma once

#include <cmath>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "hatgp/errors.hpp"
#include "hatgp/grid.hpp"

namespace hatgp {

// Finite product domain F = F_1 x ... x F_d with each F_j an ordered set of
// nodes inside [0,1] that contains both endpoints.  This is the domain of
// corner data for the piecewise-multiaffine extension.
class MultiaffineDomain {
 public:
  explicit MultiaffineDomain(std::vector<std::vector<double>> nodes)
      : nodes_(std::move(nodes)) {
    if (nodes_.empty()) throw ConfigError("multiaffine domain needs rank >= 1");
    for (const auto& axis : nodes_) {
      if (axis.size() < 2 || axis.front() != 0.0 || axis.back() != 1.0) {
        throw ConfigError("each node set must contain 0 and 1");
      }
      for (std::size_t i = 1; i < axis.size(); ++i) {
        if (!(axis[i - 1] < axis[i])) {
          throw ConfigError("node sets must be strictly increasing");
        }
      }
    }
  }

  // Node sets of the active variables of a subdivision (knots inside [0,1]).
  static MultiaffineDomain from_subdivision(const Subdivision& sub) {
    std::vector<std::vector<double>> nodes(static_cast<std::size_t>(sub.dim()));
    for (int k = 0; k < sub.dim(); ++k) {
      nodes[static_cast<std::size_t>(k)] = sub.axis(k).knots();
    }
    return MultiaffineDomain(std::move(nodes));
  }

  int dim() const { return static_cast<int>(nodes_.size()); }

  const std::vector<double>& axis(int k) const {
    return nodes_[static_cast<std::size_t>(k)];
  }

 private:
  std::vector<std::vector<double>> nodes_;
};

// Piecewise-multiaffine extension of corner data from F to [0,1]^d.  For
// each coordinate the two neighbouring nodes t^- <= t_j <= t^+ receive the
// affine weights (t^+ - t_j)/(t^+ - t^-) and (t_j - t^-)/(t^+ - t^-); the
// extension is the weighted sum of corner values over all 2^d neighbour
// combinations.  Weights are non-negative and sum to one, and points of F
// reproduce their corner value exactly.  corner_value is called with a
// vector of node coordinates.
template <typename F>
double multiaffine_extend(const MultiaffineDomain& dom, F&& corner_value,
                          const Eigen::VectorXd& t) {
  const int d = dom.dim();
  if (t.size() != d) {
    throw ConfigError("multiaffine extension expects one coordinate per axis");
  }
  struct NodePair {
    double lo, hi;  // neighbouring node values
    double w_hi;    // weight of the upper node
  };
  std::vector<NodePair> pairs(static_cast<std::size_t>(d));
  for (int k = 0; k < d; ++k) {
    const auto& axis = dom.axis(k);
    const double tk = t[k];
    if (!(tk >= 0.0 && tk <= 1.0)) {
      throw ConfigError("extension point lies outside [0,1]^d");
    }
    auto it = std::upper_bound(axis.begin(), axis.end(), tk);
    int hi = std::min<int>(static_cast<int>(it - axis.begin()),
                           static_cast<int>(axis.size()) - 1);
    int lo = hi - 1;
    double w_hi = (tk - axis[static_cast<std::size_t>(lo)]) /
                  (axis[static_cast<std::size_t>(hi)] - axis[static_cast<std::size_t>(lo)]);
    if (tk == axis[static_cast<std::size_t>(lo)]) w_hi = 0.0;
    if (tk == axis[static_cast<std::size_t>(hi)]) w_hi = 1.0;
    pairs[static_cast<std::size_t>(k)] = {axis[static_cast<std::size_t>(lo)],
                                          axis[static_cast<std::size_t>(hi)], w_hi};
  }

  double value = 0.0;
  std::vector<double> corner(static_cast<std::size_t>(d));
  const auto combos = Eigen::Index{1} << d;
  for (Eigen::Index c = 0; c < combos; ++c) {
    double weight = 1.0;
    for (int k = 0; k < d; ++k) {
      const auto& p = pairs[static_cast<std::size_t>(k)];
      const bool hi = (c >> (d - 1 - k)) & 1;
      weight *= hi ? p.w_hi : (1.0 - p.w_hi);
      if (weight == 0.0) break;
      corner[static_cast<std::size_t>(k)] = hi ? p.hi : p.lo;
    }
    if (weight != 0.0) value += weight * corner_value(corner);
  }
  return value;
}

}  // namespace hatgp
