#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "hatgp/errors.hpp"

namespace hatgp {

// One-dimensional subdivision of [0,1]: m >= 2 strictly increasing knots
// t_0 = 0 < t_1 < ... < t_{m-1} = 1, together with two implicit "ghost"
// knots at -1 and +2.  The ghosts only pin down the outer flanks of the
// boundary hat functions; they never enter the domain, the knot count, or
// the grid of coefficients.
class Subdivision1D {
 public:
  static constexpr double kGhostLeft = -1.0;
  static constexpr double kGhostRight = 2.0;

  // The minimal subdivision {0, 1}.
  Subdivision1D() : knots_{0.0, 1.0} {}

  explicit Subdivision1D(std::vector<double> knots) : knots_(std::move(knots)) {
    validate();
  }

  // Number of knots inside [0,1] (ghosts excluded).
  int size() const { return static_cast<int>(knots_.size()); }

  double knot(int l) const { return knots_[static_cast<std::size_t>(l)]; }

  const std::vector<double>& knots() const { return knots_; }

  // Ghost-extended accessor: index -1 yields the left ghost, index size()
  // the right ghost.
  double extended_knot(int l) const {
    if (l < 0) return kGhostLeft;
    if (l >= size()) return kGhostRight;
    return knots_[static_cast<std::size_t>(l)];
  }

  // Interval index nu with knot(nu) <= t <= knot(nu+1); t = 1 maps to the
  // last interval.  t must lie inside [0,1].
  int locate(double t) const {
    if (!(t >= 0.0 && t <= 1.0)) {
      throw ConfigError("point " + std::to_string(t) + " lies outside [0,1]");
    }
    auto it = std::upper_bound(knots_.begin(), knots_.end(), t);
    int nu = static_cast<int>(it - knots_.begin()) - 1;
    return std::min(nu, size() - 2);
  }

  // Distance from t to the nearest existing knot.
  double separation(double t) const {
    double best = std::numeric_limits<double>::infinity();
    for (double u : knots_) best = std::min(best, std::abs(t - u));
    return best;
  }

  // Copy of this subdivision with one extra interior knot.  Rejects knots
  // closer than min_separation to an existing one.
  Subdivision1D inserted(double t, double min_separation) const {
    if (!(t > 0.0 && t < 1.0)) {
      throw ConfigError("new knot must lie strictly inside (0,1)");
    }
    if (separation(t) < min_separation) {
      throw ConfigError("new knot " + std::to_string(t) +
                        " violates the minimum knot separation");
    }
    std::vector<double> out = knots_;
    out.insert(std::upper_bound(out.begin(), out.end(), t), t);
    return Subdivision1D(std::move(out));
  }

  bool operator==(const Subdivision1D& other) const {
    return knots_ == other.knots_;
  }

 private:
  void validate() const {
    if (knots_.size() < 2) {
      throw ConfigError("a subdivision needs at least the two boundary knots");
    }
    if (knots_.front() != 0.0 || knots_.back() != 1.0) {
      throw ConfigError("a subdivision must start at 0 and end at 1");
    }
    for (std::size_t i = 0; i < knots_.size(); ++i) {
      if (!std::isfinite(knots_[i])) throw ConfigError("non-finite knot");
      if (i > 0 && !(knots_[i - 1] < knots_[i])) {
        throw ConfigError("subdivision knots must be strictly increasing");
      }
    }
  }

  std::vector<double> knots_;
};

// Tensorized subdivision over a subset of active variables.  Variables are
// 0-based ambient indices; the active list is kept sorted and each active
// variable carries its own 1-D subdivision.  Inactive variables have no
// knots: the tensorized model is constant along them.
class Subdivision {
 public:
  Subdivision() : ambient_dim_(0) {}

  Subdivision(int ambient_dim, std::vector<int> active,
              std::vector<Subdivision1D> axes)
      : ambient_dim_(ambient_dim),
        active_(std::move(active)),
        axes_(std::move(axes)) {
    validate();
  }

  // Single active variable with the minimal subdivision {0, 1}.
  static Subdivision initial(int ambient_dim, int variable) {
    return Subdivision(ambient_dim, {variable}, {Subdivision1D()});
  }

  int ambient_dim() const { return ambient_dim_; }

  // Number of active variables.
  int dim() const { return static_cast<int>(active_.size()); }

  const std::vector<int>& active() const { return active_; }

  bool is_active(int variable) const {
    return std::binary_search(active_.begin(), active_.end(), variable);
  }

  // Position of an active variable inside the sorted active list.
  int position(int variable) const {
    auto it = std::lower_bound(active_.begin(), active_.end(), variable);
    if (it == active_.end() || *it != variable) {
      throw ConfigError("variable " + std::to_string(variable + 1) +
                        " is not active");
    }
    return static_cast<int>(it - active_.begin());
  }

  const Subdivision1D& axis(int k) const {
    return axes_[static_cast<std::size_t>(k)];
  }

  const Subdivision1D& axis_of(int variable) const {
    return axes_[static_cast<std::size_t>(position(variable))];
  }

  // Knot counts per active variable, in active order.
  std::vector<int> shape() const {
    std::vector<int> s(axes_.size());
    for (std::size_t k = 0; k < axes_.size(); ++k) s[k] = axes_[k].size();
    return s;
  }

  // Total number of tensorized knots.
  Eigen::Index grid_size() const {
    Eigen::Index n = 1;
    for (const auto& a : axes_) n *= a.size();
    return n;
  }

  // Copy with one extra knot on the axis of an active variable.
  Subdivision with_inserted_knot(int variable, double t,
                                 double min_separation) const {
    int k = position(variable);
    std::vector<Subdivision1D> axes = axes_;
    axes[static_cast<std::size_t>(k)] =
        axes[static_cast<std::size_t>(k)].inserted(t, min_separation);
    return Subdivision(ambient_dim_, active_, std::move(axes));
  }

  // Copy with one more active variable carrying the minimal subdivision.
  Subdivision with_variable(int variable) const {
    if (variable < 0 || variable >= ambient_dim_) {
      throw ConfigError("variable index out of range");
    }
    if (is_active(variable)) {
      throw ConfigError("variable " + std::to_string(variable + 1) +
                        " is already active");
    }
    std::vector<int> active = active_;
    auto it = std::lower_bound(active.begin(), active.end(), variable);
    int pos = static_cast<int>(it - active.begin());
    active.insert(it, variable);
    std::vector<Subdivision1D> axes = axes_;
    axes.insert(axes.begin() + pos, Subdivision1D());
    return Subdivision(ambient_dim_, std::move(active), std::move(axes));
  }

  bool operator==(const Subdivision& other) const {
    return ambient_dim_ == other.ambient_dim_ && active_ == other.active_ &&
           axes_ == other.axes_;
  }

 private:
  void validate() const {
    if (ambient_dim_ < 1) throw ConfigError("ambient dimension must be >= 1");
    if (active_.empty()) throw ConfigError("at least one active variable");
    if (active_.size() != axes_.size()) {
      throw ConfigError("one subdivision per active variable required");
    }
    for (std::size_t k = 0; k < active_.size(); ++k) {
      if (active_[k] < 0 || active_[k] >= ambient_dim_) {
        throw ConfigError("active variable index out of range");
      }
      if (k > 0 && !(active_[k - 1] < active_[k])) {
        throw ConfigError("active variables must be sorted and distinct");
      }
    }
  }

  int ambient_dim_;
  std::vector<int> active_;        // sorted ambient variable indices
  std::vector<Subdivision1D> axes_;  // one per active variable
};

// Dense tensor of per-knot values (basis coefficients, mode differences,
// ...) over the grid of a Subdivision.  Storage is row-major with the LAST
// active variable running fastest; every module relies on this layout.
class CoefficientGrid {
 public:
  CoefficientGrid() = default;

  explicit CoefficientGrid(std::vector<int> shape)
      : shape_(std::move(shape)),
        values_(Eigen::VectorXd::Zero(compute_size(shape_))) {}

  CoefficientGrid(std::vector<int> shape, Eigen::VectorXd values)
      : shape_(std::move(shape)), values_(std::move(values)) {
    if (values_.size() != compute_size(shape_)) {
      throw ConfigError("coefficient vector does not match the grid shape");
    }
  }

  static CoefficientGrid zeros_like(const Subdivision& sub) {
    return CoefficientGrid(sub.shape());
  }

  const std::vector<int>& shape() const { return shape_; }
  int dim() const { return static_cast<int>(shape_.size()); }
  Eigen::Index size() const { return values_.size(); }

  const Eigen::VectorXd& values() const { return values_; }
  Eigen::VectorXd& values() { return values_; }

  double operator[](Eigen::Index flat) const { return values_[flat]; }
  double& operator[](Eigen::Index flat) { return values_[flat]; }

  double at(const std::vector<int>& multi) const {
    return values_[flat_index(multi)];
  }
  double& at(const std::vector<int>& multi) {
    return values_[flat_index(multi)];
  }

  // Flat offset advanced by one step along `axis`.
  Eigen::Index stride(int axis) const {
    Eigen::Index s = 1;
    for (int k = axis + 1; k < dim(); ++k) s *= shape_[static_cast<std::size_t>(k)];
    return s;
  }

  Eigen::Index flat_index(const std::vector<int>& multi) const {
    if (static_cast<int>(multi.size()) != dim()) {
      throw ConfigError("multi-index rank does not match the grid");
    }
    Eigen::Index flat = 0;
    for (int k = 0; k < dim(); ++k) {
      int lk = multi[static_cast<std::size_t>(k)];
      int mk = shape_[static_cast<std::size_t>(k)];
      if (lk < 0 || lk >= mk) throw ConfigError("multi-index out of range");
      flat = flat * mk + lk;
    }
    return flat;
  }

  std::vector<int> multi_index(Eigen::Index flat) const {
    std::vector<int> multi(static_cast<std::size_t>(dim()));
    for (int k = dim() - 1; k >= 0; --k) {
      int mk = shape_[static_cast<std::size_t>(k)];
      multi[static_cast<std::size_t>(k)] = static_cast<int>(flat % mk);
      flat /= mk;
    }
    return multi;
  }

 private:
  static Eigen::Index compute_size(const std::vector<int>& shape) {
    if (shape.empty()) throw ConfigError("coefficient grid needs rank >= 1");
    Eigen::Index n = 1;
    for (int m : shape) {
      if (m < 1) throw ConfigError("grid shape entries must be positive");
      n *= m;
    }
    return n;
  }

  std::vector<int> shape_;
  Eigen::VectorXd values_;
};

// All tensorized knots of a subdivision as an (grid_size x dim) matrix of
// ACTIVE coordinates, rows in flat (row-major) order.
inline Eigen::MatrixXd grid_knots(const Subdivision& sub) {
  Eigen::MatrixXd knots(sub.grid_size(), sub.dim());
  std::vector<int> multi(static_cast<std::size_t>(sub.dim()), 0);
  for (Eigen::Index flat = 0; flat < knots.rows(); ++flat) {
    for (int k = 0; k < sub.dim(); ++k) {
      knots(flat, k) = sub.axis(k).knot(multi[static_cast<std::size_t>(k)]);
    }
    for (int k = sub.dim() - 1; k >= 0; --k) {
      auto uk = static_cast<std::size_t>(k);
      if (++multi[uk] < sub.axis(k).size()) break;
      multi[uk] = 0;
    }
  }
  return knots;
}

// Iterate all multi-indices of `shape` in flat (row-major) order, calling
// visit(multi, flat).
template <typename Visitor>
void for_each_multi_index(const std::vector<int>& shape, Visitor&& visit) {
  const int d = static_cast<int>(shape.size());
  std::vector<int> multi(static_cast<std::size_t>(d), 0);
  Eigen::Index total = 1;
  for (int m : shape) total *= m;
  for (Eigen::Index flat = 0; flat < total; ++flat) {
    visit(static_cast<const std::vector<int>&>(multi), flat);
    for (int k = d - 1; k >= 0; --k) {
      auto uk = static_cast<std::size_t>(k);
      if (++multi[uk] < shape[uk]) break;
      multi[uk] = 0;
    }
  }
}

}  // namespace hatgp
