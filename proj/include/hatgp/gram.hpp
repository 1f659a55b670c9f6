#pragma once

#include <vector>

#include <Eigen/Core>

#include "hatgp/basis.hpp"
#include "hatgp/errors.hpp"
#include "hatgp/grid.hpp"

namespace hatgp {

// L2 Gram matrix of the 1-D hat basis on a subdivision.  Hat functions
// overlap only with their neighbours, so the matrix is tridiagonal and is
// stored as its diagonal and first off-diagonal.
struct TridiagonalGram {
  Eigen::VectorXd diag;  // size m
  Eigen::VectorXd off;   // size m - 1

  Eigen::MatrixXd dense() const {
    const Eigen::Index m = diag.size();
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(m, m);
    out.diagonal() = diag;
    if (m > 1) {
      out.diagonal(1) = off;
      out.diagonal(-1) = off;
    }
    return out;
  }
};

// Entries follow from the piecewise-linear overlap integrals:
//   <phi_l, phi_l>   = (t_{l+1} - t_{l-1}) / 3   (boundary: one-sided gap / 3)
//   <phi_l, phi_l+1> = (t_{l+1} - t_l) / 6.
inline TridiagonalGram gram_1d(const Subdivision1D& axis) {
  const int m = static_cast<int>(axis.size());
  TridiagonalGram g;
  g.diag.resize(m);
  g.off.resize(m - 1);
  for (int l = 0; l < m; ++l) {
    const double left = (l > 0) ? axis.knot(l) - axis.knot(l - 1) : 0.0;
    const double right = (l < m - 1) ? axis.knot(l + 1) - axis.knot(l) : 0.0;
    g.diag[l] = (left + right) / 3.0;
    if (l < m - 1) g.off[l] = right / 6.0;
  }
  return g;
}

namespace detail {

// Apply one axis factor of the tensorized Gram operator in place of a
// separate matrix build.  The coefficient layout is row major with the last
// axis fastest, so axis k decomposes the flat index as
// (outer * m + l) * stride + inner.
inline void apply_axis_gram(const TridiagonalGram& g, Eigen::Index m, Eigen::Index stride,
                            Eigen::Index outer_count, const Eigen::VectorXd& in,
                            Eigen::VectorXd& out) {
  for (Eigen::Index o = 0; o < outer_count; ++o) {
    const Eigen::Index base = o * m * stride;
    for (Eigen::Index l = 0; l < m; ++l) {
      const Eigen::Index row = base + l * stride;
      for (Eigen::Index i = 0; i < stride; ++i) {
        double v = g.diag[l] * in[row + i];
        if (l > 0) v += g.off[l - 1] * in[row - stride + i];
        if (l + 1 < m) v += g.off[l] * in[row + stride + i];
        out[row + i] = v;
      }
    }
  }
}

}  // namespace detail

// Tensorized Gram operator Psi = Psi_1 (x) ... (x) Psi_d for a subdivision.
// Precomputes the per-axis tridiagonal factors once; applications cost
// O(d * grid size) and never materialize the dense Kronecker product.
class GramOperator {
 public:
  explicit GramOperator(const Subdivision& sub) : shape_(sub.shape()) {
    axes_.reserve(static_cast<std::size_t>(sub.dim()));
    for (int k = 0; k < sub.dim(); ++k) axes_.push_back(gram_1d(sub.axis(k)));
  }

  const std::vector<int>& shape() const { return shape_; }

  // Psi applied to a coefficient vector in grid layout.
  Eigen::VectorXd apply(const Eigen::VectorXd& values) const {
    Eigen::Index size = 1;
    for (int m : shape_) size *= m;
    if (values.size() != size) throw ConfigError("Gram operator applied to wrong-sized grid");
    Eigen::VectorXd cur = values;
    Eigen::VectorXd next(values.size());
    Eigen::Index stride = size;
    Eigen::Index outer = 1;
    for (std::size_t k = 0; k < axes_.size(); ++k) {
      const Eigen::Index m = shape_[k];
      stride /= m;
      detail::apply_axis_gram(axes_[k], m, stride, outer, cur, next);
      cur.swap(next);
      outer *= m;
    }
    return cur;
  }

  // beta^T Psi beta, the squared L2 norm of the spline with coefficients
  // beta.  Always >= 0 because each factor is a 1-D Gram matrix.
  double quadratic_form(const Eigen::VectorXd& values) const {
    return values.dot(apply(values));
  }

  double inner(const Eigen::VectorXd& a, const Eigen::VectorXd& b) const {
    return a.dot(apply(b));
  }

 private:
  std::vector<int> shape_;
  std::vector<TridiagonalGram> axes_;
};

// Squared L2 distance between two splines on the same subdivision.
inline double squared_l2_distance(const Subdivision& sub, const Eigen::VectorXd& a,
                                  const Eigen::VectorXd& b) {
  return GramOperator(sub).quadratic_form(a - b);
}

}  // namespace hatgp
