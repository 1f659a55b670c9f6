#pragma once

#include <cmath>
#include <utility>

#include <Eigen/Core>

#include "hatgp/constraints.hpp"
#include "hatgp/errors.hpp"
#include "hatgp/kernel.hpp"
#include "hatgp/qp.hpp"

namespace hatgp {

// Constrained mode of the finite-dimensional Gaussian model.  Both solvers
// work in whitened coordinates z = L^{-1} alpha with K + jitter = L L^T, so
// the Gaussian energy alpha^T K^{-1} alpha becomes ||z||^2 and the quadratic
// term of the QP is perfectly conditioned; K is never inverted explicitly.
struct ModeResult {
  CoefficientGrid alpha;
  double objective = 0.0;  // alpha^T K^{-1} alpha (+ noise penalty in noisy form)
  QpSolution qp;           // solution in whitened coordinates
};

namespace detail {

// Inequality rows mapped to whitened coordinates: (M L) z <= v.
inline Eigen::MatrixXd whiten_rows(const InequalitySystem& sys,
                                   const Eigen::MatrixXd& chol_lower) {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(sys.row_count(), chol_lower.cols());
  for (Eigen::Index r = 0; r < sys.row_count(); ++r) {
    for (const auto& [col, w] : sys.rows[static_cast<std::size_t>(r)]) {
      out.row(r) += w * chol_lower.row(col);
    }
  }
  return out;
}

inline ModeResult finish_mode(const Subdivision& sub, const KnotCovariance& cov,
                              QpSolution&& qp, double objective_shift) {
  if (qp.status == QpStatus::Infeasible) {
    throw InfeasibleError("constraint system admits no coefficient vector");
  }
  if (qp.status == QpStatus::MaxIterations) {
    throw NumericalError("mode QP hit the iteration cap before converging");
  }
  ModeResult result;
  result.alpha = CoefficientGrid(sub.shape(), cov.chol_lower * qp.x);
  result.objective = qp.objective + objective_shift;
  result.qp = std::move(qp);
  return result;
}

}  // namespace detail

// Mode with exact interpolation: minimize alpha^T K^{-1} alpha subject to
// Phi alpha = y and the inequality rows.  In whitened coordinates this is
// min ||z||^2 (halved inside the QP) with equalities (Phi L) z = y.
inline ModeResult compute_map(const Subdivision& sub, const KnotCovariance& cov,
                              const InequalitySystem& ineq, const Eigen::MatrixXd& phi,
                              const Eigen::VectorXd& y, double tol = 1e-10,
                              int max_iter = 0) {
  const Eigen::Index n_grid = cov.chol_lower.rows();
  if (ineq.row_count() > 0 && ineq.cols != n_grid) {
    throw ConfigError("inequality system does not match the grid");
  }
  if (phi.rows() != y.size() || (phi.rows() > 0 && phi.cols() != n_grid)) {
    throw ConfigError("interpolation system does not match the data and grid");
  }
  QpProblem prob;
  prob.q = Eigen::MatrixXd::Identity(n_grid, n_grid);
  prob.c = Eigen::VectorXd::Zero(n_grid);
  prob.a_eq = phi * cov.chol_lower;
  prob.b_eq = y;
  prob.m_ineq = detail::whiten_rows(ineq, cov.chol_lower);
  prob.v_ineq = ineq.bounds;

  QpSolution qp = solve_qp(prob, tol, max_iter);
  qp.objective *= 2.0;  // 0.5 ||z||^2 -> ||z||^2 = alpha^T K^{-1} alpha
  return detail::finish_mode(sub, cov, std::move(qp), 0.0);
}

// Mode with a Gaussian data-misfit penalty instead of exact interpolation:
// minimize alpha^T K^{-1} alpha + ||Phi alpha - y||^2 / noise_variance
// subject to the inequality rows only.
inline ModeResult compute_noisy_map(const Subdivision& sub, const KnotCovariance& cov,
                                    const InequalitySystem& ineq, const Eigen::MatrixXd& phi,
                                    const Eigen::VectorXd& y, double noise_variance,
                                    double tol = 1e-10, int max_iter = 0) {
  if (!(noise_variance > 0.0)) {
    throw ConfigError("the noisy mode needs a positive noise variance");
  }
  const Eigen::Index n_grid = cov.chol_lower.rows();
  if (ineq.row_count() > 0 && ineq.cols != n_grid) {
    throw ConfigError("inequality system does not match the grid");
  }
  if (phi.rows() != y.size() || phi.cols() != n_grid) {
    throw ConfigError("interpolation system does not match the data and grid");
  }
  const double w = 1.0 / noise_variance;
  const Eigen::MatrixXd b = phi * cov.chol_lower;

  QpProblem prob;
  prob.q = 2.0 * (Eigen::MatrixXd::Identity(n_grid, n_grid) + w * b.transpose() * b);
  prob.c = -2.0 * w * b.transpose() * y;
  prob.m_ineq = detail::whiten_rows(ineq, cov.chol_lower);
  prob.v_ineq = ineq.bounds;

  QpSolution qp = solve_qp(prob, tol, max_iter);
  // QP objective is the target functional minus the constant ||y||^2 / tau^2.
  return detail::finish_mode(sub, cov, std::move(qp), w * y.squaredNorm());
}

}  // namespace hatgp
