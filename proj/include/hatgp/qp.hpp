#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "hatgp/errors.hpp"

namespace hatgp {

// Strictly convex quadratic program
//   minimize 0.5 x^T Q x + c^T x
//   subject to A x = b  and  M x <= v.
struct QpProblem {
  Eigen::MatrixXd q;  // symmetric positive definite
  Eigen::VectorXd c;
  Eigen::MatrixXd a_eq;    // (p x n)
  Eigen::VectorXd b_eq;    // (p)
  Eigen::MatrixXd m_ineq;  // (r x n)
  Eigen::VectorXd v_ineq;  // (r)
};

enum class QpStatus { Optimal, Infeasible, MaxIterations };

struct QpSolution {
  Eigen::VectorXd x;
  QpStatus status = QpStatus::Optimal;
  double objective = 0.0;
  Eigen::VectorXd eq_multipliers;    // lambda, sign-free
  Eigen::VectorXd ineq_multipliers;  // mu >= 0, aligned with rows of m_ineq
  std::vector<Eigen::Index> active_set;  // inequality rows active at the end
  double kkt_residual = 0.0;             // stationarity residual, inf norm
  int iterations = 0;
};

namespace detail {

// sqrt(a^2 + b^2) without intermediate overflow.
inline double hypot2(double a, double b) {
  const double a1 = std::abs(a), b1 = std::abs(b);
  if (a1 > b1) {
    const double t = b1 / a1;
    return a1 * std::sqrt(1.0 + t * t);
  }
  if (b1 > a1) {
    const double t = a1 / b1;
    return b1 * std::sqrt(1.0 + t * t);
  }
  return a1 * std::sqrt(2.0);
}

// Rotate the freshly computed d = J^T np so that its tail (below the new
// active-set slot) vanishes, carrying the rotations into J, then append the
// head of d as a new column of R.  Returns false when np is linearly
// dependent on the current working set.
inline bool qp_add_constraint(Eigen::MatrixXd& r, Eigen::MatrixXd& j, Eigen::VectorXd& d,
                              int& q, double& r_norm) {
  const int n = static_cast<int>(j.rows());
  // A working set of n constraints already spans the space; any further
  // normal is linearly dependent.
  if (q >= n) return false;
  for (int k = n - 1; k >= q + 1; --k) {
    double cc = d[k - 1];
    double ss = d[k];
    const double h = hypot2(cc, ss);
    if (h == 0.0) continue;
    d[k] = 0.0;
    ss /= h;
    cc /= h;
    if (cc < 0.0) {
      cc = -cc;
      ss = -ss;
      d[k - 1] = -h;
    } else {
      d[k - 1] = h;
    }
    const double xny = ss / (1.0 + cc);
    for (int row = 0; row < n; ++row) {
      const double t1 = j(row, k - 1);
      const double t2 = j(row, k);
      j(row, k - 1) = t1 * cc + t2 * ss;
      j(row, k) = xny * (t1 + j(row, k - 1)) - t2;
    }
  }
  ++q;
  r.col(q - 1).head(q) = d.head(q);
  if (std::abs(d[q - 1]) <= std::numeric_limits<double>::epsilon() * r_norm) {
    --q;  // keep the working set unchanged on failure
    r.col(q).head(q + 1).setZero();
    return false;
  }
  r_norm = std::max(r_norm, std::abs(d[q - 1]));
  return true;
}

// Remove active constraint with identifier `l` (an inequality row index) and
// restore the triangularity of R with Givens rotations mirrored into J.
inline void qp_delete_constraint(Eigen::MatrixXd& r, Eigen::MatrixXd& j,
                                 Eigen::VectorXi& a, Eigen::VectorXd& u, int p, int& q,
                                 Eigen::Index l) {
  const int n = static_cast<int>(j.rows());
  int slot = -1;
  for (int i = p; i < q; ++i) {
    if (a[i] == l) {
      slot = i;
      break;
    }
  }
  if (slot < 0) throw NumericalError("QP internal error: dropping an inactive constraint");

  for (int i = slot; i < q - 1; ++i) {
    a[i] = a[i + 1];
    u[i] = u[i + 1];
    r.col(i) = r.col(i + 1);
  }
  a[q - 1] = a[q];
  u[q - 1] = u[q];
  a[q] = 0;
  u[q] = 0.0;
  for (int row = 0; row < q; ++row) r(row, q - 1) = 0.0;
  --q;
  if (q == 0) return;

  for (int k = slot; k < q; ++k) {
    double cc = r(k, k);
    double ss = r(k + 1, k);
    const double h = hypot2(cc, ss);
    if (h == 0.0) continue;
    cc /= h;
    ss /= h;
    r(k + 1, k) = 0.0;
    if (cc < 0.0) {
      r(k, k) = -h;
      cc = -cc;
      ss = -ss;
    } else {
      r(k, k) = h;
    }
    const double xny = ss / (1.0 + cc);
    for (int col = k + 1; col < q; ++col) {
      const double t1 = r(k, col);
      const double t2 = r(k + 1, col);
      r(k, col) = t1 * cc + t2 * ss;
      r(k + 1, col) = xny * (t1 + r(k, col)) - t2;
    }
    for (int row = 0; row < n; ++row) {
      const double t1 = j(row, k);
      const double t2 = j(row, k + 1);
      j(row, k) = t1 * cc + t2 * ss;
      j(row, k + 1) = xny * (j(row, k) + t1) - t2;
    }
  }
}

}  // namespace detail

// Dual active-set method of Goldfarb and Idnani.  Starts from the
// unconstrained minimizer (dual feasible by construction), repeatedly adds
// the most violated inequality and drops blocking ones until primal
// feasibility.  Equality constraints are installed first and never dropped.
//
// Tie-breaking is deterministic: among equally violated rows and among
// equally blocking active rows, the smallest row index wins.
inline QpSolution solve_qp(const QpProblem& prob, double tol = 1e-10, int max_iter = 0) {
  const Eigen::Index n = prob.q.rows();
  const Eigen::Index p = prob.a_eq.rows();
  const Eigen::Index m = prob.m_ineq.rows();
  if (prob.q.cols() != n || prob.c.size() != n) {
    throw ConfigError("QP quadratic term and linear term sizes disagree");
  }
  if ((p > 0 && prob.a_eq.cols() != n) || prob.b_eq.size() != p) {
    throw ConfigError("QP equality block sizes disagree");
  }
  if ((m > 0 && prob.m_ineq.cols() != n) || prob.v_ineq.size() != m) {
    throw ConfigError("QP inequality block sizes disagree");
  }
  if (max_iter <= 0) max_iter = 50 * static_cast<int>(n + p + m) + 100;

  QpSolution sol;
  sol.eq_multipliers = Eigen::VectorXd::Zero(p);
  sol.ineq_multipliers = Eigen::VectorXd::Zero(m);

  Eigen::LLT<Eigen::MatrixXd> chol(prob.q);
  if (chol.info() != Eigen::Success) {
    throw NumericalError("QP quadratic term is not positive definite");
  }
  const double c1 = prob.q.trace();
  Eigen::MatrixXd j = chol.matrixU().solve(Eigen::MatrixXd::Identity(n, n));
  const double c2 = j.trace();

  Eigen::VectorXd x = -chol.solve(prob.c);
  double f_value = 0.5 * prob.c.dot(x);

  Eigen::MatrixXd r_mat = Eigen::MatrixXd::Zero(n, n);
  double r_norm = 1.0;
  Eigen::VectorXd d = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd z(n), s(m > 0 ? m : 1);
  Eigen::VectorXd r_vec = Eigen::VectorXd::Zero(n + 1);
  Eigen::VectorXd u = Eigen::VectorXd::Zero(p + m + 1);
  Eigen::VectorXi a = Eigen::VectorXi::Zero(p + m + 1);
  int q = 0;

  auto compute_steps = [&](const Eigen::VectorXd& np) {
    d = j.transpose() * np;
    z = j.rightCols(n - q) * d.tail(n - q);
    if (q > 0) {
      r_vec.head(q) = r_mat.topLeftCorner(q, q)
                          .triangularView<Eigen::Upper>()
                          .solve(d.head(q));
    }
  };

  // Install the equality constraints.  Linearly dependent rows are accepted
  // when consistent with the current iterate and reported infeasible
  // otherwise.
  const double eq_tol = std::max(tol, 100.0 * std::numeric_limits<double>::epsilon() *
                                          std::max(1.0, std::abs(c1 * c2)));
  for (Eigen::Index i = 0; i < p; ++i) {
    const Eigen::VectorXd np = prob.a_eq.row(i).transpose();
    compute_steps(np);
    double t2 = 0.0;
    const bool have_direction = z.dot(z) > std::numeric_limits<double>::epsilon();
    if (have_direction) t2 = (prob.b_eq[i] - np.dot(x)) / z.dot(np);
    x += t2 * z;
    u.head(q) -= t2 * r_vec.head(q);
    u[q] = t2;
    f_value += 0.5 * t2 * t2 * z.dot(np);
    a[q] = -static_cast<int>(i) - 1;
    if (!detail::qp_add_constraint(r_mat, j, d, q, r_norm)) {
      if (std::abs(np.dot(x) - prob.b_eq[i]) > eq_tol) {
        sol.x = x;
        sol.status = QpStatus::Infeasible;
        sol.objective = std::numeric_limits<double>::infinity();
        return sol;
      }
      // consistent duplicate: drop its (zero-step) multiplier slot
      u[q] = 0.0;
    }
  }
  const int n_eq_active = q;

  std::vector<bool> excluded(static_cast<std::size_t>(m), false);
  Eigen::VectorXd x_old = x;
  Eigen::VectorXd u_old = u;
  Eigen::VectorXi a_old = a;
  int q_old = q;

  const double feas_tol =
      std::max(tol, 100.0 * static_cast<double>(m) *
                        std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(c1 * c2)));

  auto in_active_set = [&](Eigen::Index row) {
    for (int k = n_eq_active; k < q; ++k) {
      if (a[k] == row) return true;
    }
    return false;
  };

  int iter = 0;
  bool keep_exclusions = false;
  while (true) {
    if (++iter > max_iter) {
      sol.status = QpStatus::MaxIterations;
      break;
    }

    // Step 1: slacks of all inequalities; exclusions from degenerate adds
    // survive until the next successful step.
    double psi = 0.0;
    for (Eigen::Index i = 0; i < m; ++i) {
      s[i] = prob.v_ineq[i] - prob.m_ineq.row(i).dot(x);
      psi += std::min(0.0, s[i]);
      if (!keep_exclusions) excluded[static_cast<std::size_t>(i)] = false;
    }
    keep_exclusions = false;
    if (m == 0 || std::abs(psi) <= feas_tol) {
      sol.status = QpStatus::Optimal;
      break;
    }
    x_old = x;
    u_old = u;
    a_old = a;
    q_old = q;

    // Most violated row not active and not excluded; ascending scan keeps
    // the smallest row index on ties.
    Eigen::Index ip = -1;
    {
      double worst = 0.0;
      for (Eigen::Index i = 0; i < m; ++i) {
        if (s[i] < worst && !in_active_set(i) && !excluded[static_cast<std::size_t>(i)]) {
          worst = s[i];
          ip = i;
        }
      }
    }
    if (ip < 0) {
      // Violations remain but every violated row is excluded or active:
      // degenerate stall.
      sol.status = QpStatus::MaxIterations;
      break;
    }
    Eigen::VectorXd np = -prob.m_ineq.row(ip).transpose();
    u[q] = 0.0;
    a[q] = static_cast<int>(ip);

    bool resolved = false;
    while (!resolved) {
      if (++iter > max_iter) {
        sol.status = QpStatus::MaxIterations;
        break;
      }
      compute_steps(np);

      // Partial step bound t1: first active inequality whose multiplier
      // would cross zero (smallest row index on ties).
      double t1 = std::numeric_limits<double>::infinity();
      Eigen::Index drop = -1;
      for (int k = n_eq_active; k < q; ++k) {
        if (r_vec[k] > 0.0) {
          const double step = u[k] / r_vec[k];
          if (step < t1 || (step == t1 && drop >= 0 && a[k] < drop)) {
            t1 = step;
            drop = a[k];
          }
        }
      }
      // Full step bound t2: distance to feasibility of row ip along z.
      double t2 = std::numeric_limits<double>::infinity();
      const bool have_direction = z.dot(z) > std::numeric_limits<double>::epsilon();
      if (have_direction) t2 = -s[ip] / z.dot(np);

      const double t = std::min(t1, t2);
      if (!std::isfinite(t)) {
        sol.x = x;
        sol.status = QpStatus::Infeasible;
        sol.objective = std::numeric_limits<double>::infinity();
        sol.iterations = iter;
        return sol;
      }

      if (!std::isfinite(t2)) {
        // Dual-only step: drop the blocking constraint and retry.
        u.head(q) -= t * r_vec.head(q);
        u[q] += t;
        detail::qp_delete_constraint(r_mat, j, a, u, n_eq_active, q, drop);
        continue;
      }

      x += t * z;
      f_value += t * z.dot(np) * (0.5 * t + u[q]);
      u.head(q) -= t * r_vec.head(q);
      u[q] += t;

      if (std::abs(t - t2) < std::numeric_limits<double>::epsilon()) {
        // Full step: row ip becomes active.
        if (!detail::qp_add_constraint(r_mat, j, d, q, r_norm)) {
          // Degenerate geometry: exclude ip, restore the step-1 state and
          // rebuild the factorization for the restored working set.
          excluded[static_cast<std::size_t>(ip)] = true;
          keep_exclusions = true;
          x = x_old;
          u = u_old;
          a = a_old;
          r_mat.setZero();
          r_norm = 1.0;
          j = chol.matrixU().solve(Eigen::MatrixXd::Identity(n, n));
          q = 0;
          for (int k = 0; k < q_old; ++k) {
            const int id = a[k];
            const Eigen::VectorXd nk = (id < 0)
                ? Eigen::VectorXd(prob.a_eq.row(-id - 1).transpose())
                : Eigen::VectorXd(-prob.m_ineq.row(id).transpose());
            d = j.transpose() * nk;
            if (!detail::qp_add_constraint(r_mat, j, d, q, r_norm)) {
              throw NumericalError("QP working set rebuild failed");
            }
          }
          resolved = true;  // re-pick with ip excluded
          continue;
        }
        resolved = true;
        continue;
      }
      // Partial step: drop the blocking constraint, refresh the slack of ip.
      detail::qp_delete_constraint(r_mat, j, a, u, n_eq_active, q, drop);
      s[ip] = prob.v_ineq[ip] - prob.m_ineq.row(ip).dot(x);
    }
    if (sol.status == QpStatus::MaxIterations) break;
  }

  sol.x = x;
  sol.iterations = iter;
  sol.objective = 0.5 * x.dot(prob.q * x) + prob.c.dot(x);
  for (int k = 0; k < q; ++k) {
    if (a[k] < 0) {
      sol.eq_multipliers[-a[k] - 1] = -u[k];
    } else {
      sol.ineq_multipliers[a[k]] = u[k];
      sol.active_set.push_back(a[k]);
    }
  }
  std::sort(sol.active_set.begin(), sol.active_set.end());

  // Stationarity residual of the KKT system
  //   Q x + c + A^T lambda + M^T mu = 0.
  Eigen::VectorXd grad = prob.q * x + prob.c;
  if (p > 0) grad += prob.a_eq.transpose() * sol.eq_multipliers;
  if (m > 0) grad += prob.m_ineq.transpose() * sol.ineq_multipliers;
  sol.kkt_residual = grad.lpNorm<Eigen::Infinity>();
  return sol;
}

}  // namespace hatgp
