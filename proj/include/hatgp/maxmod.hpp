#pragma once

#include <chrono>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "hatgp/basis.hpp"
#include "hatgp/constraints.hpp"
#include "hatgp/errors.hpp"
#include "hatgp/gram.hpp"
#include "hatgp/grid.hpp"
#include "hatgp/hyperfit.hpp"
#include "hatgp/kernel.hpp"
#include "hatgp/mode.hpp"

namespace hatgp {

// When to re-estimate kernel/noise hyperparameters during the sequential
// refinement loop.  PerCandidate maximizes fidelity (one fit per candidate
// variable per iteration); PerAcceptedMove fits only after a move is applied
// and is much cheaper in high dimension.
enum class HyperRefit { PerCandidate, PerAcceptedMove };

struct KnotSearchOptions {
  int grid_points_per_interval = 8;
  double refinement_tol = 1e-4;  // golden-section bracket width target
};

struct MaxModConfig {
  double delta = 1e-9;        // reward scale for knot moves
  double delta_prime = 1e-9;  // flat reward for activating a variable
  double tolerance = 1e-5;    // stop when best criterion + reward falls below
  double min_separation = 1e-9;
  int max_iterations = 30;  // accepted moves after initialization
  KnotSearchOptions knot_search;
  HyperRefit refit = HyperRefit::PerCandidate;
  bool use_exact_mode = false;  // interpolate exactly instead of the noisy fit
  HyperFitOptions hyper;
  std::uint64_t seed = 0;

  void validate() const {
    if (delta < 0.0 || delta_prime < 0.0) throw ConfigError("rewards must be non-negative");
    if (!(tolerance > 0.0)) throw ConfigError("tolerance must be positive");
    if (!(min_separation > 0.0)) throw ConfigError("min_separation must be positive");
    if (max_iterations < 1) throw ConfigError("max_iterations must be at least 1");
    if (knot_search.grid_points_per_interval < 1) {
      throw ConfigError("knot search needs at least one grid point per interval");
    }
    if (!(knot_search.refinement_tol > 0.0)) {
      throw ConfigError("knot refinement tolerance must be positive");
    }
    // Non-coverage guard: even if every accepted move inserts a knot into the
    // same variable, the widest gap stays above 2 * min_separation, so an
    // admissible position always exists.
    if (2.0 * min_separation * (max_iterations + 2) >= 1.0) {
      throw ConfigError("min_separation too large: no admissible knot after max_iterations");
    }
  }
};

struct MoveRecord {
  enum class Kind { Activate, InsertKnot };
  int iteration = 0;
  Kind kind = Kind::Activate;
  int variable = 0;
  double knot = std::numeric_limits<double>::quiet_NaN();  // InsertKnot only
  double criterion = 0.0;
  double reward = 0.0;
  Eigen::Index grid_size = 0;
  // Hyperparameters in effect after the move, plus the move's wall time.
  double variance = 0.0;
  Eigen::VectorXd lengthscales;
  double noise_variance = 0.0;
  double seconds = 0.0;
};

struct MaxModState {
  Subdivision sub{1, {0}, {Subdivision1D({0.0, 1.0})}};
  CoefficientGrid mode{std::vector<int>{2}};
  KernelModel model;
  QpSolution qp;  // solver diagnostics of the current mode
  std::vector<MoveRecord> history;
  std::vector<std::string> warnings;
  bool converged = false;  // best score fell below tolerance
};

namespace detail {

// Deterministic per-candidate seed so results do not depend on the order in
// which candidates are evaluated.
inline std::uint64_t mix_seed(std::uint64_t seed, int iteration, int variable) {
  std::uint64_t h = seed + 0x9e3779b97f4a7c15ULL * (static_cast<std::uint64_t>(iteration) + 1);
  h ^= 0xbf58476d1ce4e5b9ULL * (static_cast<std::uint64_t>(variable) + 1);
  h ^= h >> 31;
  return h;
}

// Number of basis functions a move adds: the product of the other active
// axis sizes for a knot insertion (empty product = 1), the whole grid size
// for a variable activation.
inline Eigen::Index basis_growth(const Subdivision& sub, int variable, bool activation) {
  Eigen::Index n = 1;
  for (int k = 0; k < sub.dim(); ++k) {
    if (!activation && sub.active()[static_cast<std::size_t>(k)] == variable) continue;
    n *= static_cast<Eigen::Index>(sub.axis(k).size());
  }
  return n;
}

}  // namespace detail

// Normalized squared L2 distance between the current mode and the candidate
// mode, both expressed on the candidate subdivision.
inline double maxmod_criterion(const Subdivision& refined_sub, const Eigen::VectorXd& refined_old,
                               const Eigen::VectorXd& candidate, Eigen::Index basis_growth) {
  return GramOperator(refined_sub).quadratic_form(candidate - refined_old) /
         static_cast<double>(basis_growth);
}

// Reward: distance to the nearest existing knot for insertions (scaled by
// delta), a flat delta_prime for activations.
inline double knot_reward(const MaxModConfig& cfg, const Subdivision1D& axis, double t) {
  return cfg.delta * axis.separation(t);
}

namespace detail {

struct Candidate {
  bool valid = false;
  bool activation = false;
  int variable = -1;
  double knot = std::numeric_limits<double>::quiet_NaN();
  double criterion = -std::numeric_limits<double>::infinity();
  double reward = 0.0;
  Subdivision sub{1, {0}, {Subdivision1D({0.0, 1.0})}};
  CoefficientGrid mode{std::vector<int>{2}};
  QpSolution qp;
  KernelModel model;

  double score() const { return criterion + reward; }
};

// Everything fixed across one run: data, constraint declarations, config.
struct RunContext {
  const Eigen::MatrixXd& x;
  const Eigen::VectorXd& y;
  const ConstraintSet& constraints;
  const MaxModConfig& cfg;
};

inline ModeResult candidate_mode(const RunContext& ctx, const Subdivision& sub,
                                 const KernelModel& model) {
  const Eigen::MatrixXd phi = build_interpolation(sub, ctx.x);
  const InequalitySystem ineq = build_inequality(ctx.constraints, sub);
  const KnotCovariance cov = knot_covariance(model, sub);
  if (ctx.cfg.use_exact_mode) return compute_map(sub, cov, ineq, phi, ctx.y);
  return compute_noisy_map(sub, cov, ineq, phi, ctx.y, model.noise_variance);
}

inline KernelModel refit_model(const RunContext& ctx, const Subdivision& sub,
                               const KernelModel& warm, std::uint64_t seed) {
  const Eigen::MatrixXd phi = build_interpolation(sub, ctx.x);
  return fit_hyperparameters(warm, sub, phi, ctx.y, ctx.cfg.hyper, seed);
}

// Admissible knot positions in axis interval [a, b]: at least min_separation
// away from both ends.
struct Interval {
  double lo, hi;
  bool admissible(double b) const { return hi - lo > 2.0 * b; }
};

// Best knot insertion for an active variable under a fixed kernel model:
// coarse scan (grid_points_per_interval per inter-knot interval) followed by
// golden-section refinement around the best coarse position.
inline std::optional<Candidate> optimize_knot(const RunContext& ctx, const Subdivision& sub,
                                              const CoefficientGrid& current_mode,
                                              const KernelModel& model, int variable,
                                              std::vector<std::string>& warnings) {
  const Subdivision1D& axis = sub.axis_of(variable);
  const double b = ctx.cfg.min_separation;
  const Eigen::Index growth = basis_growth(sub, variable, /*activation=*/false);

  Candidate best;
  best.variable = variable;
  best.model = model;
  bool warned = false;
  auto evaluate = [&](double t) -> double {
    RefinedModel refined = insert_knot(sub, current_mode, variable, t, b);
    ModeResult mode;
    try {
      mode = candidate_mode(ctx, refined.sub, model);
    } catch (const InfeasibleError&) {
      if (!warned) {
        warnings.push_back("knot candidates for variable " + std::to_string(variable + 1) +
                           " hit an infeasible fit; skipping those positions");
        warned = true;
      }
      return -std::numeric_limits<double>::infinity();
    } catch (const NumericalError& e) {
      if (!warned) {
        warnings.push_back("knot candidates for variable " + std::to_string(variable + 1) +
                           " failed numerically (" + e.what() + "); skipping those positions");
        warned = true;
      }
      return -std::numeric_limits<double>::infinity();
    }
    const double criterion =
        maxmod_criterion(refined.sub, refined.coeffs.values(), mode.alpha.values(), growth);
    const double reward = knot_reward(ctx.cfg, axis, t);
    const double score = criterion + reward;
    if (score > best.score()) {
      best.valid = true;
      best.knot = t;
      best.criterion = criterion;
      best.reward = reward;
      best.sub = refined.sub;
      best.mode = mode.alpha;
      best.qp = mode.qp;
    }
    return score;
  };

  // Coarse pass.
  const int points = ctx.cfg.knot_search.grid_points_per_interval;
  double best_lo = 0.0, best_hi = 0.0, spacing = 0.0;
  bool any_admissible = false;
  for (std::size_t l = 0; l + 1 < axis.size(); ++l) {
    Interval iv{axis.knot(l), axis.knot(l + 1)};
    if (!iv.admissible(b)) continue;
    any_admissible = true;
    const double step = (iv.hi - iv.lo) / (points + 1);
    for (int k = 1; k <= points; ++k) {
      const double t = iv.lo + k * step;
      if (t - iv.lo < b || iv.hi - t < b) continue;
      const double score = evaluate(t);
      if (best.valid && t == best.knot && score == best.score()) {
        best_lo = std::max(iv.lo + b, t - step);
        best_hi = std::min(iv.hi - b, t + step);
        spacing = step;
      }
    }
  }
  if (!any_admissible || !best.valid) return std::nullopt;

  // Golden-section refinement of criterion + reward around the coarse best.
  if (spacing > ctx.cfg.knot_search.refinement_tol) {
    const double ratio = (std::sqrt(5.0) - 1.0) / 2.0;
    double lo = best_lo, hi = best_hi;
    double x1 = hi - ratio * (hi - lo);
    double x2 = lo + ratio * (hi - lo);
    double f1 = evaluate(x1);
    double f2 = evaluate(x2);
    while (hi - lo > ctx.cfg.knot_search.refinement_tol) {
      if (f1 < f2) {
        lo = x1;
        x1 = x2;
        f1 = f2;
        x2 = lo + ratio * (hi - lo);
        f2 = evaluate(x2);
      } else {
        hi = x2;
        x2 = x1;
        f2 = f1;
        x1 = hi - ratio * (hi - lo);
        f1 = evaluate(x1);
      }
    }
  }
  return best;
}

// Candidate that activates an inactive variable with the minimal {0, 1} axis.
inline std::optional<Candidate> activation_candidate(const RunContext& ctx,
                                                     const Subdivision& sub,
                                                     const CoefficientGrid& current_mode,
                                                     const KernelModel& model, int variable,
                                                     std::vector<std::string>& warnings) {
  RefinedModel refined = add_variable(sub, current_mode, variable);
  Candidate cand;
  cand.activation = true;
  cand.variable = variable;
  cand.model = model;
  try {
    ModeResult mode = candidate_mode(ctx, refined.sub, model);
    cand.valid = true;
    cand.criterion = maxmod_criterion(refined.sub, refined.coeffs.values(), mode.alpha.values(),
                                      basis_growth(sub, variable, /*activation=*/true));
    cand.reward = ctx.cfg.delta_prime;
    cand.sub = refined.sub;
    cand.mode = mode.alpha;
    cand.qp = mode.qp;
  } catch (const InfeasibleError&) {
    warnings.push_back("activating variable " + std::to_string(variable + 1) +
                       " gave an infeasible fit; candidate skipped");
    return std::nullopt;
  } catch (const NumericalError& e) {
    warnings.push_back("activating variable " + std::to_string(variable + 1) +
                       " failed numerically (" + std::string(e.what()) + "); candidate skipped");
    return std::nullopt;
  }
  return cand;
}

// Probe subdivision used for the per-candidate hyperparameter refit: the
// candidate's own subdivision for activations, the current grid plus a knot
// at the midpoint of the widest admissible gap for insertions (the scan then
// holds the refitted model fixed while the position is optimized).
inline std::optional<Subdivision> refit_probe(const Subdivision& sub, int variable,
                                              bool activation, double min_separation) {
  if (activation) return sub.with_variable(variable);
  const Subdivision1D& axis = sub.axis_of(variable);
  double widest = 0.0, mid = -1.0;
  for (std::size_t l = 0; l + 1 < axis.size(); ++l) {
    const double gap = axis.knot(l + 1) - axis.knot(l);
    if (gap > widest) {
      widest = gap;
      mid = 0.5 * (axis.knot(l) + axis.knot(l + 1));
    }
  }
  if (widest <= 2.0 * min_separation) return std::nullopt;
  return sub.with_inserted_knot(variable, mid, min_separation);
}

}  // namespace detail

// Sequential refinement driver.  Starts from the single variable whose
// two-knot mode has the largest L2 norm, then repeatedly applies the best
// move (knot insertion into an active variable, or activation of a new one)
// until the best criterion + reward falls below the tolerance.
inline MaxModState run_maxmod(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                              const ConstraintSet& constraints, const MaxModConfig& cfg,
                              const KernelModel& seed_model) {
  cfg.validate();
  const int ambient = static_cast<int>(x.cols());
  if (ambient < 1) throw DataError("need at least one input column");
  if (y.size() != x.rows() || y.size() < 1) throw DataError("inputs and outputs disagree in size");
  seed_model.validate(ambient);

  MaxModState state;
  detail::RunContext ctx{x, y, constraints, cfg};
  using clock = std::chrono::steady_clock;
  const auto move_start = clock::now();

  // Initialization: fit each variable alone on the minimal {0, 1} axis and
  // keep the one whose mode has the largest L2 norm (ties break toward the
  // smallest variable index via the strict comparison).
  {
    double best_norm = -1.0;
    int best_var = -1;
    KernelModel best_model;
    CoefficientGrid best_mode{std::vector<int>{2}};
    QpSolution best_qp;
    std::string first_error;
    for (int j = 0; j < ambient; ++j) {
      Subdivision sub = Subdivision::initial(ambient, j);
      try {
        KernelModel model =
            detail::refit_model(ctx, sub, seed_model, detail::mix_seed(cfg.seed, 0, j));
        ModeResult mode = detail::candidate_mode(ctx, sub, model);
        const double norm = GramOperator(sub).quadratic_form(mode.alpha.values());
        if (norm > best_norm) {
          best_norm = norm;
          best_var = j;
          best_model = model;
          best_mode = mode.alpha;
          best_qp = mode.qp;
        }
      } catch (const Error& e) {
        if (first_error.empty()) first_error = e.what();
        state.warnings.push_back("initial fit for variable " + std::to_string(j + 1) +
                                 " failed: " + e.what());
      }
    }
    if (best_var < 0) {
      throw InfeasibleError(
          "every single-variable starting fit failed (" + first_error +
          "); review the constraints or switch to the noisy mode");
    }
    state.sub = Subdivision::initial(ambient, best_var);
    state.mode = best_mode;
    state.model = best_model;
    state.qp = best_qp;
    MoveRecord rec;
    rec.iteration = 0;
    rec.kind = MoveRecord::Kind::Activate;
    rec.variable = best_var;
    rec.criterion = best_norm;
    rec.reward = 0.0;
    rec.grid_size = state.sub.grid_size();
    rec.variance = best_model.variance;
    rec.lengthscales = best_model.lengthscales;
    rec.noise_variance = best_model.noise_variance;
    rec.seconds = std::chrono::duration<double>(clock::now() - move_start).count();
    state.history.push_back(rec);
  }

  for (int iter = 1; iter <= cfg.max_iterations; ++iter) {
    const auto iter_start = clock::now();
    detail::Candidate winner;
    for (int j = 0; j < ambient; ++j) {
      const bool active = state.sub.is_active(j);
      KernelModel model = state.model;
      bool refitted = false;
      if (cfg.refit == HyperRefit::PerCandidate) {
        auto probe = detail::refit_probe(state.sub, j, !active, cfg.min_separation);
        if (!probe) continue;  // no admissible knot in this variable
        try {
          model = detail::refit_model(ctx, *probe, state.model,
                                      detail::mix_seed(cfg.seed, iter, j));
          refitted = true;
        } catch (const Error& e) {
          state.warnings.push_back("hyperparameter refit for variable " + std::to_string(j + 1) +
                                   " failed (" + e.what() + "); reusing the current model");
        }
      }
      // The criterion compares two modes of the same process, so after a
      // refit the current-subdivision mode must be recomputed under the new
      // hyperparameters; otherwise the distance conflates the candidate's
      // contribution with the hyperparameter shift.
      CoefficientGrid base = state.mode;
      if (refitted) {
        try {
          base = detail::candidate_mode(ctx, state.sub, model).alpha;
        } catch (const Error& e) {
          state.warnings.push_back("baseline mode for variable " + std::to_string(j + 1) +
                                   " failed (" + e.what() + "); reusing the current model");
          model = state.model;
          base = state.mode;
        }
      }
      std::optional<detail::Candidate> cand =
          active ? detail::optimize_knot(ctx, state.sub, base, model, j, state.warnings)
                 : detail::activation_candidate(ctx, state.sub, base, model, j, state.warnings);
      if (cand && cand->valid && cand->score() > winner.score()) winner = *cand;
    }

    if (!winner.valid) {
      state.warnings.push_back("no admissible candidate move; stopping early");
      break;
    }
    if (winner.score() < cfg.tolerance) {
      state.converged = true;
      break;
    }

    state.sub = winner.sub;
    state.mode = winner.mode;
    state.qp = winner.qp;
    state.model = winner.model;
    if (cfg.refit == HyperRefit::PerAcceptedMove) {
      try {
        state.model = detail::refit_model(ctx, state.sub, winner.model,
                                          detail::mix_seed(cfg.seed, iter, ambient));
        ModeResult mode = detail::candidate_mode(ctx, state.sub, state.model);
        state.mode = mode.alpha;
        state.qp = mode.qp;
      } catch (const Error& e) {
        state.warnings.push_back(std::string("post-move refit failed (") + e.what() +
                                 "); keeping the candidate model");
        state.model = winner.model;
      }
    }

    MoveRecord rec;
    rec.iteration = iter;
    rec.kind = winner.activation ? MoveRecord::Kind::Activate : MoveRecord::Kind::InsertKnot;
    rec.variable = winner.variable;
    rec.knot = winner.knot;
    rec.criterion = winner.criterion;
    rec.reward = winner.reward;
    rec.grid_size = state.sub.grid_size();
    rec.variance = state.model.variance;
    rec.lengthscales = state.model.lengthscales;
    rec.noise_variance = state.model.noise_variance;
    rec.seconds = std::chrono::duration<double>(clock::now() - iter_start).count();
    state.history.push_back(rec);
  }
  return state;
}

}  // namespace hatgp
