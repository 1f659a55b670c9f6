#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <initializer_list>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "hatgp/basis.hpp"
#include "hatgp/bench.hpp"
#include "hatgp/constraints.hpp"
#include "hatgp/csv.hpp"
#include "hatgp/design.hpp"
#include "hatgp/errors.hpp"
#include "hatgp/grid.hpp"
#include "hatgp/hyperfit.hpp"
#include "hatgp/kernel.hpp"
#include "hatgp/maxmod.hpp"
#include "hatgp/mode.hpp"
#include "hatgp/sampler.hpp"

namespace hatgp {

using Json = nlohmann::json;

inline constexpr int kRunLogSchemaVersion = 1;

// --------------------------------------------------------------------------
// Run configuration.  Variables are 1-based in every user-facing artifact
// (matching the x1..xD column names) and 0-based internally.

struct DatasetSpec {
  std::string path;
  bool rescale = false;
};

struct PresetSpec {
  std::string name;     // atan2d | modatan
  int ambient = 0;      // modatan only
  int active = 0;       // modatan only
  int samples = 0;      // 0 -> default (40 for atan2d, 10 * ambient otherwise)
};

struct RunConfig {
  std::uint64_t seed = 0;
  std::string out = "out";
  std::optional<DatasetSpec> dataset;
  std::optional<PresetSpec> preset;
  std::optional<ConstraintSet> constraints;  // absent -> monotone for presets, none for CSV data
  KernelFamily kernel_family = KernelFamily::Matern52;
  double kernel_variance = 1.0;
  double kernel_lengthscale = 0.5;
  double kernel_noise = 1e-2;
  MaxModConfig maxmod;            // carries the hyper-fit options and the seed
  std::vector<int> bench_square;  // explicit square knot counts; empty -> automatic
};

namespace detail {

inline void require_keys(const Json& j, const std::string& where,
                         std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw ConfigError(where + " must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    (void)value;
    bool known = false;
    for (const char* a : allowed) {
      if (key == a) {
        known = true;
        break;
      }
    }
    if (!known) throw ConfigError("unknown key '" + key + "' in " + where);
  }
}

template <typename T>
inline T field(const Json& j, const std::string& where, const std::string& key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const Json::exception& e) {
    throw ConfigError("bad value for '" + key + "' in " + where + ": " + e.what());
  }
}

inline KernelFamily parse_family(const std::string& name) {
  if (name == "squared-exponential") return KernelFamily::SquaredExponential;
  if (name == "matern-5/2") return KernelFamily::Matern52;
  if (name == "matern-3/2") return KernelFamily::Matern32;
  throw ConfigError("unknown kernel family '" + name +
                    "' (expected squared-exponential, matern-5/2, or matern-3/2)");
}

inline std::vector<int> user_variables(const Json& j, const std::string& where) {
  std::vector<int> vars = field<std::vector<int>>(j, where, "variables", {});
  for (int& v : vars) {
    if (v < 1) throw ConfigError("variables in " + where + " are 1-based and must be >= 1");
    --v;
  }
  return vars;
}

inline Constraint parse_constraint(const Json& j) {
  const std::string where = "constraints[]";
  const std::string kind = field<std::string>(j, where, "kind", "");
  if (kind == "boundedness") {
    require_keys(j, where, {"kind", "lower", "upper"});
    const double lo =
        field<double>(j, where, "lower", -std::numeric_limits<double>::infinity());
    const double hi = field<double>(j, where, "upper", std::numeric_limits<double>::infinity());
    return Constraint::bounded(lo, hi);
  }
  if (kind == "monotonicity") {
    require_keys(j, where, {"kind", "variables"});
    return Constraint::monotone(user_variables(j, where));
  }
  if (kind == "convexity") {
    require_keys(j, where, {"kind", "variables"});
    return Constraint::convex(user_variables(j, where));
  }
  throw ConfigError("unknown constraint kind '" + kind +
                    "' (expected boundedness, monotonicity, or convexity)");
}

inline Json constraint_json(const Constraint& c) {
  Json j;
  j["kind"] = constraint_kind_name(c.kind);
  if (c.kind == ConstraintKind::Boundedness) {
    if (std::isfinite(c.lower)) j["lower"] = c.lower;
    if (std::isfinite(c.upper)) j["upper"] = c.upper;
  } else {
    Json vars = Json::array();
    for (int v : c.variables) vars.push_back(v + 1);
    j["variables"] = std::move(vars);
  }
  return j;
}

}  // namespace detail

inline RunConfig parse_run_config(const Json& j) {
  detail::require_keys(j, "config", {"seed", "out", "dataset", "preset", "constraints", "kernel",
                                     "hyper", "maxmod", "bench"});
  RunConfig c;
  c.seed = detail::field<std::uint64_t>(j, "config", "seed", 0);
  c.out = detail::field<std::string>(j, "config", "out", "out");

  if (j.contains("dataset")) {
    const Json& d = j.at("dataset");
    detail::require_keys(d, "dataset", {"path", "rescale"});
    DatasetSpec spec;
    spec.path = detail::field<std::string>(d, "dataset", "path", "");
    if (spec.path.empty()) throw ConfigError("dataset.path must be a non-empty string");
    spec.rescale = detail::field<bool>(d, "dataset", "rescale", false);
    c.dataset = spec;
  }
  if (j.contains("preset")) {
    const Json& p = j.at("preset");
    detail::require_keys(p, "preset", {"name", "ambient", "active", "samples"});
    PresetSpec spec;
    spec.name = detail::field<std::string>(p, "preset", "name", "");
    spec.ambient = detail::field<int>(p, "preset", "ambient", 0);
    spec.active = detail::field<int>(p, "preset", "active", 0);
    spec.samples = detail::field<int>(p, "preset", "samples", 0);
    if (spec.samples < 0) throw ConfigError("preset.samples must be positive");
    c.preset = spec;
  }
  if (c.dataset && c.preset) throw ConfigError("choose either a dataset or a preset, not both");
  if (!c.dataset && !c.preset) throw ConfigError("config needs a dataset or a preset");

  if (j.contains("constraints")) {
    const Json& list = j.at("constraints");
    if (!list.is_array()) throw ConfigError("constraints must be a list");
    ConstraintSet set;
    for (const Json& item : list) set.push_back(detail::parse_constraint(item));
    c.constraints = std::move(set);
  }

  if (j.contains("kernel")) {
    const Json& k = j.at("kernel");
    detail::require_keys(k, "kernel", {"family", "variance", "lengthscale", "noise_variance"});
    c.kernel_family =
        detail::parse_family(detail::field<std::string>(k, "kernel", "family", "matern-5/2"));
    c.kernel_variance = detail::field<double>(k, "kernel", "variance", 1.0);
    c.kernel_lengthscale = detail::field<double>(k, "kernel", "lengthscale", 0.5);
    c.kernel_noise = detail::field<double>(k, "kernel", "noise_variance", 1e-2);
  }

  if (j.contains("hyper")) {
    const Json& h = j.at("hyper");
    detail::require_keys(h, "hyper",
                         {"restarts", "max_evals", "fit_noise", "lengthscale_min",
                          "lengthscale_max", "variance_min_factor", "variance_max_factor",
                          "noise_min_factor", "noise_max_factor"});
    HyperFitOptions& o = c.maxmod.hyper;
    o.restarts = detail::field<int>(h, "hyper", "restarts", o.restarts);
    o.max_evals = detail::field<int>(h, "hyper", "max_evals", o.max_evals);
    o.fit_noise = detail::field<bool>(h, "hyper", "fit_noise", o.fit_noise);
    o.bounds.lengthscale_min =
        detail::field<double>(h, "hyper", "lengthscale_min", o.bounds.lengthscale_min);
    o.bounds.lengthscale_max =
        detail::field<double>(h, "hyper", "lengthscale_max", o.bounds.lengthscale_max);
    o.bounds.variance_min_factor =
        detail::field<double>(h, "hyper", "variance_min_factor", o.bounds.variance_min_factor);
    o.bounds.variance_max_factor =
        detail::field<double>(h, "hyper", "variance_max_factor", o.bounds.variance_max_factor);
    o.bounds.noise_min_factor =
        detail::field<double>(h, "hyper", "noise_min_factor", o.bounds.noise_min_factor);
    o.bounds.noise_max_factor =
        detail::field<double>(h, "hyper", "noise_max_factor", o.bounds.noise_max_factor);
  }

  if (j.contains("maxmod")) {
    const Json& m = j.at("maxmod");
    detail::require_keys(m, "maxmod",
                         {"delta", "delta_prime", "tolerance", "min_separation", "max_iterations",
                          "knot_grid_points", "knot_refinement_tol", "refit", "use_exact_mode"});
    MaxModConfig& cfg = c.maxmod;
    cfg.delta = detail::field<double>(m, "maxmod", "delta", cfg.delta);
    cfg.delta_prime = detail::field<double>(m, "maxmod", "delta_prime", cfg.delta_prime);
    cfg.tolerance = detail::field<double>(m, "maxmod", "tolerance", cfg.tolerance);
    cfg.min_separation = detail::field<double>(m, "maxmod", "min_separation", cfg.min_separation);
    cfg.max_iterations = detail::field<int>(m, "maxmod", "max_iterations", cfg.max_iterations);
    cfg.knot_search.grid_points_per_interval = detail::field<int>(
        m, "maxmod", "knot_grid_points", cfg.knot_search.grid_points_per_interval);
    cfg.knot_search.refinement_tol =
        detail::field<double>(m, "maxmod", "knot_refinement_tol", cfg.knot_search.refinement_tol);
    const std::string refit = detail::field<std::string>(m, "maxmod", "refit", "per-candidate");
    if (refit == "per-candidate") {
      cfg.refit = HyperRefit::PerCandidate;
    } else if (refit == "per-accepted-move") {
      cfg.refit = HyperRefit::PerAcceptedMove;
    } else {
      throw ConfigError("maxmod.refit must be per-candidate or per-accepted-move");
    }
    cfg.use_exact_mode = detail::field<bool>(m, "maxmod", "use_exact_mode", cfg.use_exact_mode);
  }
  c.maxmod.seed = c.seed;

  if (j.contains("bench")) {
    const Json& b = j.at("bench");
    detail::require_keys(b, "bench", {"square"});
    c.bench_square = detail::field<std::vector<int>>(b, "bench", "square", {});
  }
  return c;
}

inline RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  Json j;
  try {
    in >> j;
  } catch (const Json::exception& e) {
    throw ConfigError("config '" + path + "' is not valid JSON: " + e.what());
  }
  return parse_run_config(j);
}

// Canonical serialization with every default materialized; feeding the echo
// back through parse_run_config reproduces the same configuration.
inline Json echo_config(const RunConfig& c) {
  Json j;
  j["seed"] = c.seed;
  j["out"] = c.out;
  if (c.dataset) j["dataset"] = Json{{"path", c.dataset->path}, {"rescale", c.dataset->rescale}};
  if (c.preset) {
    j["preset"] = Json{{"name", c.preset->name},
                       {"ambient", c.preset->ambient},
                       {"active", c.preset->active},
                       {"samples", c.preset->samples}};
  }
  if (c.constraints) {
    Json list = Json::array();
    for (const Constraint& con : *c.constraints) list.push_back(detail::constraint_json(con));
    j["constraints"] = std::move(list);
  }
  j["kernel"] = Json{{"family", kernel_family_name(c.kernel_family)},
                     {"variance", c.kernel_variance},
                     {"lengthscale", c.kernel_lengthscale},
                     {"noise_variance", c.kernel_noise}};
  const HyperFitOptions& o = c.maxmod.hyper;
  j["hyper"] = Json{{"restarts", o.restarts},
                    {"max_evals", o.max_evals},
                    {"fit_noise", o.fit_noise},
                    {"lengthscale_min", o.bounds.lengthscale_min},
                    {"lengthscale_max", o.bounds.lengthscale_max},
                    {"variance_min_factor", o.bounds.variance_min_factor},
                    {"variance_max_factor", o.bounds.variance_max_factor},
                    {"noise_min_factor", o.bounds.noise_min_factor},
                    {"noise_max_factor", o.bounds.noise_max_factor}};
  const MaxModConfig& m = c.maxmod;
  j["maxmod"] = Json{
      {"delta", m.delta},
      {"delta_prime", m.delta_prime},
      {"tolerance", m.tolerance},
      {"min_separation", m.min_separation},
      {"max_iterations", m.max_iterations},
      {"knot_grid_points", m.knot_search.grid_points_per_interval},
      {"knot_refinement_tol", m.knot_search.refinement_tol},
      {"refit", m.refit == HyperRefit::PerCandidate ? "per-candidate" : "per-accepted-move"},
      {"use_exact_mode", m.use_exact_mode}};
  if (!c.bench_square.empty()) j["bench"] = Json{{"square", c.bench_square}};
  return j;
}

// --------------------------------------------------------------------------
// Problem resolution: turn a config into data + constraints (+ oracle).

struct ResolvedProblem {
  Eigen::MatrixXd x;
  Eigen::VectorXd y;
  int ambient = 0;
  std::optional<TestFunction> oracle;
  ConstraintSet constraints;
  RunConfig effective;  // config with preset/constraint defaults filled in
};

inline ResolvedProblem resolve_problem(const RunConfig& c) {
  ResolvedProblem p;
  p.effective = c;
  if (c.preset) {
    PresetSpec spec = *c.preset;
    if (spec.name == "atan2d") {
      if (spec.ambient && spec.ambient != 2) throw ConfigError("atan2d is two-dimensional");
      if (spec.active && spec.active != 2) throw ConfigError("atan2d is two-dimensional");
      spec.ambient = 2;
      spec.active = 2;
      if (spec.samples == 0) spec.samples = 40;
      p.oracle = atan2d_function();
    } else if (spec.name == "modatan") {
      p.oracle = modatan_function(spec.ambient, spec.active);  // validates the dimensions
      if (spec.samples == 0) spec.samples = 10 * spec.ambient;
    } else {
      throw ConfigError("unknown preset '" + spec.name + "' (available: atan2d, modatan)");
    }
    p.ambient = spec.ambient;
    p.x = maximin_lhd(spec.samples, spec.ambient, c.seed);
    p.y.resize(spec.samples);
    for (Eigen::Index i = 0; i < p.y.size(); ++i) p.y[i] = p.oracle->eval(p.x.row(i).transpose());
    p.effective.preset = spec;
  } else {
    Dataset data = ingest_csv(c.dataset->path, c.dataset->rescale);
    p.x = std::move(data.x);
    p.y = std::move(data.y);
    p.ambient = static_cast<int>(p.x.cols());
  }

  // Presets describe monotone targets, so default to that shape; raw CSV
  // data defaults to an unconstrained fit.
  p.constraints = c.constraints ? *c.constraints
                                : (c.preset ? ConstraintSet{Constraint::monotone()}
                                            : ConstraintSet{});
  for (const Constraint& con : p.constraints) {
    for (int v : con.variables) {
      if (v >= p.ambient) {
        throw ConfigError("constraint variable x" + std::to_string(v + 1) +
                          " exceeds the input dimension " + std::to_string(p.ambient));
      }
    }
  }
  p.effective.constraints = p.constraints;
  return p;
}

// --------------------------------------------------------------------------
// Run log and model artifact.

namespace detail {

inline Json hyper_json(double variance, const Eigen::VectorXd& lengthscales,
                       double noise_variance) {
  Json ls = Json::array();
  for (Eigen::Index i = 0; i < lengthscales.size(); ++i) ls.push_back(lengthscales[i]);
  return Json{{"variance", variance}, {"lengthscales", std::move(ls)},
              {"noise_variance", noise_variance}};
}

}  // namespace detail

inline Json run_log_json(const RunConfig& effective, const MaxModState& state,
                         std::optional<double> e_n, double total_seconds) {
  Json log;
  log["schema_version"] = kRunLogSchemaVersion;
  log["config_echo"] = echo_config(effective);

  Json iterations = Json::array();
  for (const MoveRecord& rec : state.history) {
    Json it;
    it["iteration"] = rec.iteration;
    it["move"] = rec.kind == MoveRecord::Kind::Activate ? "activate" : "insert_knot";
    it["variable"] = rec.variable + 1;
    if (rec.kind == MoveRecord::Kind::InsertKnot) {
      it["knot"] = rec.knot;
    } else {
      it["knot"] = nullptr;
    }
    it["criterion"] = rec.criterion;
    it["reward"] = rec.reward;
    it["grid_size"] = static_cast<std::int64_t>(rec.grid_size);
    it["hyperparameters"] = detail::hyper_json(rec.variance, rec.lengthscales, rec.noise_variance);
    it["seconds"] = rec.seconds;
    iterations.push_back(std::move(it));
  }
  log["iterations"] = std::move(iterations);

  Json fin;
  Json active = Json::array();
  Json knots = Json::array();
  for (int k = 0; k < state.sub.dim(); ++k) {
    active.push_back(state.sub.active()[static_cast<std::size_t>(k)] + 1);
    knots.push_back(state.sub.axis(k).knots());
  }
  fin["active_variables"] = std::move(active);
  fin["knots"] = std::move(knots);
  Json coeffs = Json::array();
  for (Eigen::Index i = 0; i < state.mode.values().size(); ++i) {
    coeffs.push_back(state.mode.values()[i]);
  }
  fin["coefficients"] = std::move(coeffs);
  fin["converged"] = state.converged;
  fin["warnings"] = state.warnings;
  if (e_n) fin["e_n"] = *e_n;
  fin["seconds"] = total_seconds;
  log["final"] = std::move(fin);
  return log;
}

// Zeroes every wall-time field so reruns can be compared byte for byte.
inline void strip_timings(Json& log) {
  if (log.contains("iterations")) {
    for (Json& it : log["iterations"]) it["seconds"] = 0.0;
  }
  if (log.contains("final") && log["final"].contains("seconds")) log["final"]["seconds"] = 0.0;
}

// Everything predict/sample need, bundled into one JSON artifact.
struct ModelArtifact {
  Subdivision sub{1, {0}, {Subdivision1D()}};
  CoefficientGrid mode{std::vector<int>{2}};
  KernelModel model;
  ConstraintSet constraints;
  Eigen::MatrixXd x;
  Eigen::VectorXd y;
  std::uint64_t seed = 0;
};

inline Json model_to_json(const ModelArtifact& m) {
  Json j;
  j["schema_version"] = kRunLogSchemaVersion;
  j["ambient_dim"] = m.sub.ambient_dim();
  Json active = Json::array();
  Json knots = Json::array();
  for (int k = 0; k < m.sub.dim(); ++k) {
    active.push_back(m.sub.active()[static_cast<std::size_t>(k)] + 1);
    knots.push_back(m.sub.axis(k).knots());
  }
  j["active_variables"] = std::move(active);
  j["knots"] = std::move(knots);
  Json coeffs = Json::array();
  for (Eigen::Index i = 0; i < m.mode.values().size(); ++i) coeffs.push_back(m.mode.values()[i]);
  j["coefficients"] = std::move(coeffs);
  Json ls = Json::array();
  for (Eigen::Index i = 0; i < m.model.lengthscales.size(); ++i) {
    ls.push_back(m.model.lengthscales[i]);
  }
  j["kernel"] = Json{{"family", kernel_family_name(m.model.family)},
                     {"variance", m.model.variance},
                     {"lengthscales", std::move(ls)},
                     {"noise_variance", m.model.noise_variance}};
  Json cons = Json::array();
  for (const Constraint& c : m.constraints) cons.push_back(detail::constraint_json(c));
  j["constraints"] = std::move(cons);
  j["seed"] = m.seed;
  Json rows = Json::array();
  for (Eigen::Index r = 0; r < m.x.rows(); ++r) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < m.x.cols(); ++c) row.push_back(m.x(r, c));
    rows.push_back(std::move(row));
  }
  Json yv = Json::array();
  for (Eigen::Index i = 0; i < m.y.size(); ++i) yv.push_back(m.y[i]);
  j["data"] = Json{{"x", std::move(rows)}, {"y", std::move(yv)}};
  return j;
}

inline ModelArtifact model_from_json(const Json& j) {
  detail::require_keys(j, "model", {"schema_version", "ambient_dim", "active_variables", "knots",
                                    "coefficients", "kernel", "constraints", "seed", "data"});
  const int version = detail::field<int>(j, "model", "schema_version", -1);
  if (version != kRunLogSchemaVersion) {
    throw ConfigError("model artifact has schema_version " + std::to_string(version) +
                      "; this build reads version " + std::to_string(kRunLogSchemaVersion));
  }
  ModelArtifact m;
  const int ambient = detail::field<int>(j, "model", "ambient_dim", 0);
  std::vector<int> active = detail::field<std::vector<int>>(j, "model", "active_variables", {});
  for (int& v : active) --v;
  auto knot_lists = detail::field<std::vector<std::vector<double>>>(j, "model", "knots", {});
  if (knot_lists.size() != active.size()) {
    throw ConfigError("model artifact: one knot list per active variable required");
  }
  std::vector<Subdivision1D> axes;
  axes.reserve(knot_lists.size());
  for (std::vector<double>& k : knot_lists) axes.emplace_back(std::move(k));
  m.sub = Subdivision(ambient, std::move(active), std::move(axes));
  std::vector<double> coeffs = detail::field<std::vector<double>>(j, "model", "coefficients", {});
  if (static_cast<Eigen::Index>(coeffs.size()) != m.sub.grid_size()) {
    throw ConfigError("model artifact: coefficient count disagrees with the grid");
  }
  m.mode = CoefficientGrid(m.sub.shape(),
                           Eigen::Map<Eigen::VectorXd>(coeffs.data(),
                                                       static_cast<Eigen::Index>(coeffs.size())));

  const Json& k = j.at("kernel");
  detail::require_keys(k, "model.kernel", {"family", "variance", "lengthscales", "noise_variance"});
  m.model.family = detail::parse_family(detail::field<std::string>(k, "kernel", "family", ""));
  m.model.variance = detail::field<double>(k, "kernel", "variance", 1.0);
  std::vector<double> ls = detail::field<std::vector<double>>(k, "kernel", "lengthscales", {});
  m.model.lengthscales =
      Eigen::Map<Eigen::VectorXd>(ls.data(), static_cast<Eigen::Index>(ls.size()));
  m.model.noise_variance = detail::field<double>(k, "kernel", "noise_variance", 0.0);
  m.model.validate(ambient);

  if (j.contains("constraints")) {
    for (const Json& item : j.at("constraints")) {
      m.constraints.push_back(detail::parse_constraint(item));
    }
  }
  m.seed = detail::field<std::uint64_t>(j, "model", "seed", 0);

  const Json& data = j.at("data");
  detail::require_keys(data, "model.data", {"x", "y"});
  auto xr = detail::field<std::vector<std::vector<double>>>(data, "model.data", "x", {});
  std::vector<double> yv = detail::field<std::vector<double>>(data, "model.data", "y", {});
  if (xr.size() != yv.size()) throw ConfigError("model artifact: x and y row counts differ");
  m.x.resize(static_cast<Eigen::Index>(xr.size()), ambient);
  for (Eigen::Index r = 0; r < m.x.rows(); ++r) {
    if (static_cast<int>(xr[static_cast<std::size_t>(r)].size()) != ambient) {
      throw ConfigError("model artifact: data row width disagrees with ambient_dim");
    }
    for (int c = 0; c < ambient; ++c) m.x(r, c) = xr[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
  }
  m.y = Eigen::Map<Eigen::VectorXd>(yv.data(), static_cast<Eigen::Index>(yv.size()));
  return m;
}

// --------------------------------------------------------------------------
// fit

struct FitResult {
  ResolvedProblem problem;
  MaxModState state;
  std::optional<double> e_n;
  Json run_log;
  Json model;
};

inline FitResult run_fit(const RunConfig& config) {
  const auto start = std::chrono::steady_clock::now();
  FitResult out;
  out.problem = resolve_problem(config);
  const KernelModel seed_model =
      KernelModel::isotropic(config.kernel_family, out.problem.ambient, config.kernel_variance,
                             config.kernel_lengthscale, config.kernel_noise);
  out.state = run_maxmod(out.problem.x, out.problem.y, out.problem.constraints,
                         out.problem.effective.maxmod, seed_model);
  if (out.problem.oracle) {
    out.e_n = bending_energy(*out.problem.oracle, out.state.sub, out.state.mode);
  }
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  out.run_log = run_log_json(out.problem.effective, out.state, out.e_n, seconds);

  ModelArtifact artifact;
  artifact.sub = out.state.sub;
  artifact.mode = out.state.mode;
  artifact.model = out.state.model;
  artifact.constraints = out.problem.constraints;
  artifact.x = out.problem.x;
  artifact.y = out.problem.y;
  artifact.seed = config.seed;
  out.model = model_to_json(artifact);
  return out;
}

// --------------------------------------------------------------------------
// predict

struct PredictionTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<int> ignored;  // 1-based inactive variables
};

inline PredictionTable predict_points(const ModelArtifact& m, const Eigen::MatrixXd& points) {
  if (points.cols() != m.sub.ambient_dim()) {
    throw DataError("points have " + std::to_string(points.cols()) + " columns but the model" +
                    " expects " + std::to_string(m.sub.ambient_dim()));
  }
  PredictionTable table;
  for (int v = 0; v < m.sub.ambient_dim(); ++v) {
    table.header.push_back("x" + std::to_string(v + 1));
    if (!m.sub.is_active(v)) table.ignored.push_back(v + 1);
  }
  table.header.push_back("prediction");
  for (Eigen::Index r = 0; r < points.rows(); ++r) {
    Eigen::VectorXd xa(m.sub.dim());
    for (int k = 0; k < m.sub.dim(); ++k) {
      xa[k] = points(r, m.sub.active()[static_cast<std::size_t>(k)]);
    }
    std::vector<std::string> row;
    row.reserve(static_cast<std::size_t>(points.cols()) + 1);
    for (Eigen::Index c = 0; c < points.cols(); ++c) {
      row.push_back(detail::format_double(points(r, c)));
    }
    row.push_back(detail::format_double(eval_spline(m.sub, m.mode, xa)));
    table.rows.push_back(std::move(row));
  }
  return table;
}

// --------------------------------------------------------------------------
// sample

struct SampleResult {
  std::vector<Eigen::VectorXd> draws;
  Eigen::MatrixXd probes;                        // ambient diagonal probe points
  std::vector<std::pair<double, double>> band;   // per probe row
};

inline SampleResult run_sample(const ModelArtifact& m, int count, double level,
                               SampleMethod method, std::uint64_t seed) {
  const Eigen::MatrixXd phi = build_interpolation(m.sub, m.x);
  // The fitted noise doubles as the conditioning bandwidth; keep it positive
  // even when the artifact came from an exact-interpolation fit.
  const double tau2 = m.model.noise_variance > 0.0 ? m.model.noise_variance
                                                   : std::max(1e-8 * m.model.variance, 1e-12);
  const TruncatedGaussianSpec spec =
      posterior_spec(m.model, m.sub, m.constraints, phi, m.y, tau2);

  SampleResult out;
  out.draws = sample(spec, count, method, seed, SamplerOptions{}, m.mode.values());

  const int probes = 10;
  out.probes.resize(probes, m.sub.ambient_dim());
  for (int i = 0; i < probes; ++i) {
    out.probes.row(i).setConstant((i + 0.5) / probes);
  }
  Eigen::MatrixXd active_probes(probes, m.sub.dim());
  for (int k = 0; k < m.sub.dim(); ++k) {
    active_probes.col(k) = out.probes.col(m.sub.active()[static_cast<std::size_t>(k)]);
  }
  out.band = credible_band(out.draws, m.sub, active_probes, level);
  return out;
}

// --------------------------------------------------------------------------
// bench

struct BenchRow {
  std::string method;  // maxmod | rect | square
  int step = 0;        // iteration for maxmod/rect, knots per axis for square
  Eigen::Index m = 0;
  double e_n = 0.0;
};

namespace detail {

// Refit hyperparameters and the constrained mode on a fixed subdivision.
inline CoefficientGrid fixed_grid_mode(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                       const ConstraintSet& constraints, const Subdivision& sub,
                                       const KernelModel& warm, const MaxModConfig& cfg,
                                       std::uint64_t seed) {
  const Eigen::MatrixXd phi = build_interpolation(sub, x);
  KernelModel model = fit_hyperparameters(warm, sub, phi, y, cfg.hyper, seed);
  const KnotCovariance cov = knot_covariance(model, sub);
  const InequalitySystem ineq = build_inequality(constraints, sub);
  const ModeResult mode =
      cfg.use_exact_mode
          ? compute_map(sub, cov, ineq, phi, y)
          : compute_noisy_map(sub, cov, ineq, phi, y, model.noise_variance);
  return mode.alpha;
}

// Mode replay for one prefix of the accepted-move history, using the
// hyperparameters recorded with that move.
inline CoefficientGrid replay_mode(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                   const ConstraintSet& constraints, const Subdivision& sub,
                                   const MoveRecord& rec, KernelFamily family,
                                   bool use_exact_mode) {
  KernelModel model;
  model.family = family;
  model.variance = rec.variance;
  model.lengthscales = rec.lengthscales;
  model.noise_variance = rec.noise_variance;
  const Eigen::MatrixXd phi = build_interpolation(sub, x);
  const KnotCovariance cov = knot_covariance(model, sub);
  const InequalitySystem ineq = build_inequality(constraints, sub);
  const ModeResult mode = use_exact_mode || !(rec.noise_variance > 0.0)
                              ? compute_map(sub, cov, ineq, phi, y)
                              : compute_noisy_map(sub, cov, ineq, phi, y, rec.noise_variance);
  return mode.alpha;
}

}  // namespace detail

inline std::vector<BenchRow> run_bench(const RunConfig& config, const FitResult& fit) {
  if (!fit.problem.oracle) {
    throw ConfigError("bench needs a preset with an analytic target");
  }
  const TestFunction& oracle = *fit.problem.oracle;
  const int ambient = fit.problem.ambient;
  const MaxModConfig& cfg = fit.problem.effective.maxmod;
  const KernelModel warm =
      KernelModel::isotropic(config.kernel_family, ambient, config.kernel_variance,
                             config.kernel_lengthscale, config.kernel_noise);
  std::vector<BenchRow> rows;

  // Sequential curve: replay the accepted-move history, then the matching
  // equispaced layout with the same per-variable knot counts.
  Subdivision sub = Subdivision::initial(ambient, fit.state.history.at(0).variable);
  for (std::size_t i = 0; i < fit.state.history.size(); ++i) {
    const MoveRecord& rec = fit.state.history[i];
    if (i > 0) {
      sub = rec.kind == MoveRecord::Kind::Activate
                ? sub.with_variable(rec.variable)
                : sub.with_inserted_knot(rec.variable, rec.knot, cfg.min_separation);
    }
    const CoefficientGrid mode = detail::replay_mode(
        fit.problem.x, fit.problem.y, fit.problem.constraints, sub, rec, config.kernel_family,
        cfg.use_exact_mode);
    rows.push_back({"maxmod", rec.iteration, sub.grid_size(), bending_energy(oracle, sub, mode)});

    std::vector<int> counts(static_cast<std::size_t>(sub.dim()));
    for (int k = 0; k < sub.dim(); ++k) {
      counts[static_cast<std::size_t>(k)] = static_cast<int>(sub.axis(k).size());
    }
    const Subdivision rect = rect_baseline(counts, ambient, sub.active());
    const CoefficientGrid rect_mode = detail::fixed_grid_mode(
        fit.problem.x, fit.problem.y, fit.problem.constraints, rect, warm, cfg,
        detail::mix_seed(config.seed, 1000 + rec.iteration, 0));
    rows.push_back(
        {"rect", rec.iteration, rect.grid_size(), bending_energy(oracle, rect, rect_mode)});
  }

  // Square curve over the full ambient space.  Explicit counts are honored
  // (and refused above the guard); otherwise stop once the grid outgrows the
  // sequential run's final size.
  std::vector<int> all_vars(static_cast<std::size_t>(ambient));
  for (int v = 0; v < ambient; ++v) all_vars[static_cast<std::size_t>(v)] = v;
  std::vector<int> ks = config.bench_square;
  if (ks.empty()) {
    const double cap = std::max<double>(16.0, static_cast<double>(fit.state.sub.grid_size()));
    for (int k = 2; std::pow(static_cast<double>(k), ambient) <= cap; ++k) ks.push_back(k);
  }
  for (int k : ks) {
    const Subdivision square = square_baseline(k, ambient, all_vars);
    const CoefficientGrid mode = detail::fixed_grid_mode(
        fit.problem.x, fit.problem.y, fit.problem.constraints, square, warm, cfg,
        detail::mix_seed(config.seed, 2000 + k, 0));
    rows.push_back({"square", k, square.grid_size(), bending_energy(oracle, square, mode)});
  }
  return rows;
}

}  // namespace hatgp
