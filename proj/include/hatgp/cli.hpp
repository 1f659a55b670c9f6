#pragma once

// Command-line front end: wires argument parsing to the fit / predict /
// sample / bench entry points in run.hpp and maps library errors to exit
// codes (0 success, 2 config, 3 data, 4 infeasible, 5 numerical).

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hatgp/csv.hpp"
#include "hatgp/errors.hpp"
#include "hatgp/run.hpp"
#include "hatgp/sampler.hpp"

namespace hatgp {

namespace detail {

inline void write_json(const std::filesystem::path& path, const Json& j) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out << j.dump(2) << '\n';
  if (!out) throw DataError("write to '" + path.string() + "' failed");
}

inline Json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  Json j;
  try {
    in >> j;
  } catch (const Json::exception& e) {
    throw DataError("'" + path + "' is not valid JSON: " + e.what());
  }
  return j;
}

// Writes the plot-ready artifacts shared by fit: coefficient table, knot
// table, and spline evaluations (full grid in up to two active variables,
// one-variable profiles otherwise).
inline void write_fit_tables(const std::filesystem::path& dir, const MaxModState& state) {
  const Subdivision& sub = state.sub;
  const int d = sub.dim();

  std::vector<std::string> coef_header;
  for (int k = 0; k < d; ++k) {
    coef_header.push_back("x" + std::to_string(sub.active()[static_cast<std::size_t>(k)] + 1));
  }
  coef_header.push_back("coefficient");
  std::vector<std::vector<std::string>> coef_rows;
  for_each_multi_index(sub.shape(), [&](const std::vector<int>& multi, Eigen::Index) {
    std::vector<std::string> row;
    row.reserve(static_cast<std::size_t>(d) + 1);
    for (int k = 0; k < d; ++k) {
      row.push_back(format_double(sub.axis(k).knot(multi[static_cast<std::size_t>(k)])));
    }
    row.push_back(format_double(state.mode.at(multi)));
    coef_rows.push_back(std::move(row));
  });
  write_csv((dir / "coefficients.csv").string(), coef_header, coef_rows);

  std::vector<std::vector<std::string>> knot_rows;
  for (int k = 0; k < d; ++k) {
    const int var = sub.active()[static_cast<std::size_t>(k)] + 1;
    for (double t : sub.axis(k).knots()) {
      knot_rows.push_back({std::to_string(var), format_double(t)});
    }
  }
  write_csv((dir / "knots.csv").string(), {"variable", "knot"}, knot_rows);

  if (d <= 2) {
    const int points = 41;
    std::vector<std::string> header = coef_header;
    header.back() = "mean";
    std::vector<std::vector<std::string>> rows;
    Eigen::VectorXd xa(d);
    if (d == 1) {
      for (int i = 0; i < points; ++i) {
        xa[0] = static_cast<double>(i) / (points - 1);
        rows.push_back({format_double(xa[0]), format_double(eval_spline(sub, state.mode, xa))});
      }
    } else {
      for (int i = 0; i < points; ++i) {
        for (int j = 0; j < points; ++j) {
          xa[0] = static_cast<double>(i) / (points - 1);
          xa[1] = static_cast<double>(j) / (points - 1);
          rows.push_back({format_double(xa[0]), format_double(xa[1]),
                          format_double(eval_spline(sub, state.mode, xa))});
        }
      }
    }
    write_csv((dir / "grid_eval.csv").string(), header, rows);
  }

  // One-variable profiles with the other active inputs held at 0.5.
  const int points = 41;
  std::vector<std::vector<std::string>> profile_rows;
  for (int k = 0; k < d; ++k) {
    const int var = sub.active()[static_cast<std::size_t>(k)] + 1;
    Eigen::VectorXd xa = Eigen::VectorXd::Constant(d, 0.5);
    for (int i = 0; i < points; ++i) {
      xa[k] = static_cast<double>(i) / (points - 1);
      profile_rows.push_back({std::to_string(var), format_double(xa[k]),
                              format_double(eval_spline(sub, state.mode, xa))});
    }
  }
  write_csv((dir / "profiles.csv").string(), {"variable", "t", "mean"}, profile_rows);
}

}  // namespace detail

struct CliOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;  // overrides the config seed
  std::string out;                    // overrides the config output directory
  bool verbose = false;
};

namespace detail {

inline RunConfig load_cli_config(const CliOptions& opt) {
  if (opt.config_path.empty()) throw ConfigError("this command needs --config PATH");
  RunConfig config = load_run_config(opt.config_path);
  if (opt.seed) {
    config.seed = *opt.seed;
    config.maxmod.seed = *opt.seed;
  }
  if (!opt.out.empty()) config.out = opt.out;
  return config;
}

inline std::filesystem::path prepare_out_dir(const std::string& out) {
  std::filesystem::path dir(out.empty() ? "out" : out);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw DataError("cannot create output directory '" + dir.string() + "'");
  return dir;
}

inline int cmd_fit(const CliOptions& opt) {
  const RunConfig config = load_cli_config(opt);
  const std::filesystem::path dir = prepare_out_dir(config.out);
  FitResult fit = run_fit(config);
  write_json(dir / "run_log.json", fit.run_log);
  write_json(dir / "model.json", fit.model);
  write_fit_tables(dir, fit.state);
  if (opt.verbose) {
    for (const std::string& w : fit.state.warnings) {
      std::fprintf(stderr, "warning: %s\n", w.c_str());
    }
  }
  std::fprintf(stderr, "fit: %d active variable(s), %lld grid knots%s%s\n", fit.state.sub.dim(),
               static_cast<long long>(fit.state.sub.grid_size()),
               fit.state.converged ? ", converged" : "",
               fit.e_n ? (", E_n = " + format_double(*fit.e_n)).c_str() : "");
  return 0;
}

inline int cmd_predict(const CliOptions& opt, const std::string& model_path,
                       const std::string& points_path) {
  const ModelArtifact model = model_from_json(read_json(model_path));
  const Eigen::MatrixXd points = read_points_csv(points_path, model.sub.ambient_dim());
  const PredictionTable table = predict_points(model, points);
  const std::filesystem::path dir = prepare_out_dir(opt.out);
  write_csv((dir / "predictions.csv").string(), table.header, table.rows);
  if (!table.ignored.empty()) {
    std::string vars;
    for (int v : table.ignored) vars += (vars.empty() ? "x" : ", x") + std::to_string(v);
    std::fprintf(stderr, "note: inactive variable(s) %s ignored\n", vars.c_str());
  }
  std::fprintf(stderr, "predict: %zu point(s)\n", table.rows.size());
  return 0;
}

inline int cmd_sample(const CliOptions& opt, const std::string& model_path, int count,
                      double level, const std::string& method_name) {
  SampleMethod method;
  if (method_name == "gibbs") {
    method = SampleMethod::Gibbs;
  } else if (method_name == "rejection") {
    method = SampleMethod::Rejection;
  } else {
    throw ConfigError("--method must be gibbs or rejection");
  }
  const ModelArtifact model = model_from_json(read_json(model_path));
  const std::uint64_t seed = opt.seed ? *opt.seed : model.seed;
  const SampleResult result = run_sample(model, count, level, method, seed);
  const std::filesystem::path dir = prepare_out_dir(opt.out);

  std::vector<std::string> draw_header{"draw"};
  for (int k = 0; k < model.sub.dim(); ++k) {
    draw_header.push_back("x" +
                          std::to_string(model.sub.active()[static_cast<std::size_t>(k)] + 1));
  }
  draw_header.push_back("value");
  std::vector<std::vector<std::string>> draw_rows;
  for (std::size_t d = 0; d < result.draws.size(); ++d) {
    const CoefficientGrid grid(model.sub.shape(), result.draws[d]);
    for_each_multi_index(model.sub.shape(), [&](const std::vector<int>& multi, Eigen::Index) {
      std::vector<std::string> row{std::to_string(d)};
      for (int k = 0; k < model.sub.dim(); ++k) {
        row.push_back(
            format_double(model.sub.axis(k).knot(multi[static_cast<std::size_t>(k)])));
      }
      row.push_back(format_double(grid.at(multi)));
      draw_rows.push_back(std::move(row));
    });
  }
  write_csv((dir / "draws.csv").string(), draw_header, draw_rows);

  std::vector<std::string> band_header;
  for (int v = 0; v < model.sub.ambient_dim(); ++v) {
    band_header.push_back("x" + std::to_string(v + 1));
  }
  band_header.push_back("lower");
  band_header.push_back("upper");
  std::vector<std::vector<std::string>> band_rows;
  for (Eigen::Index p = 0; p < result.probes.rows(); ++p) {
    std::vector<std::string> row;
    for (Eigen::Index c = 0; c < result.probes.cols(); ++c) {
      row.push_back(format_double(result.probes(p, c)));
    }
    row.push_back(format_double(result.band[static_cast<std::size_t>(p)].first));
    row.push_back(format_double(result.band[static_cast<std::size_t>(p)].second));
    band_rows.push_back(std::move(row));
  }
  write_csv((dir / "band.csv").string(), band_header, band_rows);
  std::fprintf(stderr, "sample: %d draw(s), %s, level %g\n", count, sample_method_name(method),
               level);
  return 0;
}

inline int cmd_bench(const CliOptions& opt) {
  const RunConfig config = load_cli_config(opt);
  const std::filesystem::path dir = prepare_out_dir(config.out);
  FitResult fit = run_fit(config);
  const std::vector<BenchRow> rows = run_bench(config, fit);
  write_json(dir / "run_log.json", fit.run_log);
  write_json(dir / "model.json", fit.model);
  std::vector<std::vector<std::string>> table;
  table.reserve(rows.size());
  for (const BenchRow& r : rows) {
    table.push_back({r.method, std::to_string(r.step), std::to_string(r.m),
                     format_double(r.e_n)});
  }
  write_csv((dir / "bench.csv").string(), {"method", "step", "m", "e_n"}, table);
  std::fprintf(stderr, "bench: %zu row(s) across maxmod/rect/square\n", rows.size());
  return 0;
}

}  // namespace detail

inline int cli_main(int argc, char** argv) {
  CLI::App app{"Constrained Gaussian-process regression on sequentially refined hat bases"};
  app.require_subcommand(1);
  // Accept the global flags on either side of the subcommand name.
  app.fallthrough();

  CliOptions opt;
  std::uint64_t seed_value = 0;
  app.add_option("--config", opt.config_path, "JSON run configuration")->expected(1);
  CLI::Option* seed_opt = app.add_option("--seed", seed_value, "Override the config seed");
  app.add_option("--out", opt.out, "Override the output directory");
  app.add_flag("--verbose", opt.verbose, "Print per-iteration detail to stderr");

  CLI::App* fit = app.add_subcommand("fit", "Run the sequential constrained fit");
  CLI::App* predict = app.add_subcommand("predict", "Evaluate a fitted mode at points");
  std::string model_path = "out/model.json";
  std::string points_path;
  predict->add_option("--model", model_path, "Model artifact from fit");
  predict->add_option("--points", points_path, "CSV of prediction points (header x1..xD)")
      ->required();
  CLI::App* sample = app.add_subcommand("sample", "Draw constrained posterior samples");
  int count = 100;
  double level = 0.9;
  std::string method = "gibbs";
  sample->add_option("--model", model_path, "Model artifact from fit");
  sample->add_option("--count", count, "Number of draws");
  sample->add_option("--level", level, "Credible band coverage level");
  sample->add_option("--method", method, "gibbs or rejection");
  CLI::App* bench = app.add_subcommand("bench", "Compare against equispaced baselines");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }
  if (seed_opt->count() > 0) opt.seed = seed_value;

  try {
    if (fit->parsed()) return detail::cmd_fit(opt);
    if (predict->parsed()) return detail::cmd_predict(opt, model_path, points_path);
    if (sample->parsed()) return detail::cmd_sample(opt, model_path, count, level, method);
    if (bench->parsed()) return detail::cmd_bench(opt);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const DataError& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return 3;
  } catch (const InfeasibleError& e) {
    std::fprintf(stderr, "infeasible: %s\n", e.what());
    return 4;
  } catch (const NumericalError& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return 5;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return 5;
  }
  return 2;
}

}  // namespace hatgp
