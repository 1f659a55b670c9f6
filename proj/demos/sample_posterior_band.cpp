// Draws from the constrained posterior of a fitted one-variable model and
// prints a pointwise credible band along the diagonal of the input domain.
// Every draw respects the monotonicity constraint, so the band edges are
// themselves monotone curves.
//
// Build with the project, then run:  ./build/demos/sample_posterior_band

#include <cstdio>

#include "hatgp/run.hpp"

using namespace hatgp;

int main() {
  Json config_json;
  config_json["seed"] = 5;
  config_json["preset"] = Json{{"name", "modatan"}, {"ambient", 1}, {"active", 1}};
  config_json["maxmod"] = Json{{"tolerance", 1e-4}};

  const RunConfig config = parse_run_config(config_json);
  const FitResult fit = run_fit(config);
  const ModelArtifact model = model_from_json(fit.model);

  const int n_draws = 200;
  const double level = 0.9;
  const SampleResult result = run_sample(model, n_draws, level, SampleMethod::Gibbs, 5);

  std::printf("%d draws on %lld coefficients, %.0f%% band at the probe points:\n\n", n_draws,
              static_cast<long long>(model.sub.grid_size()), 100.0 * level);
  std::printf("%-8s %-10s %-10s %s\n", "x", "lower", "upper", "width");
  for (Eigen::Index i = 0; i < result.probes.rows(); ++i) {
    const auto [lo, hi] = result.band[static_cast<std::size_t>(i)];
    std::printf("%-8.2f %-10.4f %-10.4f %.4f\n", result.probes(i, 0), lo, hi, hi - lo);
  }
  return 0;
}
