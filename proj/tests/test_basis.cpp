#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "hatgp/basis.hpp"
#include "hatgp/grid.hpp"
#include "oracles.hpp"

using namespace hatgp;

TEST_CASE("hat function values", "[basis]") {
  // Symmetric hat on {0, 1/2, 1}.
  CHECK(hat_basis_eval(0.0, 0.5, 1.0, 0.25) == Catch::Approx(0.5));
  CHECK(hat_basis_eval(0.0, 0.5, 1.0, 0.5) == 1.0);
  CHECK(hat_basis_eval(0.0, 0.5, 1.0, 0.0) == 0.0);
  CHECK(hat_basis_eval(0.0, 0.5, 1.0, 1.0) == 0.0);
  // Asymmetric support and points outside it.
  CHECK(hat_basis_eval(-1.0, 0.0, 0.75, 0.25) == Catch::Approx(2.0 / 3.0));
  CHECK(hat_basis_eval(0.25, 0.5, 2.0, 2.5) == 0.0);
  CHECK(hat_basis_eval(0.25, 0.5, 2.0, 0.1) == 0.0);
  CHECK_THROWS_AS(hat_basis_eval(0.5, 0.5, 1.0, 0.3), ConfigError);
  CHECK_THROWS_AS(hat_basis_eval(0.5, 0.2, 1.0, 0.3), ConfigError);
}

TEST_CASE("subdivision validation and ghosts", "[basis]") {
  Subdivision1D axis({0.0, 0.25, 1.0});
  CHECK(axis.size() == 3);
  CHECK(axis.extended_knot(-1) == -1.0);
  CHECK(axis.extended_knot(3) == 2.0);
  CHECK(axis.locate(0.0) == 0);
  CHECK(axis.locate(0.25) == 1);
  CHECK(axis.locate(1.0) == 1);
  CHECK(axis.separation(0.3) == Catch::Approx(0.05));

  CHECK_THROWS_AS(Subdivision1D({0.0, 0.5}), ConfigError);
  CHECK_THROWS_AS(Subdivision1D({0.1, 1.0}), ConfigError);
  CHECK_THROWS_AS(Subdivision1D({0.0, 0.5, 0.5, 1.0}), ConfigError);
  CHECK_THROWS_AS(axis.inserted(0.25 + 1e-12, 1e-9), ConfigError);
  CHECK_NOTHROW(axis.inserted(0.6, 1e-9));
}

TEST_CASE("tensor basis on a partially active space", "[basis]") {
  // Ambient dimension 3 with variables 1 and 3 active (1-based), knot sets
  // {0, 1/3, 1} and {0, 1/4, 1/2, 1}.
  Subdivision sub(3, {0, 2},
                  {Subdivision1D({0.0, 1.0 / 3.0, 1.0}),
                   Subdivision1D({0.0, 0.25, 0.5, 1.0})});
  CHECK(sub.dim() == 2);
  CHECK(sub.grid_size() == 12);
  CHECK(sub.position(2) == 1);
  CHECK_THROWS_AS(sub.position(1), ConfigError);

  // Basis function centred at the knot (1/3, 1/2): one exactly there, half
  // heights when one coordinate sits mid-flank.
  Eigen::VectorXd at_knot(2), flank(2);
  at_knot << 1.0 / 3.0, 0.5;
  flank << 1.0 / 6.0, 0.5;
  CHECK(tensor_basis_eval(sub, {1, 2}, at_knot) == 1.0);
  CHECK(tensor_basis_eval(sub, {1, 2}, flank) == Catch::Approx(0.5));
  CHECK(tensor_basis_eval(sub, {0, 0}, at_knot) == 0.0);
}

TEST_CASE("partition of unity", "[basis]") {
  std::mt19937_64 rng(20240601);
  for (int trial = 0; trial < 25; ++trial) {
    Subdivision sub = oracle::random_subdivision(rng, 4, 1 + trial % 3, 4);
    for (int rep = 0; rep < 20; ++rep) {
      Eigen::VectorXd x = oracle::random_point(rng, sub.dim());
      double total = 0.0;
      for_each_multi_index(sub.shape(), [&](const std::vector<int>& multi, Eigen::Index) {
        total += tensor_basis_eval(sub, multi, x);
      });
      CHECK(total == Catch::Approx(1.0).margin(1e-12));
    }
  }
}

TEST_CASE("spline evaluation reproduces knot values exactly", "[basis]") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 10; ++trial) {
    Subdivision sub = oracle::random_subdivision(rng, 3, 1 + trial % 3, 4);
    CoefficientGrid grid = oracle::random_grid(rng, sub);
    Eigen::VectorXd x(sub.dim());
    for_each_multi_index(sub.shape(), [&](const std::vector<int>& multi, Eigen::Index flat) {
      for (int k = 0; k < sub.dim(); ++k) {
        x[k] = sub.axis(k).knot(multi[static_cast<std::size_t>(k)]);
      }
      CHECK(eval_spline(sub, grid, x) == grid[flat]);  // bitwise
    });
  }
}

TEST_CASE("projection interpolates the target at knots", "[basis]") {
  Subdivision sub(1, {0}, {Subdivision1D({0.0, 0.5, 1.0})});
  auto f = [](const Eigen::VectorXd& x) { return x[0] * x[0]; };
  CoefficientGrid grid = project(sub, f);
  CHECK(grid[0] == 0.0);
  CHECK(grid[1] == 0.25);
  CHECK(grid[2] == 1.0);
  // Piecewise-linear between knots: halfway between 0 and 0.25.
  Eigen::VectorXd x(1);
  x << 0.25;
  CHECK(eval_spline(sub, grid, x) == Catch::Approx(0.125));
}

TEST_CASE("coefficient grid layout is row-major, last axis fastest", "[basis]") {
  CoefficientGrid grid({2, 3});
  CHECK(grid.size() == 6);
  CHECK(grid.stride(0) == 3);
  CHECK(grid.stride(1) == 1);
  CHECK(grid.flat_index({1, 0}) == 3);
  CHECK(grid.flat_index({0, 2}) == 2);
  CHECK(grid.multi_index(5) == std::vector<int>{1, 2});
  for (Eigen::Index flat = 0; flat < grid.size(); ++flat) {
    CHECK(grid.flat_index(grid.multi_index(flat)) == flat);
  }
}

TEST_CASE("knot insertion re-expresses the same spline", "[basis]") {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 20; ++trial) {
    Subdivision sub = oracle::random_subdivision(rng, 3, 1 + trial % 3, 3);
    CoefficientGrid grid = oracle::random_grid(rng, sub);
    int var = sub.active()[static_cast<std::size_t>(trial) % sub.active().size()];
    // Any point strictly between two knots of that axis.
    const Subdivision1D& axis = sub.axis_of(var);
    std::uniform_real_distribution<double> unif(0.05, 0.95);
    double t = unif(rng);
    while (axis.separation(t) < 1e-3) t = unif(rng);

    RefinedModel refined = insert_knot(sub, grid, var, t, 1e-9);
    CHECK(refined.sub.grid_size() == sub.grid_size() / axis.size() * (axis.size() + 1));
    for (int rep = 0; rep < 25; ++rep) {
      Eigen::VectorXd x = oracle::random_point(rng, sub.dim());
      CHECK(eval_spline(refined.sub, refined.coeffs, x) ==
            Catch::Approx(eval_spline(sub, grid, x)).margin(1e-12));
    }
  }
}

TEST_CASE("variable activation re-expresses the same spline", "[basis]") {
  std::mt19937_64 rng(123);
  for (int trial = 0; trial < 20; ++trial) {
    Subdivision sub = oracle::random_subdivision(rng, 4, 1 + trial % 3, 3);
    if (sub.dim() == 4) continue;
    CoefficientGrid grid = oracle::random_grid(rng, sub);
    int var = 0;
    while (sub.is_active(var)) ++var;

    RefinedModel refined = add_variable(sub, grid, var);
    CHECK(refined.sub.grid_size() == 2 * sub.grid_size());
    CHECK(refined.sub.is_active(var));
    int pos = refined.sub.position(var);
    for (int rep = 0; rep < 25; ++rep) {
      Eigen::VectorXd xr = oracle::random_point(rng, refined.sub.dim());
      Eigen::VectorXd x(sub.dim());
      int k = 0;
      for (int j = 0; j < refined.sub.dim(); ++j) {
        if (j != pos) x[k++] = xr[j];
      }
      CHECK(eval_spline(refined.sub, refined.coeffs, xr) ==
            Catch::Approx(eval_spline(sub, grid, x)).margin(1e-12));
    }
  }
}
