#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "hatgp/constraints.hpp"
#include "oracles.hpp"

using namespace hatgp;

namespace {

Eigen::MatrixXd dense_of(const ConstraintSet& cs, const Subdivision& sub) {
  return build_inequality(cs, sub).dense();
}

}  // namespace

TEST_CASE("boundedness rows stack lower block then upper block", "[constraints]") {
  Subdivision sub(1, {0}, {Subdivision1D({0.0, 0.5, 1.0})});
  InequalitySystem sys = build_inequality({Constraint::bounded(-1.0, 2.0)}, sub);
  REQUIRE(sys.row_count() == 6);
  Eigen::MatrixXd m = sys.dense();
  CHECK(m.topRows(3) == -Eigen::MatrixXd::Identity(3, 3));
  CHECK(m.bottomRows(3) == Eigen::MatrixXd::Identity(3, 3));
  Eigen::VectorXd v(6);
  v << 1.0, 1.0, 1.0, 2.0, 2.0, 2.0;
  CHECK(sys.bounds == v);

  // One-sided bounds emit only the finite side.
  InequalitySystem lower_only = build_inequality(
      {Constraint::bounded(0.0, std::numeric_limits<double>::infinity())}, sub);
  CHECK(lower_only.row_count() == 3);
  CHECK(lower_only.dense() == -Eigen::MatrixXd::Identity(3, 3));
}

TEST_CASE("monotonicity rows are adjacent differences", "[constraints]") {
  Subdivision sub(1, {0}, {Subdivision1D({0.0, 0.5, 1.0})});
  InequalitySystem sys = build_inequality({Constraint::monotone()}, sub);
  REQUIRE(sys.row_count() == 2);
  Eigen::MatrixXd expected(2, 3);
  expected << 1.0, -1.0, 0.0, 0.0, 1.0, -1.0;
  CHECK(sys.dense() == expected);
  CHECK(sys.bounds == Eigen::VectorXd::Zero(2));

  // Nondecreasing coefficients satisfy the rows, a dip violates them.
  Eigen::VectorXd up(3), dip(3);
  up << 0.0, 0.2, 0.9;
  dip << 0.0, 0.4, 0.3;
  CHECK(sys.violation(up) <= 0.0);
  CHECK(sys.violation(dip) == Catch::Approx(0.1));
}

TEST_CASE("monotonicity in 2-D covers every grid line", "[constraints]") {
  Subdivision sub(2, {0, 1},
                  {Subdivision1D({0.0, 0.3, 1.0}), Subdivision1D({0.0, 0.2, 0.6, 1.0})});
  InequalitySystem sys = build_inequality({Constraint::monotone()}, sub);
  CHECK(sys.row_count() == 2 * 4 + 3 * 3);  // (m1-1)*m2 + m1*(m2-1)

  // Restricting the mask to variable 1 keeps only its rows.
  InequalitySystem masked = build_inequality({Constraint::monotone({0})}, sub);
  CHECK(masked.row_count() == 2 * 4);
  // A mask naming an inactive variable contributes nothing.
  Subdivision partial(2, {1}, {Subdivision1D()});
  CHECK(build_inequality({Constraint::monotone({0})}, partial).row_count() == 0);
}

TEST_CASE("convexity rows encode nondecreasing slopes", "[constraints]") {
  // Equispaced interior knot: exactly the (-1, 2, -1) second difference.
  Subdivision sub(1, {0}, {Subdivision1D({0.0, 0.5, 1.0})});
  InequalitySystem sys = build_inequality({Constraint::convex()}, sub);
  REQUIRE(sys.row_count() == 1);
  Eigen::MatrixXd row = sys.dense();
  CHECK(row(0, 0) == Catch::Approx(-1.0));
  CHECK(row(0, 1) == Catch::Approx(2.0));
  CHECK(row(0, 2) == Catch::Approx(-1.0));
  CHECK(sys.bounds[0] == 0.0);

  // Non-equispaced knots: the rows must compare slopes, not raw differences.
  Subdivision skew(1, {0}, {Subdivision1D({0.0, 0.1, 1.0})});
  InequalitySystem ssys = build_inequality({Constraint::convex()}, skew);
  REQUIRE(ssys.row_count() == 1);
  Eigen::VectorXd convex_vals(3), kinked(3);
  convex_vals << 0.0, 0.01, 1.0;  // x^2 at the knots: convex
  kinked << 0.0, 0.5, 1.0;        // slope 5 then 5/9: concave kink
  CHECK(ssys.violation(convex_vals) <= 0.0);
  CHECK(ssys.violation(kinked) > 0.0);

  // Axes with only the boundary knots are linear and contribute no rows.
  Subdivision minimal(1, {0}, {Subdivision1D()});
  CHECK(build_inequality({Constraint::convex()}, minimal).row_count() == 0);
}

TEST_CASE("conjunctions stack rows in declaration order", "[constraints]") {
  Subdivision sub(1, {0}, {Subdivision1D({0.0, 0.5, 1.0})});
  ConstraintSet both{Constraint::bounded(0.0, 1.0), Constraint::monotone()};
  InequalitySystem sys = build_inequality(both, sub);
  CHECK(sys.row_count() == 6 + 2);
  CHECK(sys.dense().topRows(3) == -Eigen::MatrixXd::Identity(3, 3));

  Eigen::VectorXd good(3), out_of_bounds(3);
  good << 0.0, 0.5, 1.0;
  out_of_bounds << 0.0, 0.5, 1.2;
  CHECK(check_feasible_grid(both, sub, CoefficientGrid({3}, good)));
  CHECK_FALSE(check_feasible_grid(both, sub, CoefficientGrid({3}, out_of_bounds)));
}

TEST_CASE("interpolation matrix matches the tensor basis", "[constraints]") {
  std::mt19937_64 rng(41);
  for (int trial = 0; trial < 10; ++trial) {
    Subdivision sub = oracle::random_subdivision(rng, 3, 1 + trial % 3, 3);
    const int n = 6;
    Eigen::MatrixXd x(n, 3);
    for (int i = 0; i < n; ++i) x.row(i) = oracle::random_point(rng, 3).transpose();
    Eigen::MatrixXd phi = build_interpolation(sub, x);
    REQUIRE(phi.rows() == n);
    REQUIRE(phi.cols() == sub.grid_size());

    for (int i = 0; i < n; ++i) {
      CHECK(phi.row(i).sum() == Catch::Approx(1.0).margin(1e-12));  // partition of unity
      Eigen::VectorXd xa(sub.dim());
      for (int k = 0; k < sub.dim(); ++k) {
        xa[k] = x(i, sub.active()[static_cast<std::size_t>(k)]);
      }
      for_each_multi_index(sub.shape(), [&](const std::vector<int>& multi, Eigen::Index flat) {
        CHECK(phi(i, flat) == Catch::Approx(tensor_basis_eval(sub, multi, xa)).margin(1e-13));
      });
    }
  }

  // Data outside the unit cube or with the wrong width is a data error.
  Subdivision sub = Subdivision::initial(2, 0);
  Eigen::MatrixXd bad(1, 2);
  bad << 1.5, 0.2;
  CHECK_THROWS_AS(build_interpolation(sub, bad), DataError);
  Eigen::MatrixXd narrow(1, 1);
  narrow << 0.5;
  CHECK_THROWS_AS(build_interpolation(sub, narrow), DataError);
}
