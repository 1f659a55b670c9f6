#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "hatgp/gram.hpp"
#include "oracles.hpp"

using namespace hatgp;

TEST_CASE("1-D Gram matrix matches the closed-form overlap integrals", "[gram]") {
  // Two knots {0, 1}: both hats span the whole interval.
  TridiagonalGram g2 = gram_1d(Subdivision1D({0.0, 1.0}));
  CHECK(g2.diag[0] == Catch::Approx(1.0 / 3.0).margin(1e-15));
  CHECK(g2.diag[1] == Catch::Approx(1.0 / 3.0).margin(1e-15));
  CHECK(g2.off[0] == Catch::Approx(1.0 / 6.0).margin(1e-15));

  // Midpoint refinement {0, 1/2, 1}.
  TridiagonalGram g3 = gram_1d(Subdivision1D({0.0, 0.5, 1.0}));
  CHECK(g3.diag[0] == Catch::Approx(1.0 / 6.0).margin(1e-15));
  CHECK(g3.diag[1] == Catch::Approx(1.0 / 3.0).margin(1e-15));
  CHECK(g3.diag[2] == Catch::Approx(1.0 / 6.0).margin(1e-15));
  CHECK(g3.off[0] == Catch::Approx(1.0 / 12.0).margin(1e-15));
  CHECK(g3.off[1] == Catch::Approx(1.0 / 12.0).margin(1e-15));
}

TEST_CASE("1-D Gram entries agree with cell quadrature", "[gram]") {
  std::mt19937_64 rng(401);
  for (int trial = 0; trial < 20; ++trial) {
    Subdivision1D axis = oracle::random_axis(rng, 6);
    Subdivision sub(1, {0}, {axis});
    const int m = static_cast<int>(axis.size());
    Eigen::MatrixXd dense = gram_1d(axis).dense();
    for (int a = 0; a < m; ++a) {
      for (int b = 0; b < m; ++b) {
        const double integral = oracle::cell_quadrature(sub, [&](const Eigen::VectorXd& x) {
          return tensor_basis_eval(sub, {a}, x) * tensor_basis_eval(sub, {b}, x);
        });
        CHECK(dense(a, b) == Catch::Approx(integral).margin(1e-12));
      }
    }
  }
}

TEST_CASE("tensor Gram operator equals the Kronecker product on a small grid", "[gram]") {
  std::mt19937_64 rng(402);
  Subdivision sub(3, {0, 2},
                  {Subdivision1D({0.0, 0.3, 1.0}), Subdivision1D({0.0, 0.25, 0.7, 1.0})});
  GramOperator psi(sub);
  Eigen::MatrixXd a = gram_1d(sub.axis(0)).dense();
  Eigen::MatrixXd b = gram_1d(sub.axis(1)).dense();
  const int m0 = 3, m1 = 4;
  // Row-major layout with the last axis fastest: flat = l0 * m1 + l1.
  Eigen::MatrixXd dense(m0 * m1, m0 * m1);
  for (int i0 = 0; i0 < m0; ++i0)
    for (int i1 = 0; i1 < m1; ++i1)
      for (int j0 = 0; j0 < m0; ++j0)
        for (int j1 = 0; j1 < m1; ++j1)
          dense(i0 * m1 + i1, j0 * m1 + j1) = a(i0, j0) * b(i1, j1);

  std::normal_distribution<double> gauss;
  for (int trial = 0; trial < 5; ++trial) {
    Eigen::VectorXd v(m0 * m1);
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = gauss(rng);
    Eigen::VectorXd applied = psi.apply(v);
    CHECK((applied - dense * v).lpNorm<Eigen::Infinity>() < 1e-14);
  }
}

TEST_CASE("quadratic form equals the integrated squared spline", "[gram]") {
  std::mt19937_64 rng(403);
  for (int trial = 0; trial < 15; ++trial) {
    const int ambient = 3;
    const int dim = 1 + trial % 3;
    Subdivision sub = oracle::random_subdivision(rng, ambient, dim, 3);
    CoefficientGrid grid = oracle::random_grid(rng, sub);
    GramOperator psi(sub);
    const double form = psi.quadratic_form(grid.values());
    const double integral = oracle::cell_quadrature(sub, [&](const Eigen::VectorXd& x) {
      const double s = eval_spline(sub, grid, x);
      return s * s;
    });
    CHECK(form == Catch::Approx(integral).margin(1e-10 * std::max(1.0, integral)));
    CHECK(form >= 0.0);
  }
}

TEST_CASE("Gram inner product is symmetric and bilinear", "[gram]") {
  std::mt19937_64 rng(404);
  Subdivision sub = oracle::random_subdivision(rng, 3, 2, 3);
  GramOperator psi(sub);
  CoefficientGrid a = oracle::random_grid(rng, sub);
  CoefficientGrid b = oracle::random_grid(rng, sub);
  CoefficientGrid c = oracle::random_grid(rng, sub);
  const double ab = psi.inner(a.values(), b.values());
  const double ba = psi.inner(b.values(), a.values());
  CHECK(ab == Catch::Approx(ba).margin(1e-13));
  const double lin = psi.inner(a.values(), 2.0 * b.values() + c.values());
  CHECK(lin == Catch::Approx(2.0 * ab + psi.inner(a.values(), c.values())).margin(1e-12));
}

TEST_CASE("refine-then-subtract yields the exact L2 distance between models", "[gram]") {
  std::mt19937_64 rng(405);
  std::normal_distribution<double> gauss;
  for (int trial = 0; trial < 10; ++trial) {
    Subdivision sub = oracle::random_subdivision(rng, 3, 1 + trial % 2, 3);
    CoefficientGrid grid = oracle::random_grid(rng, sub);

    // Refine by knot insertion, perturb the refined coefficients, and check
    // beta^T Psi beta against the quadrature of the squared difference.
    const int variable = sub.active()[static_cast<std::size_t>(trial) % sub.active().size()];
    std::uniform_real_distribution<double> unit(0.15, 0.85);
    double t = unit(rng);
    while (sub.axis_of(variable).separation(t) < 0.05) t = unit(rng);
    RefinedModel refined = insert_knot(sub, grid, variable, t, 1e-9);

    CoefficientGrid other = oracle::random_grid(rng, refined.sub);
    Eigen::VectorXd beta = other.values() - refined.coeffs.values();
    const double form = GramOperator(refined.sub).quadratic_form(beta);
    const double integral =
        oracle::cell_quadrature(refined.sub, [&](const Eigen::VectorXd& x) {
          const double diff = eval_spline(refined.sub, other, x) - eval_spline(sub, grid, x);
          return diff * diff;
        });
    CHECK(form == Catch::Approx(integral).margin(1e-10 * std::max(1.0, integral)));
  }
}
