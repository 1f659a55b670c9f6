#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <map>
#include <random>

#include "hatgp/basis.hpp"
#include "hatgp/multiaffine.hpp"
#include "oracles.hpp"

using namespace hatgp;

namespace {

// Corner data stored by multi-index over the domain's node sets.
struct CornerTable {
  const MultiaffineDomain* dom;
  std::map<std::vector<int>, double> values;

  double operator()(const std::vector<double>& corner) const {
    std::vector<int> idx(corner.size());
    for (std::size_t k = 0; k < corner.size(); ++k) {
      const auto& axis = dom->axis(static_cast<int>(k));
      auto it = std::find(axis.begin(), axis.end(), corner[k]);
      REQUIRE(it != axis.end());
      idx[k] = static_cast<int>(it - axis.begin());
    }
    return values.at(idx);
  }
};

}  // namespace

TEST_CASE("bilinear square interpolates its corner average", "[multiaffine]") {
  MultiaffineDomain dom({{0.0, 1.0}, {0.0, 1.0}});
  CornerTable f{&dom, {{{0, 0}, 0.0}, {{0, 1}, 1.0}, {{1, 0}, 2.0}, {{1, 1}, 5.0}}};
  Eigen::VectorXd mid(2);
  mid << 0.5, 0.5;
  CHECK(multiaffine_extend(dom, f, mid) == Catch::Approx(2.0));

  // Corner values reproduce exactly.
  Eigen::VectorXd corner(2);
  corner << 1.0, 1.0;
  CHECK(multiaffine_extend(dom, f, corner) == 5.0);
  corner << 0.0, 1.0;
  CHECK(multiaffine_extend(dom, f, corner) == 1.0);
}

TEST_CASE("weights are a convex combination", "[multiaffine]") {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 20; ++trial) {
    Subdivision sub = oracle::random_subdivision(rng, 3, 1 + trial % 3, 4);
    MultiaffineDomain dom = MultiaffineDomain::from_subdivision(sub);
    // Constant corner data extends to the same constant...
    auto one = [](const std::vector<double>&) { return 1.0; };
    // ...and arbitrary data stays inside the corner range.
    std::normal_distribution<double> gauss;
    std::map<std::vector<double>, double> cache;
    auto random_corner = [&](const std::vector<double>& c) {
      auto [it, fresh] = cache.try_emplace(c, 0.0);
      if (fresh) it->second = gauss(rng);
      return it->second;
    };
    for (int rep = 0; rep < 30; ++rep) {
      Eigen::VectorXd x = oracle::random_point(rng, sub.dim());
      CHECK(multiaffine_extend(dom, one, x) == Catch::Approx(1.0).margin(1e-15));
      double lo = 1e300, hi = -1e300, v = multiaffine_extend(dom, random_corner, x);
      for (const auto& [c, val] : cache) lo = std::min(lo, val), hi = std::max(hi, val);
      CHECK(v >= lo - 1e-12);
      CHECK(v <= hi + 1e-12);
    }
  }
}

TEST_CASE("projection equals the extension of knot restrictions", "[multiaffine]") {
  // The hat-basis projection of f and the multiaffine extension of f's values
  // on the knot grid are the same function.
  std::mt19937_64 rng(57);
  auto f = [](const Eigen::VectorXd& x) {
    double s = 0.0;
    for (int k = 0; k < x.size(); ++k) s += std::sin(1.7 * x[k] + 0.3 * k) + 0.25 * x[k] * x[k];
    return s + (x.size() > 1 ? 0.5 * x[0] * x[1] : 0.0);
  };
  for (int trial = 0; trial < 15; ++trial) {
    Subdivision sub = oracle::random_subdivision(rng, 3, 1 + trial % 3, 4);
    CoefficientGrid proj = project(sub, f);
    MultiaffineDomain dom = MultiaffineDomain::from_subdivision(sub);
    auto corner_f = [&](const std::vector<double>& c) {
      Eigen::VectorXd x(static_cast<Eigen::Index>(c.size()));
      for (std::size_t k = 0; k < c.size(); ++k) x[static_cast<Eigen::Index>(k)] = c[k];
      return f(x);
    };
    for (int rep = 0; rep < 40; ++rep) {
      Eigen::VectorXd x = oracle::random_point(rng, sub.dim());
      CHECK(eval_spline(sub, proj, x) ==
            Catch::Approx(multiaffine_extend(dom, corner_f, x)).margin(1e-12));
    }
  }
}

TEST_CASE("extension preserves monotone corner data", "[multiaffine]") {
  std::mt19937_64 rng(73);
  MultiaffineDomain dom({{0.0, 0.3, 0.7, 1.0}, {0.0, 0.5, 1.0}});
  // Monotone corner data: sums of per-axis nondecreasing sequences plus a
  // nonnegative product interaction.
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<double> g0{0.0}, g1{0.0};
    for (int i = 0; i < 3; ++i) g0.push_back(g0.back() + unif(rng));
    for (int i = 0; i < 2; ++i) g1.push_back(g1.back() + unif(rng));
    double cross = unif(rng);
    auto corner_f = [&](const std::vector<double>& c) {
      const auto& a0 = dom.axis(0);
      const auto& a1 = dom.axis(1);
      int i = static_cast<int>(std::find(a0.begin(), a0.end(), c[0]) - a0.begin());
      int j = static_cast<int>(std::find(a1.begin(), a1.end(), c[1]) - a1.begin());
      return g0[static_cast<std::size_t>(i)] + g1[static_cast<std::size_t>(j)] +
             cross * c[0] * c[1];
    };
    // Nondecreasing along both axes on a dense grid.
    const int n = 17;
    for (int i = 0; i + 1 < n; ++i) {
      for (int j = 0; j < n; ++j) {
        Eigen::VectorXd a(2), b(2), c(2);
        a << i / (n - 1.0), j / (n - 1.0);
        b << (i + 1) / (n - 1.0), j / (n - 1.0);
        c << j / (n - 1.0), (i + 1) / (n - 1.0);
        CHECK(multiaffine_extend(dom, corner_f, b) >=
              multiaffine_extend(dom, corner_f, a) - 1e-10);
        Eigen::VectorXd c0(2);
        c0 << j / (n - 1.0), i / (n - 1.0);
        CHECK(multiaffine_extend(dom, corner_f, c) >=
              multiaffine_extend(dom, corner_f, c0) - 1e-10);
      }
    }
  }
}

TEST_CASE("extension rejects malformed domains and points", "[multiaffine]") {
  CHECK_THROWS_AS(MultiaffineDomain({{0.0, 0.5}}), ConfigError);
  CHECK_THROWS_AS(MultiaffineDomain({{0.0, 0.5, 0.5, 1.0}}), ConfigError);
  MultiaffineDomain dom({{0.0, 1.0}});
  auto zero = [](const std::vector<double>&) { return 0.0; };
  Eigen::VectorXd bad(1);
  bad << 1.5;
  CHECK_THROWS_AS(multiaffine_extend(dom, zero, bad), ConfigError);
}
