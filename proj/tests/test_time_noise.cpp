#include <doctest.h>

#include <slqheat/errors.hpp>
#include <slqheat/time_noise.hpp>

#include "support/checks.hpp"

#include <cmath>

using namespace slqheat;

TEST_CASE("time grid") {
  const auto grid = build_grid(1.0, 4);
  CHECK(grid.tau == doctest::Approx(0.25).epsilon(1e-15));
  REQUIRE(grid.t.size() == 5);
  for (int n = 0; n <= 4; ++n) {
    CHECK(grid.t[n] == doctest::Approx(0.25 * n).epsilon(1e-15));
  }
  CHECK_THROWS_AS(build_grid(1.0, 0), InvalidArgument);
  CHECK_THROWS_AS(build_grid(0.0, 4), InvalidArgument);
}

TEST_CASE("ensemble sampling: shape, determinism, extension") {
  const auto grid = build_grid(1.0, 8);
  const auto e = sample_ensemble(grid, 100, 0x5EED);
  CHECK(e.increments.rows() == 100);
  CHECK(e.increments.cols() == 8);

  // Same seed is bitwise reproducible.
  const auto e2 = sample_ensemble(grid, 100, 0x5EED);
  CHECK((e.increments - e2.increments).cwiseAbs().maxCoeff() == 0.0);

  // Counter-based sampling: adding paths never disturbs the existing ones.
  const auto bigger = sample_ensemble(grid, 250, 0x5EED);
  CHECK((bigger.increments.topRows(100) - e.increments).cwiseAbs().maxCoeff() ==
        0.0);

  // Distinct seeds give distinct draws.
  const auto other = sample_ensemble(grid, 100, 0x5EEE);
  CHECK((other.increments - e.increments).cwiseAbs().maxCoeff() > 1e-8);

  CHECK_THROWS_AS(sample_ensemble(grid, 0, 1), InvalidArgument);
}

TEST_CASE("ensemble sampling: moments") {
  const auto grid = build_grid(1.0, 4);
  const int P = 20000;
  const auto e = sample_ensemble(grid, P, 0xABCD);
  const double tau = grid.tau;
  for (int n = 0; n < 4; ++n) {
    const double mean = e.increments.col(n).mean();
    const double var = e.increments.col(n).squaredNorm() / P - mean * mean;
    // 5-sigma bands for the empirical mean and variance.
    CHECK(std::abs(mean) <= 5.0 * std::sqrt(tau / P));
    CHECK(std::abs(var - tau) <= 5.0 * tau * std::sqrt(2.0 / P));
  }
  // Steps are independent: correlations vanish at the 5-sigma scale.
  for (int n = 0; n < 3; ++n) {
    const double cross =
        (e.increments.col(n).cwiseProduct(e.increments.col(n + 1))).mean();
    CHECK(std::abs(cross) <= 5.0 * tau / std::sqrt(static_cast<double>(P)));
  }
}

TEST_CASE("coarsening sums increments and composes bitwise") {
  const auto grid = build_grid(1.0, 16);
  const auto e = sample_ensemble(grid, 30, 0xFEED);

  const auto c2 = coarsen(e, 2);
  CHECK(c2.grid.N == 8);
  CHECK(c2.grid.tau == doctest::Approx(0.125).epsilon(1e-15));
  for (int p = 0; p < 30; ++p) {
    for (int m = 0; m < 8; ++m) {
      CHECK(c2.increments(p, m) ==
            e.increments(p, 2 * m) + e.increments(p, 2 * m + 1));
    }
  }

  // Dyadic factors compose bitwise (repeated halving inside).
  const auto c4a = coarsen(e, 4);
  const auto c4b = coarsen(coarsen(e, 2), 2);
  CHECK((c4a.increments - c4b.increments).cwiseAbs().maxCoeff() == 0.0);

  // Identity factor returns the ensemble unchanged.
  const auto c1 = coarsen(e, 1);
  CHECK((c1.increments - e.increments).cwiseAbs().maxCoeff() == 0.0);

  CHECK_THROWS_AS(coarsen(e, 3), InvalidArgument);
  CHECK_THROWS_AS(coarsen(e, 32), InvalidArgument);
}

TEST_CASE("exhaustive tree structure") {
  const auto grid = build_grid(1.0, 3);
  const auto tree = enumerate_tree(grid);
  CHECK(tree.n_paths == 8);
  CHECK(tree.step == doctest::Approx(std::sqrt(grid.tau)).epsilon(1e-15));
  CHECK(tree.weight() == doctest::Approx(0.125).epsilon(1e-15));
  CHECK(tree.atom_size(0) == 8);
  CHECK(tree.atom_size(1) == 4);
  CHECK(tree.atom_size(3) == 1);

  const Mat inc = tree.increments();
  REQUIRE(inc.rows() == 8);
  REQUIRE(inc.cols() == 3);

  const double s = tree.step;
  for (int n = 0; n < 3; ++n) {
    double sum = 0.0, sum_sq = 0.0;
    for (int p = 0; p < 8; ++p) {
      CHECK(std::abs(inc(p, n)) == doctest::Approx(s).epsilon(1e-15));
      CHECK(inc(p, n) == tree.dW(p, n));
      sum += inc(p, n);
      sum_sq += inc(p, n) * inc(p, n);
    }
    // The tree matches the Gaussian mean and variance exactly.
    CHECK(sum == 0.0);
    CHECK(sum_sq == doctest::Approx(8.0 * grid.tau).epsilon(1e-14));
  }
  // Pairwise products average to zero: increments are uncorrelated.
  for (int n = 0; n < 3; ++n) {
    for (int m = n + 1; m < 3; ++m) {
      double cross = 0.0;
      for (int p = 0; p < 8; ++p) cross += inc(p, n) * inc(p, m);
      CHECK(cross == 0.0);
    }
  }
  // Paths inside one F_n atom share their first n increments, and the two
  // halves of the atom split on the sign of increment n.
  for (int n = 0; n < 3; ++n) {
    const int atom = tree.atom_size(n);
    for (int a = 0; a < 8 / atom; ++a) {
      const int base = a * atom;
      for (int p = base; p < base + atom; ++p) {
        for (int m = 0; m < n; ++m) CHECK(inc(p, m) == inc(base, m));
      }
      for (int p = base; p < base + atom / 2; ++p) {
        CHECK(inc(p, n) == -s);
        CHECK(inc(p + atom / 2, n) == s);
      }
    }
  }

  CHECK_THROWS_AS(enumerate_tree(build_grid(1.0, 20)), ResourceLimit);
}

TEST_CASE("counter rng: determinism and basic statistics") {
  CHECK(rng::mix(1, 2) == rng::mix(1, 2));
  CHECK(rng::mix(1, 2) != rng::mix(1, 3));
  CHECK(rng::mix(1, 2) != rng::mix(2, 2));

  const int n = 20000;
  double sum = 0.0, sum_sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double u = rng::uniform01(0x5EED, i);
    CHECK(u > 0.0);
    CHECK(u < 1.0);
    const double z = rng::normal(0x5EED, i);
    sum += z;
    sum_sq += z * z;
  }
  CHECK(std::abs(sum / n) <= 5.0 / std::sqrt(static_cast<double>(n)));
  CHECK(std::abs(sum_sq / n - 1.0) <=
        5.0 * std::sqrt(2.0 / static_cast<double>(n)));
}

TEST_CASE("inverse normal cdf") {
  CHECK(rng::inverse_normal_cdf(0.5) == doctest::Approx(0.0));
  // Reference quantile to full double accuracy.
  CHECK(rng::inverse_normal_cdf(0.975) ==
        doctest::Approx(1.959963984540054).epsilon(1e-12));
  CHECK(rng::inverse_normal_cdf(0.025) ==
        doctest::Approx(-1.959963984540054).epsilon(1e-12));
  // Antisymmetry and monotonicity on a grid.
  double prev = -1e300;
  for (int i = 1; i < 200; ++i) {
    const double u = i / 200.0;
    const double q = rng::inverse_normal_cdf(u);
    CHECK(q == doctest::Approx(-rng::inverse_normal_cdf(1.0 - u))
                   .epsilon(1e-9)
                   .scale(1.0));
    CHECK(q > prev);
    prev = q;
  }
  CHECK_THROWS_AS(rng::inverse_normal_cdf(0.0), InvalidArgument);
  CHECK_THROWS_AS(rng::inverse_normal_cdf(1.0), InvalidArgument);
}
