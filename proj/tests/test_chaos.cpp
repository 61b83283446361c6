#include <doctest.h>

#include <slqheat/chaos.hpp>
#include <slqheat/errors.hpp>
#include <slqheat/mesh_fem.hpp>
#include <slqheat/time_noise.hpp>

#include "support/checks.hpp"

#include <cmath>

using namespace slqheat;

TEST_CASE("zero and deterministic processes") {
  const auto grid = build_grid(1.0, 4);
  const auto z = zero_chaos(grid, 3);
  REQUIRE(z.mean.size() == 5);
  REQUIRE(z.load.size() == 5);
  for (int n = 0; n <= 4; ++n) {
    CHECK(z.mean[n].size() == 3);
    CHECK(z.mean[n].cwiseAbs().maxCoeff() == 0.0);
    CHECK(z.load[n].rows() == 3);
    CHECK(z.load[n].cols() == n);
  }

  std::vector<Vec> vals(5);
  for (int n = 0; n <= 4; ++n) vals[n] = checks::random_vec(3, 0x11, n);
  const auto d = deterministic_chaos(grid, vals);
  for (int n = 0; n <= 4; ++n) {
    CHECK((d.mean[n] - vals[n]).cwiseAbs().maxCoeff() == 0.0);
    CHECK(d.load[n].cols() == n);
    if (n > 0) CHECK(d.load[n].cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("second moment closed form") {
  const auto ops = assemble(build_mesh(1.0, 2), 0.5);
  const auto metric = p1_metric(ops);

  ChaosValue v;
  v.mean = Vec::Constant(1, 3.0);
  v.load = Mat(1, 2);
  v.load << 1.0, 2.0;
  // ||m||^2_M + tau (||l1||^2_M + ||l2||^2_M) = 3 + 0.5 (1/3 + 4/3) = 23/6.
  CHECK(second_moment(v, 0.5, metric) ==
        doctest::Approx(23.0 / 6.0).epsilon(1e-14));

  // cross_moment is the associated symmetric bilinear form.
  ChaosValue w;
  w.mean = Vec::Constant(1, -1.0);
  w.load = Mat(1, 2);
  w.load << 0.5, 0.0;
  const double vw = cross_moment(v, w, 0.5, metric);
  CHECK(vw == doctest::Approx(cross_moment(w, v, 0.5, metric)).epsilon(1e-14));
  // <v,w> = (1/3)(3)(-1) + 0.5 (1/3)(1)(0.5) = -1 + 1/12.
  CHECK(vw == doctest::Approx(-1.0 + 1.0 / 12.0).epsilon(1e-13));
  // Polarization: ||v + w||^2 = ||v||^2 + 2 <v,w> + ||w||^2.
  ChaosValue s;
  s.mean = v.mean + w.mean;
  s.load = v.load + w.load;
  CHECK(second_moment(s, 0.5, metric) ==
        doctest::Approx(second_moment(v, 0.5, metric) + 2.0 * vw +
                        second_moment(w, 0.5, metric))
            .epsilon(1e-13));
}

TEST_CASE("basis refinement preserves the distribution") {
  const auto ops = assemble(build_mesh(1.0, 4), 0.25);
  const auto metric = p1_metric(ops);
  ChaosValue v;
  v.mean = checks::random_vec(3, 0x21, 0);
  v.load = checks::random_mat(3, 4, 0x21, 1);

  const ChaosValue fine = refine_basis(v, 4);
  CHECK(fine.load.cols() == 16);
  // Each coarse loading is replicated across its four sub-increments.
  for (int j = 0; j < 4; ++j) {
    for (int k = 0; k < 4; ++k) {
      CHECK((fine.load.col(4 * j + k) - v.load.col(j)).cwiseAbs().maxCoeff() ==
            0.0);
    }
  }
  // Second moments agree when the basis step shrinks accordingly.
  CHECK(second_moment(fine, 0.25 / 4.0, metric) ==
        doctest::Approx(second_moment(v, 0.25, metric)).epsilon(1e-13));

  // Stride one is the identity.
  const ChaosValue same = refine_basis(v, 1);
  CHECK((same.load - v.load).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("subtraction pads mismatched loading widths") {
  ChaosValue a;
  a.mean = Vec::Constant(2, 1.0);
  a.load = Mat::Ones(2, 3);
  ChaosValue b;
  b.mean = Vec::Constant(2, 0.25);
  b.load = Mat::Ones(2, 1);

  const ChaosValue d = chaos_sub(a, b);
  CHECK(d.mean[0] == doctest::Approx(0.75));
  REQUIRE(d.load.cols() == 3);
  CHECK(d.load(0, 0) == doctest::Approx(0.0));
  CHECK(d.load(0, 1) == doctest::Approx(1.0));
  CHECK(d.load(0, 2) == doctest::Approx(1.0));
}

TEST_CASE("pathwise evaluation") {
  ChaosValue v;
  v.mean = Vec::Constant(1, 2.0);
  v.load = Mat(1, 2);
  v.load << 3.0, -1.0;
  Mat inc(2, 3);
  inc << 0.5, 0.25, 9.0,  //
      -0.5, 0.5, 9.0;
  CHECK(evaluate_on_path(v, inc, 0)[0] ==
        doctest::Approx(2.0 + 1.5 - 0.25).epsilon(1e-15));
  CHECK(evaluate_on_path(v, inc, 1)[0] ==
        doctest::Approx(2.0 - 1.5 - 0.5).epsilon(1e-15));

  Mat short_inc(1, 1);
  short_inc << 1.0;
  CHECK_THROWS_AS(evaluate_on_path(v, short_inc, 0), InvalidArgument);
}

TEST_CASE("mean-square difference across strides") {
  const auto ops = assemble(build_mesh(1.0, 4), 0.5);
  const auto metric = p1_metric(ops);
  ChaosValue coarse;
  coarse.mean = checks::random_vec(3, 0x31, 0);
  coarse.load = checks::random_mat(3, 2, 0x31, 1);

  // Refining one side to match the other gives a zero difference.
  const ChaosValue fine = refine_basis(coarse, 2);
  CHECK(mean_sq_diff(coarse, 2, fine, 1, 0.25, metric) ==
        doctest::Approx(0.0));

  // Against zero, the difference is the second moment in the fine basis.
  ChaosValue zero;
  zero.mean = Vec::Zero(3);
  zero.load = Mat::Zero(3, 4);
  CHECK(mean_sq_diff(coarse, 2, zero, 1, 0.25, metric) ==
        doctest::Approx(second_moment(coarse, 0.5, metric)).epsilon(1e-13));
}

TEST_CASE("control-space norms and the axpy update") {
  const auto grid = build_grid(1.0, 3);
  const auto ops = assemble(build_mesh(1.0, 4), grid.tau);
  const auto p0m = p0_metric(ops);

  const ChaosProcess a = checks::random_chaos(grid, 4, 0x41);
  const ChaosProcess b = checks::random_chaos(grid, 4, 0x42);

  // ||a||^2 = tau sum_n E||a_n||^2 over n = 0..N-1.
  double expect = 0.0;
  for (int n = 0; n < 3; ++n) {
    expect += grid.tau * second_moment(a.at(n), grid.tau, p0m);
  }
  CHECK(uht_norm_sq(a, p0m) == doctest::Approx(expect).epsilon(1e-13));

  // Inner product polarizes the norm.
  const ChaosProcess sum = axpy_chaos(a, 1.0, b);
  CHECK(uht_norm_sq(sum, p0m) ==
        doctest::Approx(uht_norm_sq(a, p0m) + 2.0 * uht_inner(a, b, p0m) +
                        uht_norm_sq(b, p0m))
            .epsilon(1e-12));

  // The update widens zero-width loadings instead of truncating them: the
  // descent step from a deterministic start keeps the stochastic part.
  const ChaosProcess det = zero_chaos(grid, 4);
  const ChaosProcess step = axpy_chaos(det, -0.5, b);
  for (int n = 0; n <= 3; ++n) {
    CHECK(step.load[n].cols() == n);
    CHECK(checks::max_abs(step.load[n] + 0.5 * b.load[n]) <= 1e-15);
    CHECK(checks::max_abs(step.mean[n] + 0.5 * b.mean[n]) <= 1e-15);
  }
}
