#include <slqheat/time_noise.hpp>

#include <slqheat/errors.hpp>
#include <slqheat/parallel.hpp>

#include <cmath>
#include <string>

namespace slqheat {

TimeGrid build_grid(double T, int N) {
  if (!(T > 0.0) || N < 1) {
    throw InvalidArgument("build_grid: need T > 0 and N >= 1");
  }
  TimeGrid grid;
  grid.T = T;
  grid.N = N;
  grid.tau = T / N;
  if (grid.tau > 1.0) {
    throw InvalidArgument("build_grid: tau = " + std::to_string(grid.tau) +
                          " exceeds 1");
  }
  grid.t.resize(N + 1);
  for (int n = 0; n <= N; ++n) grid.t[n] = T * static_cast<double>(n) / N;
  grid.t.front() = 0.0;
  grid.t.back() = T;
  return grid;
}

namespace rng {

std::uint64_t mix(std::uint64_t seed, std::uint64_t counter) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (counter + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  z ^= z >> 31;
  // Second scrambling round hardens low-entropy (seed, counter) pairs.
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

double uniform01(std::uint64_t seed, std::uint64_t counter) {
  const std::uint64_t z = mix(seed, counter);
  // 53 significant bits, offset half an ulp so 0 and 1 are never returned.
  return (z >> 11) * (1.0 / 9007199254740992.0) +
         (1.0 / 18014398509481984.0);
}

double inverse_normal_cdf(double u) {
  if (!(u > 0.0 && u < 1.0)) {
    throw InvalidArgument("inverse_normal_cdf: u must lie in (0, 1)");
  }
  // Acklam's rational approximation in three regimes.
  static const double a[6] = {-3.969683028665376e+01, 2.209460984245205e+02,
                              -2.759285104469687e+02, 1.383577518672690e+02,
                              -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[5] = {-5.447609879822406e+01, 1.615858368580409e+02,
                              -1.556989798598866e+02, 6.680131188771972e+01,
                              -1.328068155288572e+01};
  static const double c[6] = {-7.784894002430293e-03, -3.223964580411365e-01,
                              -2.400758277161838e+00, -2.549732539343734e+00,
                              4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[4] = {7.784695709041462e-03, 3.224671290700398e-01,
                              2.445134137142996e+00, 3.754408661907416e+00};
  const double plow = 0.02425;
  double x;
  if (u < plow) {
    const double q = std::sqrt(-2.0 * std::log(u));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (u <= 1.0 - plow) {
    const double q = u - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) *
        q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log(1.0 - u));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q +
          c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  // One Halley step against the exact CDF brings the error to ~1e-15.
  static const double inv_sqrt2 = 0.7071067811865475244;
  static const double sqrt_2pi = 2.5066282746310005024;
  const double err = 0.5 * std::erfc(-x * inv_sqrt2) - u;
  const double step = err * sqrt_2pi * std::exp(0.5 * x * x);
  return x - step / (1.0 + 0.5 * x * step);
}

double normal(std::uint64_t seed, std::uint64_t counter) {
  return inverse_normal_cdf(uniform01(seed, counter));
}

}  // namespace rng

NoiseEnsemble sample_ensemble(const TimeGrid& grid, int n_paths,
                              std::uint64_t seed) {
  if (n_paths < 1) {
    throw InvalidArgument("sample_ensemble: need at least one path");
  }
  NoiseEnsemble e;
  e.grid = grid;
  e.n_paths = n_paths;
  e.master_seed = seed;
  e.increments.resize(n_paths, grid.N);
  const double s = std::sqrt(grid.tau);
  const std::uint64_t n_steps = static_cast<std::uint64_t>(grid.N);
  parallel_for(n_paths, [&](int p) {
    for (int n = 0; n < grid.N; ++n) {
      const std::uint64_t counter = static_cast<std::uint64_t>(p) * n_steps +
                                    static_cast<std::uint64_t>(n);
      e.increments(p, n) = s * rng::normal(seed, counter);
    }
  });
  return e;
}

namespace {

NoiseEnsemble coarsen_once(const NoiseEnsemble& e, int factor) {
  NoiseEnsemble c;
  c.grid = build_grid(e.grid.T, e.grid.N / factor);
  c.n_paths = e.n_paths;
  c.master_seed = e.master_seed;
  c.increments.resize(e.n_paths, c.grid.N);
  for (int p = 0; p < e.n_paths; ++p) {
    for (int n = 0; n < c.grid.N; ++n) {
      double s = 0.0;
      for (int j = 0; j < factor; ++j) s += e.increments(p, n * factor + j);
      c.increments(p, n) = s;
    }
  }
  return c;
}

}  // namespace

NoiseEnsemble coarsen(const NoiseEnsemble& ensemble, int factor) {
  if (factor < 1 || ensemble.grid.N % factor != 0) {
    throw InvalidArgument("coarsen: factor must divide the number of steps");
  }
  if (factor == 1) return ensemble;
  // Halve repeatedly while possible so dyadic factors compose bitwise.
  NoiseEnsemble current = ensemble;
  int remaining = factor;
  while (remaining % 2 == 0) {
    current = coarsen_once(current, 2);
    remaining /= 2;
  }
  if (remaining > 1) current = coarsen_once(current, remaining);
  return current;
}

Mat BernoulliTree::increments() const {
  Mat inc(n_paths, grid.N);
  for (int p = 0; p < n_paths; ++p) {
    for (int n = 0; n < grid.N; ++n) inc(p, n) = dW(p, n);
  }
  return inc;
}

BernoulliTree enumerate_tree(const TimeGrid& grid) {
  if (grid.N > 12) {
    throw ResourceLimit("enumerate_tree: exhaustive trees are capped at 12 "
                        "steps (4096 paths)");
  }
  BernoulliTree tree;
  tree.grid = grid;
  tree.n_paths = 1 << grid.N;
  tree.step = std::sqrt(grid.tau);
  return tree;
}

}  // namespace slqheat
