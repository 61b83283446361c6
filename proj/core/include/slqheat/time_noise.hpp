#pragma once
// Uniform time grids, seeded Wiener-increment ensembles with a counter-based
// generator (reproducible independently of enumeration order and thread
// count), increment coarsening for common-random-number refinement studies,
// and exhaustive two-point (Bernoulli) trees whose increments match the first
// two Wiener moments exactly.

#include <slqheat/types.hpp>

#include <cstdint>
#include <vector>

namespace slqheat {

struct TimeGrid {
  double T = 0.0;
  int N = 0;
  double tau = 0.0;
  std::vector<double> t;  // t_n = n * tau, n = 0..N
};

// Uniform grid with tau = T/N; tau <= 1 is enforced.
TimeGrid build_grid(double T, int N);

struct NoiseEnsemble {
  TimeGrid grid;
  int n_paths = 0;
  std::uint64_t master_seed = 0;
  Mat increments;  // n_paths x N; entry (p, n) is the increment over step n

  double dW(int p, int n) const { return increments(p, n); }
};

// I.i.d. Normal(0, tau) increments; entry (p, n) is a pure function of
// (seed, p, n), so regeneration never depends on sampling order.
NoiseEnsemble sample_ensemble(const TimeGrid& grid, int n_paths,
                              std::uint64_t seed);

// Sums each run of `factor` consecutive increments per path: the same
// Brownian path evaluated on the grid with N/factor steps. Power-of-two
// factors reduce by repeated halving so that coarsen(coarsen(e,2),2) is
// bitwise identical to coarsen(e,4).
NoiseEnsemble coarsen(const NoiseEnsemble& ensemble, int factor);

// All 2^N sign sequences with increments of +-sqrt(tau), uniform weights.
// Paths sharing the first n increments form contiguous index runs of length
// 2^(N-n), which makes conditional expectations exact block averages.
struct BernoulliTree {
  TimeGrid grid;
  int n_paths = 0;   // 2^N
  double step = 0.0; // sqrt(tau)

  double dW(int p, int n) const {
    return ((p >> (grid.N - 1 - n)) & 1) ? step : -step;
  }
  int atom_size(int n) const { return n_paths >> n; }  // paths per F_{t_n} atom
  double weight() const { return 1.0 / n_paths; }
  Mat increments() const;  // materialized n_paths x N table
};

// Exhaustive tree; capped at N <= 12 (4096 paths).
BernoulliTree enumerate_tree(const TimeGrid& grid);

namespace rng {

// splitmix64-style mixing of (seed, counter); statistically solid for Monte
// Carlo use and fully deterministic per key.
std::uint64_t mix(std::uint64_t seed, std::uint64_t counter);

// Uniform draw strictly inside (0, 1).
double uniform01(std::uint64_t seed, std::uint64_t counter);

// Standard normal draw via the inverse CDF (rational approximation with one
// Halley refinement; absolute error around 1e-15).
double normal(std::uint64_t seed, std::uint64_t counter);

double inverse_normal_cdf(double u);

}  // namespace rng

}  // namespace slqheat
