#pragma once
// Mean-plus-loadings representation of discrete-time random fields that are
// affine in the Wiener increments:
//
//   V(t_n) = mean_n + sum_{j=1..n} load_n[:, j-1] * dW_j.
//
// The class is closed under every linear scheme in this library, so
// conditional expectations (drop the loadings on future increments), second
// moments, and inner products are all exact:
//
//   E||V(t_n)||^2 = ||mean_n||^2 + tau * sum_j ||load_n[:, j-1]||^2.
//
// Values can be re-expressed on a refined increment basis (each coarse
// increment is the sum of `stride` fine ones), which couples refinement
// levels through a common Brownian path without any Monte Carlo sampling.

#include <slqheat/mesh_fem.hpp>
#include <slqheat/time_noise.hpp>
#include <slqheat/types.hpp>

#include <vector>

namespace slqheat {

// Inner product of coefficient vectors matching the L2 pairing of the field:
// mass-weighted for P1 nodal fields, cell-width-weighted for P0 fields.
struct L2Metric {
  const FemOperators* ops = nullptr;
  bool piecewise_constant = false;

  double inner(const Vec& u, const Vec& v) const;
  double sq(const Vec& v) const { return inner(v, v); }
};

L2Metric p1_metric(const FemOperators& ops);
L2Metric p0_metric(const FemOperators& ops);

// A random field at one time point: loadings on increments 1..m of some grid.
struct ChaosValue {
  Vec mean;
  Mat load;  // dim x m

  int n_loadings() const { return static_cast<int>(load.cols()); }
};

// A process adapted to its grid: the value at t_n loads on increments 1..n.
struct ChaosProcess {
  TimeGrid grid;
  int dim = 0;
  std::vector<Vec> mean;  // N + 1 entries
  std::vector<Mat> load;  // N + 1 entries; load[n] is dim x n

  ChaosValue at(int n) const { return ChaosValue{mean[n], load[n]}; }
};

ChaosProcess zero_chaos(const TimeGrid& grid, int dim);
ChaosProcess deterministic_chaos(const TimeGrid& grid,
                                 const std::vector<Vec>& values);

// Re-express a value on the basis refined by `stride`: the loading on a
// coarse increment is replicated onto each of its fine sub-increments.
ChaosValue refine_basis(const ChaosValue& value, int stride);

ChaosValue chaos_sub(const ChaosValue& a, const ChaosValue& b);

// Exact moments; basis_tau is the increment variance of the loading basis.
double second_moment(const ChaosValue& v, double basis_tau,
                     const L2Metric& metric);
double cross_moment(const ChaosValue& a, const ChaosValue& b, double basis_tau,
                    const L2Metric& metric);

// E||a - b||^2 where the two values may live on nested increment bases
// (a_stride / b_stride expand each to a common fine basis first).
double mean_sq_diff(const ChaosValue& a, int a_stride, const ChaosValue& b,
                    int b_stride, double fine_tau, const L2Metric& metric);

// Pathwise evaluation: mean + sum of loadings against realized increments.
Vec evaluate_on_path(const ChaosValue& v, const Mat& increments, int path);

// Exact E<a(t), b(t)> accumulated as tau * sum over n = 0..N-1 (the discrete
// control-space pairing); both processes must share grid and dimension.
double uht_inner(const ChaosProcess& a, const ChaosProcess& b,
                 const L2Metric& metric);
double uht_norm_sq(const ChaosProcess& a, const L2Metric& metric);

// Loading-wise linear combination r = x + c * y of whole processes.
ChaosProcess axpy_chaos(const ChaosProcess& x, double c,
                        const ChaosProcess& y);

}  // namespace slqheat
