#include <slqheat/chaos.hpp>

#include <slqheat/errors.hpp>

namespace slqheat {

double L2Metric::inner(const Vec& u, const Vec& v) const {
  if (ops == nullptr) throw InvalidState("L2Metric: no operators attached");
  if (piecewise_constant) return inner_l2_p0(ops->mesh, u, v);
  return inner_l2_p1(*ops, u, v);
}

L2Metric p1_metric(const FemOperators& ops) { return L2Metric{&ops, false}; }
L2Metric p0_metric(const FemOperators& ops) { return L2Metric{&ops, true}; }

ChaosProcess zero_chaos(const TimeGrid& grid, int dim) {
  ChaosProcess p;
  p.grid = grid;
  p.dim = dim;
  p.mean.assign(grid.N + 1, Vec::Zero(dim));
  p.load.resize(grid.N + 1);
  for (int n = 0; n <= grid.N; ++n) p.load[n] = Mat::Zero(dim, n);
  return p;
}

ChaosProcess deterministic_chaos(const TimeGrid& grid,
                                 const std::vector<Vec>& values) {
  if (static_cast<int>(values.size()) != grid.N + 1) {
    throw InvalidArgument("deterministic_chaos: need N + 1 values");
  }
  ChaosProcess p = zero_chaos(grid, static_cast<int>(values.front().size()));
  p.mean = values;
  return p;
}

ChaosValue refine_basis(const ChaosValue& value, int stride) {
  if (stride < 1) throw InvalidArgument("refine_basis: stride must be >= 1");
  if (stride == 1) return value;
  ChaosValue r;
  r.mean = value.mean;
  const int m = value.n_loadings();
  r.load.resize(value.mean.size(), m * stride);
  for (int j = 0; j < m; ++j) {
    for (int s = 0; s < stride; ++s) {
      r.load.col(j * stride + s) = value.load.col(j);
    }
  }
  return r;
}

ChaosValue chaos_sub(const ChaosValue& a, const ChaosValue& b) {
  if (a.mean.size() != b.mean.size()) {
    throw InvalidArgument("chaos_sub: dimension mismatch");
  }
  const int m = std::max(a.n_loadings(), b.n_loadings());
  ChaosValue r;
  r.mean = a.mean - b.mean;
  r.load = Mat::Zero(a.mean.size(), m);
  r.load.leftCols(a.n_loadings()) = a.load;
  r.load.leftCols(b.n_loadings()) -= b.load;
  return r;
}

double second_moment(const ChaosValue& v, double basis_tau,
                     const L2Metric& metric) {
  double s = metric.sq(v.mean);
  for (int j = 0; j < v.n_loadings(); ++j) {
    s += basis_tau * metric.sq(v.load.col(j));
  }
  return s;
}

double cross_moment(const ChaosValue& a, const ChaosValue& b, double basis_tau,
                    const L2Metric& metric) {
  double s = metric.inner(a.mean, b.mean);
  const int m = std::min(a.n_loadings(), b.n_loadings());
  for (int j = 0; j < m; ++j) {
    s += basis_tau * metric.inner(a.load.col(j), b.load.col(j));
  }
  return s;
}

double mean_sq_diff(const ChaosValue& a, int a_stride, const ChaosValue& b,
                    int b_stride, double fine_tau, const L2Metric& metric) {
  const ChaosValue fa = refine_basis(a, a_stride);
  const ChaosValue fb = refine_basis(b, b_stride);
  return second_moment(chaos_sub(fa, fb), fine_tau, metric);
}

Vec evaluate_on_path(const ChaosValue& v, const Mat& increments, int path) {
  if (v.n_loadings() > increments.cols()) {
    throw InvalidArgument("evaluate_on_path: not enough increments");
  }
  Vec r = v.mean;
  for (int j = 0; j < v.n_loadings(); ++j) {
    r += v.load.col(j) * increments(path, j);
  }
  return r;
}

double uht_inner(const ChaosProcess& a, const ChaosProcess& b,
                 const L2Metric& metric) {
  if (a.grid.N != b.grid.N || a.dim != b.dim) {
    throw InvalidArgument("uht_inner: processes are not compatible");
  }
  double s = 0.0;
  for (int n = 0; n < a.grid.N; ++n) {
    s += cross_moment(a.at(n), b.at(n), a.grid.tau, metric);
  }
  return a.grid.tau * s;
}

double uht_norm_sq(const ChaosProcess& a, const L2Metric& metric) {
  double s = 0.0;
  for (int n = 0; n < a.grid.N; ++n) {
    s += second_moment(a.at(n), a.grid.tau, metric);
  }
  return a.grid.tau * s;
}

ChaosProcess axpy_chaos(const ChaosProcess& x, double c,
                        const ChaosProcess& y) {
  if (x.grid.N != y.grid.N || x.dim != y.dim) {
    throw InvalidArgument("axpy_chaos: processes are not compatible");
  }
  ChaosProcess r = x;
  for (int n = 0; n <= x.grid.N; ++n) {
    r.mean[n] += c * y.mean[n];
    const int mx = static_cast<int>(x.load[n].cols());
    const int my = static_cast<int>(y.load[n].cols());
    if (my > mx) {
      Mat wide = Mat::Zero(x.dim, my);
      wide.leftCols(mx) = r.load[n];
      r.load[n] = std::move(wide);
    }
    r.load[n].leftCols(my) += c * y.load[n].leftCols(my);
  }
  return r;
}

}  // namespace slqheat
