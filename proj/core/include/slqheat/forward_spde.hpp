#pragma once
// Fully discrete forward stochastic heat equation, one implicit-Euler step:
//
//   X_{n+1} = A0 ( X_n + tau * lift_p0(U_n) + sigma_n * dW_{n+1} ),
//
// with A0 the resolvent, U_n a piecewise-constant control sampled at the left
// endpoint, and sigma_n the P1 projection of the (deterministic) noise
// amplitude at the left endpoint. Solvers exist in sample-path and
// chaos-affine representations; both are exact realizations of the same
// linear recursion, so they agree pathwise to rounding.

#include <slqheat/chaos.hpp>
#include <slqheat/mesh_fem.hpp>
#include <slqheat/time_noise.hpp>
#include <slqheat/types.hpp>

#include <functional>
#include <vector>

namespace slqheat {

// Monte Carlo representation of a discrete process: values[n] holds one row
// of coefficients per path. Values at t_n are computed from increments
// 1..n only, so adaptedness is structural.
struct PathProcess {
  TimeGrid grid;
  int n_paths = 0;
  int dim = 0;
  std::vector<Mat> values;  // per step: n_paths x dim

  Vec value(int p, int n) const { return values[n].row(p).transpose(); }
};

PathProcess zero_paths(const TimeGrid& grid, int n_paths, int dim,
                       int n_steps_stored);

struct ForwardData {
  const FemOperators* ops = nullptr;
  TimeGrid grid;
  Vec X0;                  // P1 coefficients of the initial state
  std::vector<Vec> sigma;  // N entries; P1 coefficients at left endpoints

  void validate() const;
};

// One step; U may be empty (no control), sigma empty (no noise term).
Vec step_forward(const FemOperators& ops, const Vec& X, const Vec& U,
                 const Vec& sigma, double dW);

// Per-path feedback evaluated as U_n = feedback(n, X_n).
using Feedback = std::function<Vec(int n, const Vec& X)>;

// Pathwise solvers over an explicit increment table (n_paths x N), which can
// come from a NoiseEnsemble or a BernoulliTree. Controls: none,
// deterministic per step, a pathwise process, or state feedback.
PathProcess solve_forward_paths(const ForwardData& data, const Mat& increments);
PathProcess solve_forward_paths(const ForwardData& data, const Mat& increments,
                                const std::vector<Vec>& control);
PathProcess solve_forward_paths(const ForwardData& data, const Mat& increments,
                                const PathProcess& control);
PathProcess solve_forward_paths_feedback(const ForwardData& data,
                                         const Mat& increments,
                                         const Feedback& feedback,
                                         PathProcess* control_out);

// Chaos-affine solvers: mean and loadings evolve through the same linear
// map; the loading on dW_{n+1} gains the term A0 sigma_n at step n + 1.
ChaosProcess solve_forward_chaos(const ForwardData& data);
ChaosProcess solve_forward_chaos(const ForwardData& data,
                                 const std::vector<Vec>& control);
ChaosProcess solve_forward_chaos(const ForwardData& data,
                                 const ChaosProcess& control);

}  // namespace slqheat
