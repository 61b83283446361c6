#pragma once
// Discrete linear-quadratic optimality system for the controlled stochastic
// heat equation. The cost over piecewise-constant admissible controls U is
//
//   J(U) = (tau/2) sum_{n=1..N}   E || X_n - Xt_n ||^2_{L2}
//        + (tau/2) sum_{n=0..N-1} E || U_n ||^2_{L2}
//        + (alpha/2)              E || X_N - Xt_N ||^2_{L2},
//
// with X the forward scheme driven by U and Xt a deterministic target. The
// optimal pair satisfies the coupled forward-backward system with the
// pointwise condition U_n = P0-projection of Y_n; it is computed exactly by
// a deterministic Riccati recursion and an affine feedback ansatz
// Y_n = -P_n X_n + eta_n (verified a posteriori by residual checks and a
// brute-force quadratic minimizer on small trees).

#include <slqheat/backward_bspde.hpp>
#include <slqheat/chaos.hpp>
#include <slqheat/forward_spde.hpp>
#include <slqheat/mesh_fem.hpp>
#include <slqheat/time_noise.hpp>
#include <slqheat/types.hpp>

#include <vector>

namespace slqheat {

struct ControlProblem {
  const FemOperators* ops = nullptr;
  TimeGrid grid;
  double alpha = 1.0;
  Vec X0;                   // P1 coefficients of the initial state
  std::vector<Vec> sigma;   // N entries (empty vectors allowed: no noise)
  std::vector<Vec> xtilde;  // N + 1 entries; P1 coefficients of the target

  void validate() const;
};

// Same operators and grid, but X0 = 0, sigma = 0, xtilde = 0; the cost of
// this problem is the exact second-order term of the original cost.
ControlProblem homogeneous_problem(const ControlProblem& problem);

// Backward Riccati recursion in nodal coordinates: with B the composition
// of the P0 projection and its lift back to P1, and A0 the one-step
// resolvent,
//
//   P_N = alpha I,                 eta_N = alpha Xt_N,
//   Q_n = A0 (P_{n+1} + tau I) A0,
//   P_n = (I + tau Q_n B)^{-1} Q_n,
//   eta_n = (I + tau Q_n B)^{-1} A0 (eta_{n+1} + tau Xt_{n+1}).
//
// M P_n is symmetric positive semidefinite at every step.
struct RiccatiSolution {
  std::vector<Mat> P;    // N + 1 entries
  std::vector<Vec> eta;  // N + 1 entries
};

RiccatiSolution solve_riccati(const ControlProblem& problem);

// Exact closed-loop solution under the feedback U_n = P0(-P_n X_n + eta_n):
// state, adjoint Y_n = -P_n X_n + eta_n, control, and the deterministic
// martingale integrand Z_n = -P_{n+1} A0 sigma_n.
struct OptimalChaos {
  ChaosProcess X;  // P1-valued
  ChaosProcess Y;  // P1-valued
  ChaosProcess U;  // P0-valued
  std::vector<Vec> Z;
};

OptimalChaos closed_loop_chaos(const ControlProblem& problem,
                               const RiccatiSolution& riccati);

// Same feedback rolled out pathwise over an explicit increment table.
struct OptimalPaths {
  PathProcess X;
  PathProcess Y;
  PathProcess U;
  std::vector<Vec> Z;
};

OptimalPaths closed_loop_paths(const ControlProblem& problem,
                               const RiccatiSolution& riccati,
                               const Mat& increments);

// Exact cost of a chaos-affine control.
double evaluate_cost_chaos(const ControlProblem& problem,
                           const ChaosProcess& U);

// Ensemble estimate of the cost of a pathwise control (exact when the
// increment table enumerates a tree, where paths are equally weighted).
struct McEstimate {
  double mean = 0.0;
  double std_err = 0.0;
};

McEstimate evaluate_cost_paths(const ControlProblem& problem,
                               const PathProcess& U, const Mat& increments);

// Adjoint sweep for a given state trajectory: backward scheme in adjoint
// form with driver -(X(t_{n+1}) - Xt_{n+1}) inside the conditional
// expectation and terminal -alpha (X_N - Xt_N).
BackwardChaos adjoint_sweep_chaos(const ControlProblem& problem,
                                  const ChaosProcess& X);

// Cost, and the cost gradient G_n = U_n - P0(Y_n) in the control space,
// from one forward and one backward sweep.
struct CostAndGradient {
  double cost = 0.0;
  ChaosProcess gradient;  // P0-valued
  ChaosProcess X;
  BackwardChaos adjoint;
};

CostAndGradient cost_and_gradient(const ControlProblem& problem,
                                  const ChaosProcess& U);

// Control-space norm of the pointwise optimality defect U - P0(Y); zero (to
// rounding) for the closed-loop solution, and equal to the gradient norm of
// the cost at U when Y is the adjoint state of U.
double optimality_residual(const ControlProblem& problem,
                           const ChaosProcess& U, const ChaosProcess& Y);

// Entrywise residuals of the three optimality relations, evaluated
// independently at every tree node with exact (block-average) conditional
// expectations: the forward step equation, the backward step equation, and
// the pointwise feedback condition. Each field is the max over all nodes.
struct TreeResiduals {
  double forward = 0.0;
  double backward = 0.0;
  double feedback = 0.0;

  double max() const;
};

TreeResiduals tree_residuals(const ControlProblem& problem,
                             const BernoulliTree& tree,
                             const OptimalPaths& solution);

// Direct quadratic minimization over all adapted piecewise-constant
// controls on a small tree: one coefficient block of size n_cells per
// F_n-atom. The Hessian and gradient of the cost are recovered exactly
// from cost evaluations (the cost is a quadratic polynomial); the linear
// system is solved densely.
struct TreeMinimizer {
  Vec coefficients;  // stacked per step, per atom
  PathProcess U;     // unpacked to paths
  double cost = 0.0;
  int dimension = 0;
};

TreeMinimizer tree_quadratic_minimizer(const ControlProblem& problem,
                                       const BernoulliTree& tree);

// tau * sum_n (weighted path average of ||a_n - b_n||^2 in the P0 metric);
// the discrete control-space distance between pathwise controls.
double control_dist_sq_paths(const ControlProblem& problem,
                             const PathProcess& a, const PathProcess& b);

}  // namespace slqheat
