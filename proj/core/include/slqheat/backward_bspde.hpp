#pragma once
// Time-implicit fully discrete backward stochastic heat equation
//
//   Y_n = A0 ( E[Y_{n+1} | F_n] - tau * f(t_n) ),
//   Z_n = (1/tau) E[Y_{n+1} dW_{n+1} | F_n],          n = N-1 .. 0,
//
// plus the adjoint-form variant whose driver sits at the incoming time level
// inside the conditional expectation,
//
//   Y_n = A0 E[Y_{n+1} + tau * g(t_{n+1}) | F_n],
//
// which is the form the optimality system and the duality identities use.
// Three conditional-expectation backends: exact chaos-affine (loading
// truncation), exhaustive tree (block averages), and least-squares Monte
// Carlo regression on polynomial functions of a state process.

#include <slqheat/chaos.hpp>
#include <slqheat/forward_spde.hpp>
#include <slqheat/mesh_fem.hpp>
#include <slqheat/time_noise.hpp>
#include <slqheat/types.hpp>

#include <vector>

namespace slqheat {

// Chaos-affine solution: with first-order terminal/driver data the
// martingale integrand Z is deterministic per step (the loading of Y_{n+1}
// on its newest increment).
struct BackwardChaos {
  ChaosProcess Y;
  std::vector<Vec> Z;  // N entries
};

// One exact step of the standalone scheme; `f_n` may be null (zero driver).
// Y_next must not load on increments beyond n + 1.
struct BackwardStep {
  ChaosValue Y;
  Vec Z;
};
BackwardStep step_backward_chaos(const FemOperators& ops, int n,
                                 const ChaosValue& Y_next,
                                 const ChaosValue* f_n, double tau);

// Full sweeps. The terminal value must load on exactly N increments (or
// fewer; missing trailing loadings are treated as zero). The driver process,
// when present, is read at t_n (standalone) or t_{n+1} (adjoint form).
BackwardChaos solve_backward_chaos(const FemOperators& ops,
                                   const TimeGrid& grid,
                                   const ChaosValue& terminal,
                                   const ChaosProcess* driver);
BackwardChaos solve_backward_chaos_adjoint(const FemOperators& ops,
                                           const TimeGrid& grid,
                                           const ChaosValue& terminal,
                                           const ChaosProcess& driver);

// Pathwise solution; `regularized` marks regression steps that needed a
// ridge fallback (always empty for the tree backend).
struct BackwardPaths {
  PathProcess Y;
  PathProcess Z;
  std::vector<int> regularized;
};

// Exact solution under the tree measure: conditional expectations are
// block averages over the contiguous F_n-atoms of the path index.
BackwardPaths solve_backward_tree(const FemOperators& ops,
                                  const BernoulliTree& tree,
                                  const Mat& terminal,
                                  const PathProcess* driver);
BackwardPaths solve_backward_tree_adjoint(const FemOperators& ops,
                                          const BernoulliTree& tree,
                                          const Mat& terminal,
                                          const PathProcess& driver);

// Least-squares Monte Carlo backend for the standalone scheme: at each step
// the conditional expectation is the empirical L2 projection onto polynomial
// functions (degree <= 2) of the state's nodal values at t_n. At t_0 the
// information field is trivial and the plain ensemble average is used.
struct BasisSpec {
  int degree = 1;  // 1: {1, x_i}; 2: adds {x_i x_j, i <= j}
};

BackwardPaths solve_backward_regression(const FemOperators& ops,
                                        const TimeGrid& grid,
                                        const Mat& increments,
                                        const Mat& terminal,
                                        const PathProcess* driver,
                                        const PathProcess& states,
                                        const BasisSpec& basis);

int basis_dimension(const BasisSpec& basis, int state_dim);

}  // namespace slqheat
