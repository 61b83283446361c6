#pragma once
// Gradient descent on the control: U^{l+1} = U^l - (1/kappa)(U^l - P0(Y^l)),
// where Y^l is the adjoint state of U^l. With kappa at least the operator
// norm of the cost Hessian, the squared distance to the optimizer contracts
// at least geometrically with ratio 1 - 1/kappa per iteration, and the cost
// gap after l iterations is at most 2 kappa ||U^0 - U*||^2 / l.

#include <slqheat/chaos.hpp>
#include <slqheat/optimal_control.hpp>

#include <vector>

namespace slqheat {

// Certified upper bound 1 + alpha T + T^2 for the Hessian norm; any
// kappa >= this bound satisfies the step-size rule.
double kappa_bound(double alpha, double T);

struct GdConfig {
  double kappa = 0.0;        // 0: use kappa_bound(alpha, T)
  int max_iters = 200;
  double grad_tol = 0.0;     // stop when the gradient norm drops below this
  ChaosProcess U0;           // empty: start from the zero control
};

struct GdIterate {
  double cost = 0.0;
  double grad_norm = 0.0;  // ||U - P0(Y)|| in the control norm
  double dist_sq = -1.0;   // ||U - U*||^2 when a reference is given
};

struct GdReport {
  std::vector<GdIterate> iterates;  // entry l describes U^l
  ChaosProcess U;                   // final control
  double kappa = 0.0;
  bool converged = false;           // grad_tol reached before max_iters
};

// One iteration from U; exposes the pieces for callers that track extras.
struct GdStep {
  ChaosProcess U_next;
  CostAndGradient eval;  // evaluated at the incoming U
};

GdStep gd_step(const ControlProblem& problem, const ChaosProcess& U,
               double kappa);

// Full run; `reference` (the exact closed-loop control), when present,
// fills the per-iteration distance column.
GdReport run_gd(const ControlProblem& problem, const GdConfig& config,
                const OptimalChaos* reference);

}  // namespace slqheat
