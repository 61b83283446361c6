#include <slqheat/gradient_descent.hpp>

#include <slqheat/errors.hpp>

#include <cmath>
#include <string>

namespace slqheat {

double kappa_bound(double alpha, double T) { return 1.0 + alpha * T + T * T; }

GdStep gd_step(const ControlProblem& problem, const ChaosProcess& U,
               double kappa) {
  if (kappa < 1.0) {
    throw InvalidArgument("step-size parameter must be >= 1, got " +
                          std::to_string(kappa));
  }
  GdStep out;
  out.eval = cost_and_gradient(problem, U);
  out.U_next = axpy_chaos(U, -1.0 / kappa, out.eval.gradient);
  return out;
}

GdReport run_gd(const ControlProblem& problem, const GdConfig& config,
                const OptimalChaos* reference) {
  problem.validate();
  const FemOperators& ops = *problem.ops;
  const L2Metric p0m = p0_metric(ops);
  const double tau = problem.grid.tau;

  GdReport report;
  report.kappa = (config.kappa > 0.0)
                     ? config.kappa
                     : kappa_bound(problem.alpha, problem.grid.T);
  ChaosProcess U = (config.U0.mean.empty())
                       ? zero_chaos(problem.grid, ops.mesh.n_cells)
                       : config.U0;

  auto dist_sq_to_reference = [&](const ChaosProcess& control) {
    double sum = 0.0;
    for (int n = 0; n < problem.grid.N; ++n) {
      const ChaosValue diff = chaos_sub(control.at(n), reference->U.at(n));
      sum += tau * second_moment(diff, tau, p0m);
    }
    return sum;
  };

  for (int l = 0; l <= config.max_iters; ++l) {
    GdStep step = gd_step(problem, U, report.kappa);
    GdIterate it;
    it.cost = step.eval.cost;
    it.grad_norm = std::sqrt(uht_norm_sq(step.eval.gradient, p0m));
    if (reference != nullptr) it.dist_sq = dist_sq_to_reference(U);
    report.iterates.push_back(it);

    if (config.grad_tol > 0.0 && it.grad_norm <= config.grad_tol) {
      report.converged = true;
      break;
    }
    if (l == config.max_iters) break;
    U = std::move(step.U_next);
  }
  report.U = std::move(U);
  return report;
}

}  // namespace slqheat
