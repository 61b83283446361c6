#include <slqheat/optimal_control.hpp>

#include <slqheat/errors.hpp>
#include <slqheat/parallel.hpp>

#include <Eigen/Cholesky>
#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <string>

namespace slqheat {

void ControlProblem::validate() const {
  if (ops == nullptr) throw InvalidArgument("problem has no operators");
  const double tau_gap = std::abs(ops->tau - grid.tau);
  if (tau_gap > 1e-12 * std::max(1.0, grid.tau)) {
    throw InvalidState("operators assembled for step " +
                       std::to_string(ops->tau) + ", grid has " +
                       std::to_string(grid.tau));
  }
  if (alpha < 0.0) throw InvalidArgument("terminal weight must be >= 0");
  if (static_cast<int>(X0.size()) != ops->n_dof) {
    throw InvalidArgument("initial state dimension mismatch");
  }
  if (static_cast<int>(sigma.size()) != grid.N) {
    throw InvalidArgument("need one noise coefficient per step");
  }
  for (const Vec& s : sigma) {
    if (s.size() != 0 && static_cast<int>(s.size()) != ops->n_dof) {
      throw InvalidArgument("noise coefficient dimension mismatch");
    }
  }
  if (static_cast<int>(xtilde.size()) != grid.N + 1) {
    throw InvalidArgument("need one target state per grid point");
  }
  for (const Vec& x : xtilde) {
    if (static_cast<int>(x.size()) != ops->n_dof) {
      throw InvalidArgument("target state dimension mismatch");
    }
  }
}

ControlProblem homogeneous_problem(const ControlProblem& problem) {
  ControlProblem out = problem;
  out.X0 = Vec::Zero(problem.ops->n_dof);
  for (Vec& s : out.sigma) s = Vec();
  for (Vec& x : out.xtilde) x = Vec::Zero(problem.ops->n_dof);
  return out;
}

RiccatiSolution solve_riccati(const ControlProblem& problem) {
  problem.validate();
  const FemOperators& ops = *problem.ops;
  const int N = problem.grid.N;
  const int d = ops.n_dof;
  const double tau = problem.grid.tau;
  const Mat A0 = resolvent_dense(ops);
  const Mat B = mixed_projection_dense(ops);
  const Mat I = Mat::Identity(d, d);

  RiccatiSolution out;
  out.P.assign(N + 1, Mat());
  out.eta.assign(N + 1, Vec());
  out.P[N] = problem.alpha * I;
  out.eta[N] = problem.alpha * problem.xtilde[N];

  for (int n = N - 1; n >= 0; --n) {
    const Mat Q = A0 * (out.P[n + 1] + tau * I) * A0;
    Eigen::PartialPivLU<Mat> gain(I + tau * Q * B);
    out.P[n] = gain.solve(Q);
    out.eta[n] = gain.solve(A0 * (out.eta[n + 1] + tau * problem.xtilde[n + 1]));
  }
  return out;
}

OptimalChaos closed_loop_chaos(const ControlProblem& problem,
                               const RiccatiSolution& riccati) {
  problem.validate();
  const FemOperators& ops = *problem.ops;
  const Mesh1D& mesh = ops.mesh;
  const int N = problem.grid.N;
  const int d = ops.n_dof;

  OptimalChaos out;
  out.X = zero_chaos(problem.grid, d);
  out.Y = zero_chaos(problem.grid, d);
  out.U = zero_chaos(problem.grid, mesh.n_cells);
  out.Z.assign(N, Vec::Zero(d));
  out.X.mean[0] = problem.X0;

  const Vec no_control;
  const Vec no_noise;
  for (int n = 0; n < N; ++n) {
    // Feedback at t_n, applied loading-wise (the feedback map is affine).
    out.Y.mean[n] = -(riccati.P[n] * out.X.mean[n]) + riccati.eta[n];
    out.Y.load[n] = -(riccati.P[n] * out.X.load[n]);
    out.U.mean[n] = project_p0(mesh, out.Y.mean[n]);
    out.U.load[n].resize(mesh.n_cells, n);
    for (int j = 0; j < n; ++j) {
      out.U.load[n].col(j) = project_p0(mesh, out.Y.load[n].col(j));
    }

    out.X.mean[n + 1] =
        step_forward(ops, out.X.mean[n], out.U.mean[n], no_noise, 0.0);
    Mat& next_load = out.X.load[n + 1];
    const Mat& here_load = out.X.load[n];
    const Mat& u_load = out.U.load[n];
    parallel_for(n, [&](int j) {
      next_load.col(j) =
          step_forward(ops, here_load.col(j), u_load.col(j), no_noise, 0.0);
    });
    if (problem.sigma[n].size() > 0) {
      next_load.col(n) = apply_resolvent(ops, problem.sigma[n]);
      out.Z[n] = -(riccati.P[n + 1] * next_load.col(n));
    } else {
      next_load.col(n).setZero();
    }
  }
  out.Y.mean[N] = -(riccati.P[N] * out.X.mean[N]) + riccati.eta[N];
  out.Y.load[N] = -(riccati.P[N] * out.X.load[N]);
  return out;
}

OptimalPaths closed_loop_paths(const ControlProblem& problem,
                               const RiccatiSolution& riccati,
                               const Mat& increments) {
  problem.validate();
  const FemOperators& ops = *problem.ops;
  const Mesh1D& mesh = ops.mesh;
  const int N = problem.grid.N;
  const int P = static_cast<int>(increments.rows());
  if (static_cast<int>(increments.cols()) != N) {
    throw InvalidArgument("increment table does not match the grid");
  }

  OptimalPaths out;
  out.X = zero_paths(problem.grid, P, ops.n_dof, N + 1);
  out.Y = zero_paths(problem.grid, P, ops.n_dof, N + 1);
  out.U = zero_paths(problem.grid, P, mesh.n_cells, N);
  out.Z.assign(N, Vec::Zero(ops.n_dof));
  for (int n = 0; n < N; ++n) {
    if (problem.sigma[n].size() > 0) {
      out.Z[n] = -(riccati.P[n + 1] * apply_resolvent(ops, problem.sigma[n]));
    }
  }

  parallel_for(P, [&](int p) {
    Vec x = problem.X0;
    out.X.values[0].row(p) = x;
    for (int n = 0; n < N; ++n) {
      const Vec y = -(riccati.P[n] * x) + riccati.eta[n];
      const Vec u = project_p0(mesh, y);
      out.Y.values[n].row(p) = y;
      out.U.values[n].row(p) = u;
      x = step_forward(ops, x, u, problem.sigma[n], increments(p, n));
      out.X.values[n + 1].row(p) = x;
    }
    out.Y.values[N].row(p) =
        (-(riccati.P[N] * x) + riccati.eta[N]).transpose();
  });
  return out;
}

namespace {

double state_cost_chaos(const ControlProblem& problem, const ChaosProcess& X) {
  const FemOperators& ops = *problem.ops;
  const L2Metric p1m = p1_metric(ops);
  const int N = problem.grid.N;
  const double tau = problem.grid.tau;
  double cost = 0.0;
  for (int n = 1; n <= N; ++n) {
    const ChaosValue dev{X.mean[n] - problem.xtilde[n], X.load[n]};
    const double weight = (tau / 2.0) + (n == N ? problem.alpha / 2.0 : 0.0);
    cost += weight * second_moment(dev, tau, p1m);
  }
  return cost;
}

}  // namespace

double evaluate_cost_chaos(const ControlProblem& problem,
                           const ChaosProcess& U) {
  problem.validate();
  const FemOperators& ops = *problem.ops;
  ForwardData data{&ops, problem.grid, problem.X0, problem.sigma};
  const ChaosProcess X = solve_forward_chaos(data, U);
  const L2Metric p0m = p0_metric(ops);
  const double tau = problem.grid.tau;
  double cost = state_cost_chaos(problem, X);
  for (int n = 0; n < problem.grid.N; ++n) {
    cost += (tau / 2.0) * second_moment(U.at(n), tau, p0m);
  }
  return cost;
}

McEstimate evaluate_cost_paths(const ControlProblem& problem,
                               const PathProcess& U, const Mat& increments) {
  problem.validate();
  const FemOperators& ops = *problem.ops;
  const Mesh1D& mesh = ops.mesh;
  const int N = problem.grid.N;
  const int P = static_cast<int>(increments.rows());
  const double tau = problem.grid.tau;
  ForwardData data{&ops, problem.grid, problem.X0, problem.sigma};
  const PathProcess X = solve_forward_paths(data, increments, U);

  Vec per_path = Vec::Zero(P);
  parallel_for(P, [&](int p) {
    double c = 0.0;
    for (int n = 1; n <= N; ++n) {
      const Vec dev = X.values[n].row(p).transpose() - problem.xtilde[n];
      const double sq = dev.dot(ops.mass.apply(dev));
      c += (tau / 2.0) * sq;
      if (n == N) c += (problem.alpha / 2.0) * sq;
    }
    for (int n = 0; n < N; ++n) {
      const Vec u = U.values[n].row(p);
      c += (tau / 2.0) * inner_l2_p0(mesh, u, u);
    }
    per_path(p) = c;
  });

  McEstimate est;
  est.mean = per_path.mean();
  if (P > 1) {
    const double var =
        (per_path.array() - est.mean).square().sum() / (P - 1.0);
    est.std_err = std::sqrt(var / P);
  }
  return est;
}

BackwardChaos adjoint_sweep_chaos(const ControlProblem& problem,
                                  const ChaosProcess& X) {
  problem.validate();
  const FemOperators& ops = *problem.ops;
  const int N = problem.grid.N;

  ChaosProcess g = zero_chaos(problem.grid, ops.n_dof);
  for (int n = 1; n <= N; ++n) {
    g.mean[n] = problem.xtilde[n] - X.mean[n];
    g.load[n] = -X.load[n];
  }
  ChaosValue terminal;
  terminal.mean = problem.alpha * (problem.xtilde[N] - X.mean[N]);
  terminal.load = -problem.alpha * X.load[N];
  return solve_backward_chaos_adjoint(ops, problem.grid, terminal, g);
}

CostAndGradient cost_and_gradient(const ControlProblem& problem,
                                  const ChaosProcess& U) {
  problem.validate();
  const FemOperators& ops = *problem.ops;
  const Mesh1D& mesh = ops.mesh;
  const L2Metric p0m = p0_metric(ops);
  const double tau = problem.grid.tau;

  CostAndGradient out;
  ForwardData data{&ops, problem.grid, problem.X0, problem.sigma};
  out.X = solve_forward_chaos(data, U);
  out.cost = state_cost_chaos(problem, out.X);
  for (int n = 0; n < problem.grid.N; ++n) {
    out.cost += (tau / 2.0) * second_moment(U.at(n), tau, p0m);
  }
  out.adjoint = adjoint_sweep_chaos(problem, out.X);

  out.gradient = zero_chaos(problem.grid, mesh.n_cells);
  const ChaosProcess& Y = out.adjoint.Y;
  for (int n = 0; n < problem.grid.N; ++n) {
    out.gradient.mean[n] = -project_p0(mesh, Y.mean[n]);
    if (U.mean[n].size() > 0) out.gradient.mean[n] += U.mean[n];
    const int width = std::max(static_cast<int>(U.load[n].cols()),
                               static_cast<int>(Y.load[n].cols()));
    out.gradient.load[n].resize(mesh.n_cells, width);
    for (int j = 0; j < width; ++j) {
      Vec col = Vec::Zero(mesh.n_cells);
      if (j < Y.load[n].cols()) col = -project_p0(mesh, Y.load[n].col(j));
      if (j < U.load[n].cols()) col += U.load[n].col(j);
      out.gradient.load[n].col(j) = col;
    }
  }
  return out;
}

double optimality_residual(const ControlProblem& problem,
                           const ChaosProcess& U, const ChaosProcess& Y) {
  const FemOperators& ops = *problem.ops;
  const Mesh1D& mesh = ops.mesh;
  const L2Metric p0m = p0_metric(ops);
  const double tau = problem.grid.tau;
  double sum = 0.0;
  for (int n = 0; n < problem.grid.N; ++n) {
    ChaosValue defect;
    defect.mean = -project_p0(mesh, Y.mean[n]);
    if (U.mean[n].size() > 0) defect.mean += U.mean[n];
    const int width = std::max(static_cast<int>(U.load[n].cols()),
                               static_cast<int>(Y.load[n].cols()));
    defect.load = Mat::Zero(mesh.n_cells, width);
    for (int j = 0; j < width; ++j) {
      if (j < Y.load[n].cols())
        defect.load.col(j) = -project_p0(mesh, Y.load[n].col(j));
      if (j < U.load[n].cols()) defect.load.col(j) += U.load[n].col(j);
    }
    sum += tau * second_moment(defect, tau, p0m);
  }
  return std::sqrt(sum);
}

double TreeResiduals::max() const {
  return std::max(forward, std::max(backward, feedback));
}

TreeResiduals tree_residuals(const ControlProblem& problem,
                             const BernoulliTree& tree,
                             const OptimalPaths& solution) {
  problem.validate();
  const FemOperators& ops = *problem.ops;
  const Mesh1D& mesh = ops.mesh;
  const int N = tree.grid.N;
  const int P = tree.n_paths;
  const double tau = tree.grid.tau;

  TreeResiduals res;
  for (int n = 0; n < N; ++n) {
    // Forward step relation, per path.
    for (int p = 0; p < P; ++p) {
      const Vec x = solution.X.values[n].row(p);
      const Vec u = solution.U.values[n].row(p);
      Vec rhs = ops.mass.apply(x) + tau * p0_load(mesh, u);
      if (problem.sigma[n].size() > 0) {
        rhs += tree.dW(p, n) * ops.mass.apply(problem.sigma[n]);
      }
      const Vec x_next = solution.X.values[n + 1].row(p);
      const Vec shifted =
          ops.mass.apply(x_next) + tau * ops.stiffness.apply(x_next);
      res.forward =
          std::max(res.forward, (shifted - rhs).cwiseAbs().maxCoeff());

      // Feedback relation, per path.
      const Vec y = solution.Y.values[n].row(p);
      res.feedback = std::max(
          res.feedback, (u - project_p0(mesh, y)).cwiseAbs().maxCoeff());
    }

    // Backward step relation with exact block-average conditional
    // expectations over the F_n-atoms.
    const int atom = tree.atom_size(n);
    const int n_atoms = P / atom;
    for (int a = 0; a < n_atoms; ++a) {
      const int lo = a * atom;
      Vec cond = Vec::Zero(ops.n_dof);
      for (int p = lo; p < lo + atom; ++p) {
        const Vec x_next = solution.X.values[n + 1].row(p);
        const Vec y_next = solution.Y.values[n + 1].row(p);
        cond += y_next - tau * (x_next - problem.xtilde[n + 1]);
      }
      cond /= atom;
      const Vec expected = ops.solve_shifted(ops.mass.apply(cond));
      for (int p = lo; p < lo + atom; ++p) {
        const Vec y = solution.Y.values[n].row(p);
        res.backward =
            std::max(res.backward, (y - expected).cwiseAbs().maxCoeff());
      }
    }
  }
  return res;
}

namespace {

// Unpacks a stacked coefficient vector (one n_cells block per F_n-atom,
// steps ordered outermost) into a pathwise control on the tree.
PathProcess unpack_tree_control(const BernoulliTree& tree, int n_cells,
                                const Vec& coeffs) {
  const int N = tree.grid.N;
  PathProcess U = zero_paths(tree.grid, tree.n_paths, n_cells, N);
  int offset = 0;
  for (int n = 0; n < N; ++n) {
    const int atom = tree.atom_size(n);
    const int n_atoms = tree.n_paths / atom;
    for (int a = 0; a < n_atoms; ++a) {
      const Vec block = coeffs.segment(offset, n_cells);
      for (int p = a * atom; p < (a + 1) * atom; ++p) {
        U.values[n].row(p) = block;
      }
      offset += n_cells;
    }
  }
  return U;
}

}  // namespace

TreeMinimizer tree_quadratic_minimizer(const ControlProblem& problem,
                                       const BernoulliTree& tree) {
  problem.validate();
  const int n_cells = problem.ops->mesh.n_cells;
  const int N = tree.grid.N;
  int dim = 0;
  for (int n = 0; n < N; ++n) dim += n_cells * (tree.n_paths / tree.atom_size(n));
  if (dim > 512) {
    throw ResourceLimit("adapted control space has dimension " +
                        std::to_string(dim) + "; the direct minimizer is "
                        "meant for small trees");
  }

  const Mat increments = tree.increments();
  auto cost_of = [&](const Vec& coeffs) {
    const PathProcess U = unpack_tree_control(tree, n_cells, coeffs);
    return evaluate_cost_paths(problem, U, increments).mean;
  };

  // The cost is a quadratic polynomial in the stacked coefficients, so its
  // Hessian and gradient are recovered exactly from cost evaluations.
  const double j0 = cost_of(Vec::Zero(dim));
  Vec unit_cost(dim);
  std::vector<Vec> units(dim);
  for (int i = 0; i < dim; ++i) {
    units[i] = Vec::Zero(dim);
    units[i](i) = 1.0;
    unit_cost(i) = cost_of(units[i]);
  }
  Mat H(dim, dim);
  for (int i = 0; i < dim; ++i) {
    H(i, i) = cost_of(2.0 * units[i]) - 2.0 * unit_cost(i) + j0;
    for (int j = i + 1; j < dim; ++j) {
      H(i, j) = H(j, i) =
          cost_of(units[i] + units[j]) - unit_cost(i) - unit_cost(j) + j0;
    }
  }
  Vec g(dim);
  for (int i = 0; i < dim; ++i) {
    g(i) = unit_cost(i) - 0.5 * H(i, i) - j0;
  }

  TreeMinimizer out;
  out.dimension = dim;
  Eigen::LDLT<Mat> ldlt(H);
  if (ldlt.info() != Eigen::Success) {
    throw InternalError("cost Hessian factorization failed");
  }
  out.coefficients = ldlt.solve(-g);
  out.U = unpack_tree_control(tree, n_cells, out.coefficients);
  out.cost = cost_of(out.coefficients);
  return out;
}

double control_dist_sq_paths(const ControlProblem& problem,
                             const PathProcess& a, const PathProcess& b) {
  const Mesh1D& mesh = problem.ops->mesh;
  const int N = problem.grid.N;
  const double tau = problem.grid.tau;
  const int P = static_cast<int>(a.values[0].rows());
  if (static_cast<int>(b.values[0].rows()) != P) {
    throw InvalidArgument("path counts differ");
  }
  double sum = 0.0;
  for (int n = 0; n < N; ++n) {
    double step = 0.0;
    for (int p = 0; p < P; ++p) {
      const Vec d = a.values[n].row(p) - b.values[n].row(p);
      step += inner_l2_p0(mesh, d, d);
    }
    sum += tau * step / P;
  }
  return sum;
}

}  // namespace slqheat
