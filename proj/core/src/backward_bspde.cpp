#include <slqheat/backward_bspde.hpp>

#include <slqheat/errors.hpp>
#include <slqheat/parallel.hpp>

#include <Eigen/Cholesky>

#include <cmath>
#include <string>

namespace slqheat {

namespace {

// Pads a chaos value with zero loadings up to `n_loadings` columns.
ChaosValue pad_loadings(const ChaosValue& v, int n_loadings) {
  if (v.n_loadings() > n_loadings) {
    throw InvalidArgument("terminal value loads on " +
                          std::to_string(v.n_loadings()) +
                          " increments, expected at most " +
                          std::to_string(n_loadings));
  }
  ChaosValue out;
  out.mean = v.mean;
  out.load = Mat::Zero(v.mean.size(), n_loadings);
  if (v.n_loadings() > 0) out.load.leftCols(v.n_loadings()) = v.load;
  return out;
}

void check_dim(const FemOperators& ops, int dim, const char* what) {
  if (dim != ops.n_dof) {
    throw InvalidArgument(std::string(what) + " has dimension " +
                          std::to_string(dim) + ", expected " +
                          std::to_string(ops.n_dof));
  }
}

}  // namespace

BackwardStep step_backward_chaos(const FemOperators& ops, int n,
                                 const ChaosValue& Y_next,
                                 const ChaosValue* f_n, double tau) {
  check_dim(ops, static_cast<int>(Y_next.mean.size()), "incoming value");
  if (Y_next.n_loadings() > n + 1) {
    throw InvalidArgument("incoming value loads on " +
                          std::to_string(Y_next.n_loadings()) +
                          " increments at step " + std::to_string(n));
  }
  BackwardStep out;
  out.Z = (Y_next.n_loadings() > n) ? Vec(Y_next.load.col(n))
                                    : Vec(Vec::Zero(ops.n_dof));

  // Conditional expectation given F_n keeps loadings on increments 1..n.
  Vec mean_rhs = Y_next.mean;
  if (f_n != nullptr) {
    check_dim(ops, static_cast<int>(f_n->mean.size()), "driver");
    mean_rhs -= tau * f_n->mean;
  }
  out.Y.mean = ops.solve_shifted(ops.mass.apply(mean_rhs));
  out.Y.load = Mat::Zero(ops.n_dof, n);
  const int kept = std::min(n, Y_next.n_loadings());
  for (int j = 0; j < kept; ++j) {
    Vec rhs = Y_next.load.col(j);
    if (f_n != nullptr && j < f_n->n_loadings()) rhs -= tau * f_n->load.col(j);
    out.Y.load.col(j) = ops.solve_shifted(ops.mass.apply(rhs));
  }
  return out;
}

BackwardChaos solve_backward_chaos(const FemOperators& ops,
                                   const TimeGrid& grid,
                                   const ChaosValue& terminal,
                                   const ChaosProcess* driver) {
  const int N = grid.N;
  BackwardChaos out;
  out.Y = zero_chaos(grid, ops.n_dof);
  out.Z.assign(N, Vec::Zero(ops.n_dof));

  ChaosValue padded = pad_loadings(terminal, N);
  out.Y.mean[N] = padded.mean;
  out.Y.load[N] = padded.load;

  for (int n = N - 1; n >= 0; --n) {
    ChaosValue next;
    next.mean = out.Y.mean[n + 1];
    next.load = out.Y.load[n + 1];
    const ChaosValue f = (driver != nullptr) ? driver->at(n) : ChaosValue{};
    const ChaosValue* f_ptr = (driver != nullptr) ? &f : nullptr;
    BackwardStep step = step_backward_chaos(ops, n, next, f_ptr, grid.tau);
    out.Y.mean[n] = step.Y.mean;
    out.Y.load[n] = step.Y.load;
    out.Z[n] = step.Z;
  }
  return out;
}

BackwardChaos solve_backward_chaos_adjoint(const FemOperators& ops,
                                           const TimeGrid& grid,
                                           const ChaosValue& terminal,
                                           const ChaosProcess& driver) {
  const int N = grid.N;
  const double tau = grid.tau;
  BackwardChaos out;
  out.Y = zero_chaos(grid, ops.n_dof);
  out.Z.assign(N, Vec::Zero(ops.n_dof));

  ChaosValue padded = pad_loadings(terminal, N);
  out.Y.mean[N] = padded.mean;
  out.Y.load[N] = padded.load;

  for (int n = N - 1; n >= 0; --n) {
    // Driver enters at the incoming level, inside the conditional
    // expectation: Y_n = A0 E[Y_{n+1} + tau g_{n+1} | F_n].
    out.Z[n] = out.Y.load[n + 1].col(n);
    Vec mean_rhs = out.Y.mean[n + 1] + tau * driver.mean[n + 1];
    out.Y.mean[n] = ops.solve_shifted(ops.mass.apply(mean_rhs));
    out.Y.load[n] = Mat::Zero(ops.n_dof, n);
    const int g_cols = static_cast<int>(driver.load[n + 1].cols());
    for (int j = 0; j < n; ++j) {
      Vec rhs = out.Y.load[n + 1].col(j);
      if (j < g_cols) rhs += tau * driver.load[n + 1].col(j);
      out.Y.load[n].col(j) = ops.solve_shifted(ops.mass.apply(rhs));
    }
  }
  return out;
}

namespace {

enum class DriverPlacement { kNone, kOutgoing, kIncoming };

BackwardPaths solve_tree_impl(const FemOperators& ops,
                              const BernoulliTree& tree, const Mat& terminal,
                              const PathProcess* driver,
                              DriverPlacement placement) {
  const int N = tree.grid.N;
  const int P = tree.n_paths;
  const double tau = tree.grid.tau;
  const double sqrt_tau = std::sqrt(tau);
  check_dim(ops, static_cast<int>(terminal.cols()), "terminal value");
  if (static_cast<int>(terminal.rows()) != P) {
    throw InvalidArgument("terminal value has " +
                          std::to_string(terminal.rows()) + " rows for " +
                          std::to_string(P) + " tree paths");
  }

  BackwardPaths out;
  out.Y = zero_paths(tree.grid, P, ops.n_dof, N + 1);
  out.Z = zero_paths(tree.grid, P, ops.n_dof, N);
  out.Y.values[N] = terminal;

  for (int n = N - 1; n >= 0; --n) {
    const Mat& next = out.Y.values[n + 1];
    Mat& here = out.Y.values[n];
    Mat& z_here = out.Z.values[n];
    const int atom = tree.atom_size(n);  // paths per F_n-atom
    const int half = atom / 2;
    const int n_atoms = P / atom;
    for (int a = 0; a < n_atoms; ++a) {
      const int lo = a * atom;
      // dW_{n+1} is -step on the first half of the atom, +step on the second.
      Vec sum_minus = Vec::Zero(ops.n_dof);
      Vec sum_plus = Vec::Zero(ops.n_dof);
      for (int p = lo; p < lo + half; ++p) sum_minus += next.row(p);
      for (int p = lo + half; p < lo + atom; ++p) sum_plus += next.row(p);
      Vec cond = (sum_minus + sum_plus) / atom;
      Vec z = (sum_plus - sum_minus) / (atom * sqrt_tau);
      if (placement == DriverPlacement::kIncoming) {
        Vec g_sum = Vec::Zero(ops.n_dof);
        for (int p = lo; p < lo + atom; ++p)
          g_sum += driver->values[n + 1].row(p);
        cond += (tau / atom) * g_sum;
      }
      for (int p = lo; p < lo + atom; ++p) {
        Vec rhs = cond;
        if (placement == DriverPlacement::kOutgoing)
          rhs -= tau * driver->values[n].row(p).transpose();
        here.row(p) = ops.solve_shifted(ops.mass.apply(rhs));
        z_here.row(p) = z;
      }
    }
  }
  return out;
}

}  // namespace

BackwardPaths solve_backward_tree(const FemOperators& ops,
                                  const BernoulliTree& tree,
                                  const Mat& terminal,
                                  const PathProcess* driver) {
  return solve_tree_impl(ops, tree, terminal, driver,
                         driver != nullptr ? DriverPlacement::kOutgoing
                                           : DriverPlacement::kNone);
}

BackwardPaths solve_backward_tree_adjoint(const FemOperators& ops,
                                          const BernoulliTree& tree,
                                          const Mat& terminal,
                                          const PathProcess& driver) {
  return solve_tree_impl(ops, tree, terminal, &driver,
                         DriverPlacement::kIncoming);
}

int basis_dimension(const BasisSpec& basis, int state_dim) {
  if (basis.degree != 1 && basis.degree != 2) {
    throw InvalidArgument("basis degree must be 1 or 2, got " +
                          std::to_string(basis.degree));
  }
  int m = 1 + state_dim;
  if (basis.degree == 2) m += state_dim * (state_dim + 1) / 2;
  return m;
}

namespace {

// Fills one design-matrix row with basis functions of the state vector x.
void fill_basis_row(Mat& phi, int row, const Eigen::RowVectorXd& x,
                    int degree) {
  const int d = static_cast<int>(x.size());
  phi(row, 0) = 1.0;
  for (int i = 0; i < d; ++i) phi(row, 1 + i) = x(i);
  if (degree == 2) {
    int c = 1 + d;
    for (int i = 0; i < d; ++i)
      for (int j = i; j < d; ++j) phi(row, c++) = x(i) * x(j);
  }
}

}  // namespace

BackwardPaths solve_backward_regression(const FemOperators& ops,
                                        const TimeGrid& grid,
                                        const Mat& increments,
                                        const Mat& terminal,
                                        const PathProcess* driver,
                                        const PathProcess& states,
                                        const BasisSpec& basis) {
  const int N = grid.N;
  const int P = static_cast<int>(increments.rows());
  const double tau = grid.tau;
  check_dim(ops, static_cast<int>(terminal.cols()), "terminal value");
  if (static_cast<int>(terminal.rows()) != P ||
      static_cast<int>(increments.cols()) != N) {
    throw InvalidArgument("terminal/increment shapes do not match the grid");
  }
  if (static_cast<int>(states.values.size()) < N) {
    throw InvalidArgument("state process must cover steps 0.." +
                          std::to_string(N - 1));
  }
  const int state_dim = static_cast<int>(states.values[0].cols());
  const int m = basis_dimension(basis, state_dim);
  if (P < 10 * m) {
    throw InvalidArgument("regression needs at least " + std::to_string(10 * m) +
                          " paths for a basis of dimension " +
                          std::to_string(m) + ", got " + std::to_string(P));
  }

  BackwardPaths out;
  out.Y = zero_paths(grid, P, ops.n_dof, N + 1);
  out.Z = zero_paths(grid, P, ops.n_dof, N);
  out.Y.values[N] = terminal;

  Mat phi(P, m);
  for (int n = N - 1; n >= 0; --n) {
    const Mat& next = out.Y.values[n + 1];
    Mat cond(P, ops.n_dof);
    Mat z_pred(P, ops.n_dof);
    // Z target: realized Y_{n+1} dW_{n+1} / tau, projected onto the basis.
    Mat z_target = next.array().colwise() * (increments.col(n).array() / tau);

    if (n == 0) {
      // The information field at t_0 is trivial.
      cond = Mat::Ones(P, 1) * (next.colwise().mean());
      z_pred = Mat::Ones(P, 1) * (z_target.colwise().mean());
    } else {
      for (int p = 0; p < P; ++p)
        fill_basis_row(phi, p, states.values[n].row(p), basis.degree);
      Mat normal = phi.transpose() * phi;
      Mat rhs(m, 2 * ops.n_dof);
      rhs.leftCols(ops.n_dof) = phi.transpose() * next;
      rhs.rightCols(ops.n_dof) = phi.transpose() * z_target;

      Eigen::LLT<Mat> llt(normal);
      // Rank deficiency can slip past the factorization as a tiny positive
      // pivot; gate on the smallest pivot relative to the average diagonal.
      bool full_rank = llt.info() == Eigen::Success;
      if (full_rank) {
        const double dmin = llt.matrixLLT().diagonal().minCoeff();
        full_rank = dmin * dmin > 1e-12 * (normal.trace() / m);
      }
      Mat beta;
      if (full_rank) {
        beta = llt.solve(rhs);
      } else {
        const double ridge = 1e-10 * normal.trace();
        normal.diagonal().array() += ridge;
        beta = Eigen::LLT<Mat>(normal).solve(rhs);
        out.regularized.push_back(n);
      }
      cond = phi * beta.leftCols(ops.n_dof);
      z_pred = phi * beta.rightCols(ops.n_dof);
    }

    Mat& here = out.Y.values[n];
    parallel_for(P, [&](int p) {
      Vec rhs_p = cond.row(p);
      if (driver != nullptr)
        rhs_p -= tau * driver->values[n].row(p).transpose();
      here.row(p) = ops.solve_shifted(ops.mass.apply(rhs_p));
    });
    out.Z.values[n] = z_pred;
  }
  return out;
}

}  // namespace slqheat
