#include <slqheat/forward_spde.hpp>

#include <slqheat/errors.hpp>
#include <slqheat/parallel.hpp>

#include <cmath>

namespace slqheat {

PathProcess zero_paths(const TimeGrid& grid, int n_paths, int dim,
                       int n_steps_stored) {
  PathProcess p;
  p.grid = grid;
  p.n_paths = n_paths;
  p.dim = dim;
  p.values.assign(n_steps_stored, Mat::Zero(n_paths, dim));
  return p;
}

void ForwardData::validate() const {
  if (ops == nullptr) throw InvalidArgument("forward solve: missing operators");
  if (std::abs(ops->tau - grid.tau) >
      1e-12 * std::max(1.0, std::abs(grid.tau))) {
    throw InvalidState(
        "forward solve: operators were factorized for a different time step "
        "than the grid in use");
  }
  if (X0.size() != ops->n_dof) {
    throw InvalidArgument("forward solve: initial state has wrong dimension");
  }
  if (static_cast<int>(sigma.size()) != grid.N) {
    throw InvalidArgument(
        "forward solve: need one noise amplitude per time step");
  }
  for (const Vec& s : sigma) {
    if (s.size() != 0 && s.size() != ops->n_dof) {
      throw InvalidArgument(
          "forward solve: noise amplitude has wrong dimension");
    }
  }
}

Vec step_forward(const FemOperators& ops, const Vec& X, const Vec& U,
                 const Vec& sigma, double dW) {
  if (X.size() != ops.n_dof) {
    throw InvalidArgument("step_forward: state dimension mismatch");
  }
  Vec rhs = ops.mass.apply(X);
  if (U.size() > 0) {
    // Control lives in P0; its load vector feeds the mass-matrix system
    // directly, which is the same as lifting to P1 first.
    rhs += ops.tau * p0_load(ops.mesh, U);
  }
  if (sigma.size() > 0 && dW != 0.0) {
    rhs += dW * ops.mass.apply(sigma);
  }
  return ops.solve_shifted(rhs);
}

namespace {

enum class ControlKind { kNone, kDeterministic, kPathwise, kFeedback };

PathProcess solve_paths_impl(const ForwardData& data, const Mat& increments,
                             ControlKind kind,
                             const std::vector<Vec>* det_control,
                             const PathProcess* path_control,
                             const Feedback* feedback,
                             PathProcess* control_out) {
  data.validate();
  const FemOperators& ops = *data.ops;
  const int n_paths = static_cast<int>(increments.rows());
  if (increments.cols() != data.grid.N) {
    throw InvalidArgument("forward solve: increment table does not match grid");
  }
  if (kind == ControlKind::kDeterministic &&
      static_cast<int>(det_control->size()) != data.grid.N) {
    throw InvalidArgument("forward solve: need one control per time step");
  }
  if (kind == ControlKind::kPathwise &&
      (path_control->n_paths != n_paths ||
       path_control->grid.N != data.grid.N)) {
    throw InvalidArgument("forward solve: control paths do not match noise");
  }

  PathProcess out = zero_paths(data.grid, n_paths, ops.n_dof, data.grid.N + 1);
  if (control_out != nullptr) {
    *control_out =
        zero_paths(data.grid, n_paths, ops.mesh.n_cells, data.grid.N);
  }
  const Vec empty;
  parallel_for(n_paths, [&](int p) {
    Vec x = data.X0;
    out.values[0].row(p) = x.transpose();
    for (int n = 0; n < data.grid.N; ++n) {
      Vec u;
      switch (kind) {
        case ControlKind::kNone:
          break;
        case ControlKind::kDeterministic:
          u = (*det_control)[n];
          break;
        case ControlKind::kPathwise:
          u = path_control->value(p, n);
          break;
        case ControlKind::kFeedback:
          u = (*feedback)(n, x);
          break;
      }
      if (control_out != nullptr && u.size() > 0) {
        control_out->values[n].row(p) = u.transpose();
      }
      x = step_forward(ops, x, u.size() > 0 ? u : empty, data.sigma[n],
                       increments(p, n));
      out.values[n + 1].row(p) = x.transpose();
    }
  });
  return out;
}

}  // namespace

PathProcess solve_forward_paths(const ForwardData& data,
                                const Mat& increments) {
  return solve_paths_impl(data, increments, ControlKind::kNone, nullptr,
                          nullptr, nullptr, nullptr);
}

PathProcess solve_forward_paths(const ForwardData& data, const Mat& increments,
                                const std::vector<Vec>& control) {
  return solve_paths_impl(data, increments, ControlKind::kDeterministic,
                          &control, nullptr, nullptr, nullptr);
}

PathProcess solve_forward_paths(const ForwardData& data, const Mat& increments,
                                const PathProcess& control) {
  return solve_paths_impl(data, increments, ControlKind::kPathwise, nullptr,
                          &control, nullptr, nullptr);
}

PathProcess solve_forward_paths_feedback(const ForwardData& data,
                                         const Mat& increments,
                                         const Feedback& feedback,
                                         PathProcess* control_out) {
  return solve_paths_impl(data, increments, ControlKind::kFeedback, nullptr,
                          nullptr, &feedback, control_out);
}

namespace {

// Shared chaos propagation; `control` may be null (no control) and
// `det_control` non-null for a deterministic control.
ChaosProcess solve_chaos_impl(const ForwardData& data,
                              const std::vector<Vec>* det_control,
                              const ChaosProcess* control) {
  data.validate();
  const FemOperators& ops = *data.ops;
  const TimeGrid& grid = data.grid;
  if (control != nullptr) {
    if (control->grid.N != grid.N ||
        control->dim != ops.mesh.n_cells) {
      throw InvalidArgument("forward solve: chaos control does not match");
    }
  }
  if (det_control != nullptr &&
      static_cast<int>(det_control->size()) != grid.N) {
    throw InvalidArgument("forward solve: need one control per time step");
  }

  ChaosProcess x = zero_chaos(grid, ops.n_dof);
  x.mean[0] = data.X0;
  for (int n = 0; n < grid.N; ++n) {
    const Mat& l_prev = x.load[n];
    Mat l_next(ops.n_dof, n + 1);
    // Mean: one deterministic implicit-Euler step.
    Vec rhs = ops.mass.apply(x.mean[n]);
    if (det_control != nullptr) {
      rhs += grid.tau * p0_load(ops.mesh, (*det_control)[n]);
    } else if (control != nullptr) {
      rhs += grid.tau * p0_load(ops.mesh, control->mean[n]);
    }
    x.mean[n + 1] = ops.solve_shifted(rhs);
    // Existing loadings propagate through the same linear map; a chaos
    // control contributes its own loadings on past increments.
    parallel_for(n, [&](int j) {
      Vec lr = ops.mass.apply(l_prev.col(j));
      if (control != nullptr) {
        lr += grid.tau * p0_load(ops.mesh, control->load[n].col(j));
      }
      l_next.col(j) = ops.solve_shifted(lr);
    });
    // The fresh increment enters through the noise amplitude.
    if (data.sigma[n].size() > 0) {
      l_next.col(n) = ops.solve_shifted(ops.mass.apply(data.sigma[n]));
    } else {
      l_next.col(n).setZero();
    }
    x.load[n + 1] = std::move(l_next);
  }
  return x;
}

}  // namespace

ChaosProcess solve_forward_chaos(const ForwardData& data) {
  return solve_chaos_impl(data, nullptr, nullptr);
}

ChaosProcess solve_forward_chaos(const ForwardData& data,
                                 const std::vector<Vec>& control) {
  return solve_chaos_impl(data, &control, nullptr);
}

ChaosProcess solve_forward_chaos(const ForwardData& data,
                                 const ChaosProcess& control) {
  return solve_chaos_impl(data, nullptr, &control);
}

}  // namespace slqheat
