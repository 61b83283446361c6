#include <slqheat/experiments.hpp>

#include <slqheat/backward_bspde.hpp>
#include <slqheat/chaos.hpp>
#include <slqheat/errors.hpp>
#include <slqheat/forward_spde.hpp>
#include <slqheat/gradient_descent.hpp>
#include <slqheat/mesh_fem.hpp>
#include <slqheat/optimal_control.hpp>
#include <slqheat/parallel.hpp>
#include <slqheat/time_noise.hpp>
#include <slqheat/version.hpp>

#include <nlohmann/json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <memory>
#include <ostream>
#include <set>
#include <utility>

namespace slqheat {

namespace {

using nlohmann::json;

bool is_pow2(int v) { return v > 0 && (v & (v - 1)) == 0; }

const std::set<std::string>& experiment_catalog() {
  static const std::set<std::string> ids = {
      "forward-time", "forward-space", "bspde-y",  "bspde-z",
      "slq-time",     "slq-space",     "gd-contraction",
      "oracle-crosscheck"};
  return ids;
}

bool is_rate_experiment(const std::string& id) {
  return id != "gd-contraction" && id != "oracle-crosscheck";
}

// A problem instance owns its operators; the contained problem points at
// them, so instances are built on the heap and never copied.
struct Instance {
  TimeGrid grid;
  FemOperators ops;
  ControlProblem problem;

  Instance(const Instance&) = delete;
  Instance& operator=(const Instance&) = delete;
  Instance() = default;
};

std::unique_ptr<Instance> make_instance(const ExperimentConfig& cfg,
                                        int n_cells, int n_steps) {
  auto inst = std::make_unique<Instance>();
  inst->grid = build_grid(cfg.T, n_steps);
  inst->ops = assemble(build_mesh(cfg.length, n_cells), inst->grid.tau);
  ControlProblem& pb = inst->problem;
  pb.ops = &inst->ops;
  pb.grid = inst->grid;
  pb.alpha = cfg.alpha;
  pb.X0 = project_p1(inst->ops, profile_slice(cfg.x0, 0.0, cfg.length));
  pb.sigma.assign(inst->grid.N, Vec());
  if (!profile_is_zero(cfg.sigma)) {
    for (int n = 0; n < inst->grid.N; ++n) {
      pb.sigma[n] = project_p1(
          inst->ops, profile_slice(cfg.sigma, inst->grid.t[n], cfg.length));
    }
  }
  pb.xtilde.assign(inst->grid.N + 1, Vec());
  for (int n = 0; n <= inst->grid.N; ++n) {
    pb.xtilde[n] = project_p1(
        inst->ops, profile_slice(cfg.xtilde, inst->grid.t[n], cfg.length));
  }
  pb.validate();
  return inst;
}

ChaosProcess solve_state_chaos(const Instance& inst) {
  ForwardData data{&inst.ops, inst.grid, inst.problem.X0, inst.problem.sigma};
  return solve_forward_chaos(data);
}

// Standalone backward problem tied to the uncontrolled state: terminal
// -alpha (X_N - Xt_N) and driver X(t_n) - Xt(t_n).
BackwardChaos solve_bspde_chaos(const Instance& inst, const ChaosProcess& X) {
  const ControlProblem& pb = inst.problem;
  const int N = inst.grid.N;
  ChaosProcess f = zero_chaos(inst.grid, inst.ops.n_dof);
  for (int n = 0; n <= N; ++n) {
    f.mean[n] = X.mean[n] - pb.xtilde[n];
    f.load[n] = X.load[n];
  }
  ChaosValue terminal;
  terminal.mean = -pb.alpha * (X.mean[N] - pb.xtilde[N]);
  terminal.load = -pb.alpha * X.load[N];
  return solve_backward_chaos(inst.ops, inst.grid, terminal, &f);
}

ChaosValue prolongate_value(const FemOperators& coarse,
                            const FemOperators& fine, const ChaosValue& v) {
  ChaosValue out;
  out.mean = prolongate(coarse, fine, v.mean);
  out.load.resize(fine.n_dof, v.load.cols());
  for (int j = 0; j < v.load.cols(); ++j) {
    out.load.col(j) = prolongate(coarse, fine, v.load.col(j));
  }
  return out;
}

ChaosValue prolongate_value_p0(const Mesh1D& coarse, const Mesh1D& fine,
                               const ChaosValue& v) {
  ChaosValue out;
  out.mean = prolongate_p0(coarse, fine, v.mean);
  out.load.resize(fine.n_cells, v.load.cols());
  for (int j = 0; j < v.load.cols(); ++j) {
    out.load.col(j) = prolongate_p0(coarse, fine, v.load.col(j));
  }
  return out;
}

// max_n E||a(t_n) - b(t_n)||^2 at the coarse grid points of a two-level
// time refinement (stride = fine steps per coarse step).
double max_sq_diff_time(const ChaosProcess& coarse, const ChaosProcess& fine,
                        int stride, double fine_tau, const L2Metric& metric) {
  double worst = 0.0;
  for (int n = 0; n <= coarse.grid.N; ++n) {
    worst = std::max(worst, mean_sq_diff(coarse.at(n), stride,
                                         fine.at(n * stride), 1, fine_tau,
                                         metric));
  }
  return worst;
}

// sum_j tau_f E||a(block(j)) - b(t_j)||^2: squared L2-in-time distance
// between the coarse piecewise-constant process and the fine one.
double staircase_sq_diff_time(const ChaosProcess& coarse,
                              const ChaosProcess& fine, int stride,
                              double fine_tau, const L2Metric& metric) {
  double sum = 0.0;
  for (int n = 0; n < coarse.grid.N; ++n) {
    for (int j = n * stride; j < (n + 1) * stride; ++j) {
      sum += fine_tau * mean_sq_diff(coarse.at(n), stride, fine.at(j), 1,
                                     fine_tau, metric);
    }
  }
  return sum;
}

double staircase_sq_diff_vectors(const std::vector<Vec>& coarse,
                                 const std::vector<Vec>& fine, int stride,
                                 double fine_tau, const L2Metric& metric) {
  double sum = 0.0;
  for (std::size_t n = 0; n < coarse.size(); ++n) {
    for (int j = static_cast<int>(n) * stride;
         j < static_cast<int>(n + 1) * stride; ++j) {
      sum += fine_tau * metric.sq(coarse[n] - fine[j]);
    }
  }
  return sum;
}

int resolve_reference(const ExperimentConfig& cfg) {
  if (cfg.reference > 0) return cfg.reference;
  const int last = cfg.ladder.back();
  return cfg.axis == "time" ? 8 * last : 4 * last;
}

struct MetricSeries {
  std::vector<double> params;  // tau or h per level
  std::vector<double> errors;  // squared errors
};

// Fits orders, stamps them onto the rows, and fills the summary.
void finalize_rate_report(Report& report,
                          const std::map<std::string, MetricSeries>& series,
                          double threshold) {
  bool all = true;
  for (const auto& [metric, data] : series) {
    const double order = observed_order(data.params, data.errors);
    const bool passed = order >= threshold;
    all = all && passed;
    report.summary["order_" + metric] = order;
    for (ReportRow& row : report.rows) {
      if (row.metric == metric) {
        row.fitted_order = order;
        row.passed = passed;
      }
    }
  }
  report.summary["threshold"] = threshold;
  report.all_passed = all;
}

Report run_forward_rate(const ExperimentConfig& cfg) {
  Report report;
  report.experiment = cfg.experiment;
  const int ref_level = resolve_reference(cfg);
  std::map<std::string, MetricSeries> series;

  if (cfg.axis == "time") {
    auto ref = make_instance(cfg, cfg.n_cells, ref_level);
    const ChaosProcess fine = solve_state_chaos(*ref);
    const L2Metric p1m = p1_metric(ref->ops);
    for (int level : cfg.ladder) {
      auto inst = make_instance(cfg, cfg.n_cells, level);
      const ChaosProcess coarse = solve_state_chaos(*inst);
      const int stride = ref_level / level;
      const double err =
          max_sq_diff_time(coarse, fine, stride, ref->grid.tau, p1m);
      series["state"].params.push_back(inst->grid.tau);
      series["state"].errors.push_back(err);
      report.rows.push_back({level, inst->ops.mesh.h(), inst->grid.tau, 0,
                             "state", err, 0.0, 0.0, true});
    }
  } else {
    auto ref = make_instance(cfg, ref_level, cfg.n_steps);
    const ChaosProcess fine = solve_state_chaos(*ref);
    const L2Metric p1m = p1_metric(ref->ops);
    for (int level : cfg.ladder) {
      auto inst = make_instance(cfg, level, cfg.n_steps);
      const ChaosProcess coarse = solve_state_chaos(*inst);
      double err = 0.0;
      for (int n = 0; n <= inst->grid.N; ++n) {
        const ChaosValue lifted =
            prolongate_value(inst->ops, ref->ops, coarse.at(n));
        err = std::max(err, second_moment(chaos_sub(lifted, fine.at(n)),
                                          inst->grid.tau, p1m));
      }
      series["state"].params.push_back(inst->ops.mesh.h());
      series["state"].errors.push_back(err);
      report.rows.push_back({level, inst->ops.mesh.h(), inst->grid.tau, 0,
                             "state", err, 0.0, 0.0, true});
    }
  }
  finalize_rate_report(report, series, cfg.axis == "time" ? 0.9 : 1.8);
  return report;
}

Report run_bspde_rate(const ExperimentConfig& cfg) {
  Report report;
  report.experiment = cfg.experiment;
  const int ref_level = resolve_reference(cfg);
  const bool want_z = cfg.experiment == "bspde-z";
  std::map<std::string, MetricSeries> series;

  if (cfg.axis == "time") {
    auto ref = make_instance(cfg, cfg.n_cells, ref_level);
    const BackwardChaos fine = solve_bspde_chaos(*ref, solve_state_chaos(*ref));
    const L2Metric p1m = p1_metric(ref->ops);
    for (int level : cfg.ladder) {
      auto inst = make_instance(cfg, cfg.n_cells, level);
      const BackwardChaos coarse =
          solve_bspde_chaos(*inst, solve_state_chaos(*inst));
      const int stride = ref_level / level;
      double err = 0.0;
      if (want_z) {
        err = staircase_sq_diff_vectors(coarse.Z, fine.Z, stride,
                                        ref->grid.tau, p1m);
        series["z"].params.push_back(inst->grid.tau);
        series["z"].errors.push_back(err);
        report.rows.push_back({level, inst->ops.mesh.h(), inst->grid.tau, 0,
                               "z", err, 0.0, 0.0, true});
      } else {
        err = max_sq_diff_time(coarse.Y, fine.Y, stride, ref->grid.tau, p1m);
        series["adjoint"].params.push_back(inst->grid.tau);
        series["adjoint"].errors.push_back(err);
        report.rows.push_back({level, inst->ops.mesh.h(), inst->grid.tau, 0,
                               "adjoint", err, 0.0, 0.0, true});
      }
    }
  } else {
    auto ref = make_instance(cfg, ref_level, cfg.n_steps);
    const BackwardChaos fine = solve_bspde_chaos(*ref, solve_state_chaos(*ref));
    const L2Metric p1m = p1_metric(ref->ops);
    for (int level : cfg.ladder) {
      auto inst = make_instance(cfg, level, cfg.n_steps);
      const BackwardChaos coarse =
          solve_bspde_chaos(*inst, solve_state_chaos(*inst));
      double err = 0.0;
      for (int n = 0; n <= inst->grid.N; ++n) {
        const ChaosValue lifted =
            prolongate_value(inst->ops, ref->ops, coarse.Y.at(n));
        err = std::max(err, second_moment(chaos_sub(lifted, fine.Y.at(n)),
                                          inst->grid.tau, p1m));
      }
      series["adjoint"].params.push_back(inst->ops.mesh.h());
      series["adjoint"].errors.push_back(err);
      report.rows.push_back({level, inst->ops.mesh.h(), inst->grid.tau, 0,
                             "adjoint", err, 0.0, 0.0, true});
    }
  }
  finalize_rate_report(report, series, cfg.axis == "time" ? 0.9 : 1.8);
  return report;
}

Report run_slq_rate(const ExperimentConfig& cfg) {
  Report report;
  report.experiment = cfg.experiment;
  const int ref_level = resolve_reference(cfg);
  std::map<std::string, MetricSeries> series;

  auto record = [&](const std::string& metric, int level, double h,
                    double tau, double param, double err) {
    series[metric].params.push_back(param);
    series[metric].errors.push_back(err);
    report.rows.push_back({level, h, tau, 0, metric, err, 0.0, 0.0, true});
  };

  if (cfg.axis == "time") {
    auto ref = make_instance(cfg, cfg.n_cells, ref_level);
    const OptimalChaos fine =
        closed_loop_chaos(ref->problem, solve_riccati(ref->problem));
    const L2Metric p1m = p1_metric(ref->ops);
    const L2Metric p0m = p0_metric(ref->ops);
    for (int level : cfg.ladder) {
      auto inst = make_instance(cfg, cfg.n_cells, level);
      const OptimalChaos coarse =
          closed_loop_chaos(inst->problem, solve_riccati(inst->problem));
      const int stride = ref_level / level;
      const double tau_f = ref->grid.tau;
      const double h = inst->ops.mesh.h();
      const double tau = inst->grid.tau;
      record("control", level, h, tau, tau,
             staircase_sq_diff_time(coarse.U, fine.U, stride, tau_f, p0m));
      record("state", level, h, tau, tau,
             max_sq_diff_time(coarse.X, fine.X, stride, tau_f, p1m));
      record("adjoint", level, h, tau, tau,
             max_sq_diff_time(coarse.Y, fine.Y, stride, tau_f, p1m));
    }
  } else {
    auto ref = make_instance(cfg, ref_level, cfg.n_steps);
    const OptimalChaos fine =
        closed_loop_chaos(ref->problem, solve_riccati(ref->problem));
    const L2Metric p1m = p1_metric(ref->ops);
    const L2Metric p0m = p0_metric(ref->ops);
    for (int level : cfg.ladder) {
      auto inst = make_instance(cfg, level, cfg.n_steps);
      const OptimalChaos coarse =
          closed_loop_chaos(inst->problem, solve_riccati(inst->problem));
      const double tau = inst->grid.tau;
      const double h = inst->ops.mesh.h();
      double control_err = 0.0;
      for (int n = 0; n < inst->grid.N; ++n) {
        const ChaosValue lifted = prolongate_value_p0(
            inst->ops.mesh, ref->ops.mesh, coarse.U.at(n));
        control_err +=
            tau * second_moment(chaos_sub(lifted, fine.U.at(n)), tau, p0m);
      }
      double state_err = 0.0;
      double adjoint_err = 0.0;
      for (int n = 0; n <= inst->grid.N; ++n) {
        const ChaosValue x_l =
            prolongate_value(inst->ops, ref->ops, coarse.X.at(n));
        state_err = std::max(
            state_err, second_moment(chaos_sub(x_l, fine.X.at(n)), tau, p1m));
        const ChaosValue y_l =
            prolongate_value(inst->ops, ref->ops, coarse.Y.at(n));
        adjoint_err = std::max(
            adjoint_err,
            second_moment(chaos_sub(y_l, fine.Y.at(n)), tau, p1m));
      }
      record("control", level, h, tau, h, control_err);
      record("state", level, h, tau, h, state_err);
      record("adjoint", level, h, tau, h, adjoint_err);
    }
  }
  finalize_rate_report(report, series, cfg.axis == "time" ? 0.9 : 1.8);
  return report;
}

Report run_gd_study(const ExperimentConfig& cfg) {
  Report report;
  report.experiment = cfg.experiment;
  auto inst = make_instance(cfg, cfg.n_cells, cfg.n_steps);
  const RiccatiSolution riccati = solve_riccati(inst->problem);
  const OptimalChaos optimal = closed_loop_chaos(inst->problem, riccati);
  const double j_star = evaluate_cost_chaos(inst->problem, optimal.U);

  GdConfig gd;
  gd.kappa = cfg.kappa;
  gd.max_iters = cfg.gd_iters;
  const GdReport run = run_gd(inst->problem, gd, &optimal);
  const double kappa = run.kappa;
  const double ratio_bound = 1.0 - 1.0 / kappa;
  const double d0_sq = run.iterates.front().dist_sq;
  const double h = inst->ops.mesh.h();
  const double tau = inst->grid.tau;

  bool contraction_ok = true;
  bool gap_ok = true;
  bool grad_monotone = true;
  for (std::size_t l = 0; l < run.iterates.size(); ++l) {
    const GdIterate& it = run.iterates[l];
    const int level = static_cast<int>(l);

    bool ratio_passed = true;
    if (l > 0) {
      const double prev = run.iterates[l - 1].dist_sq;
      // Below this floor the distance is exhausted by rounding and the
      // ratio is no longer meaningful.
      if (prev > 1e-24 * d0_sq) {
        ratio_passed = it.dist_sq <= (ratio_bound + 1e-10) * prev;
      }
      if (it.grad_norm > run.iterates[l - 1].grad_norm * (1.0 + 1e-12)) {
        grad_monotone = false;
      }
    }
    contraction_ok = contraction_ok && ratio_passed;
    report.rows.push_back({level, h, tau, 0, "dist_sq", it.dist_sq, 0.0,
                           ratio_bound, ratio_passed});

    const double gap = it.cost - j_star;
    bool gap_passed = true;
    double gap_bound = 0.0;
    if (l > 0) {
      gap_bound = 2.0 * kappa * d0_sq / static_cast<double>(l);
      gap_passed = gap <= gap_bound;
    }
    gap_ok = gap_ok && gap_passed;
    report.rows.push_back(
        {level, h, tau, 0, "cost_gap", gap, 0.0, gap_bound, gap_passed});

    report.rows.push_back({level, h, tau, 0, "grad_norm_sq",
                           it.grad_norm * it.grad_norm, 0.0, 0.0, true});
  }

  report.summary["kappa"] = kappa;
  report.summary["d0_sq"] = d0_sq;
  report.summary["j_star"] = j_star;
  report.summary["final_dist_sq"] = run.iterates.back().dist_sq;
  report.summary["contraction_ok"] = contraction_ok ? 1.0 : 0.0;
  report.summary["gap_ok"] = gap_ok ? 1.0 : 0.0;
  report.summary["grad_monotone"] = grad_monotone ? 1.0 : 0.0;
  report.all_passed = contraction_ok && gap_ok;
  return report;
}

Report run_crosscheck(const ExperimentConfig& cfg) {
  Report report;
  report.experiment = cfg.experiment;
  auto inst = make_instance(cfg, cfg.n_cells, cfg.n_steps);
  const FemOperators& ops = inst->ops;
  const ControlProblem& pb = inst->problem;
  const int N = inst->grid.N;
  const int d = ops.n_dof;
  const double h = ops.mesh.h();
  const double tau = inst->grid.tau;

  auto add_check = [&](const std::string& name, double value, double tol,
                       long paths, double se) {
    report.rows.push_back(
        {0, h, tau, paths, name, value, se, tol, value <= tol});
  };

  // Exact chaos solution of the forward + standalone backward pair.
  const ChaosProcess X = solve_state_chaos(*inst);
  const BackwardChaos exact = solve_bspde_chaos(*inst, X);

  // Tree backend on the exhaustive Bernoulli tree.
  const BernoulliTree tree = enumerate_tree(inst->grid);
  const Mat tree_incr = tree.increments();
  ForwardData data{&ops, inst->grid, pb.X0, pb.sigma};
  const PathProcess x_tree = solve_forward_paths(data, tree_incr);

  double x_gap = 0.0;
  for (int n = 0; n <= N; ++n) {
    for (int p = 0; p < tree.n_paths; ++p) {
      const Vec on_path = evaluate_on_path(X.at(n), tree_incr, p);
      x_gap = std::max(
          x_gap,
          (x_tree.values[n].row(p).transpose() - on_path).cwiseAbs().maxCoeff());
    }
  }
  add_check("tree_forward_gap", x_gap, 1e-12, tree.n_paths, 0.0);

  PathProcess driver = zero_paths(inst->grid, tree.n_paths, d, N);
  for (int n = 0; n < N; ++n) {
    driver.values[n] = x_tree.values[n];
    driver.values[n].rowwise() -= pb.xtilde[n].transpose();
  }
  Mat terminal = x_tree.values[N];
  terminal.rowwise() -= pb.xtilde[N].transpose();
  terminal *= -pb.alpha;
  const BackwardPaths on_tree =
      solve_backward_tree(ops, tree, terminal, &driver);

  double y_gap = 0.0;
  double z_gap = 0.0;
  for (int n = 0; n < N; ++n) {
    for (int p = 0; p < tree.n_paths; ++p) {
      const Vec y_exact = evaluate_on_path(exact.Y.at(n), tree_incr, p);
      y_gap = std::max(y_gap, (on_tree.Y.values[n].row(p).transpose() - y_exact)
                                  .cwiseAbs()
                                  .maxCoeff());
      z_gap = std::max(z_gap, (on_tree.Z.values[n].row(p).transpose() -
                               exact.Z[n])
                                  .cwiseAbs()
                                  .maxCoeff());
    }
  }
  add_check("tree_backward_y_gap", y_gap, 1e-12, tree.n_paths, 0.0);
  add_check("tree_backward_z_gap", z_gap, 1e-12, tree.n_paths, 0.0);

  // Regression backend: independent replicas; the replica spread gives the
  // standard error of the replica mean at t_0.
  const int R = cfg.replicas;
  Mat y0(R, d);
  Mat z0(R, d);
  long ridge_steps = 0;
  for (int r = 0; r < R; ++r) {
    const std::uint64_t replica_seed = rng::mix(cfg.seed, 0xC0FFEE + r);
    const NoiseEnsemble ens =
        sample_ensemble(inst->grid, cfg.n_paths, replica_seed);
    const PathProcess x_mc = solve_forward_paths(data, ens.increments);
    PathProcess f_mc = zero_paths(inst->grid, cfg.n_paths, d, N);
    for (int n = 0; n < N; ++n) {
      f_mc.values[n] = x_mc.values[n];
      f_mc.values[n].rowwise() -= pb.xtilde[n].transpose();
    }
    Mat term_mc = x_mc.values[N];
    term_mc.rowwise() -= pb.xtilde[N].transpose();
    term_mc *= -pb.alpha;
    const BackwardPaths reg = solve_backward_regression(
        ops, inst->grid, ens.increments, term_mc, &f_mc, x_mc, BasisSpec{1});
    ridge_steps += static_cast<long>(reg.regularized.size());
    y0.row(r) = reg.Y.values[0].row(0);
    z0.row(r) = reg.Z.values[0].row(0);
  }

  auto replica_check = [&](const std::string& name, const Mat& samples,
                           const Vec& truth) {
    const Vec mean = samples.colwise().mean();
    double worst_gap = 0.0;
    double worst_bound = 0.0;
    double worst_se = 0.0;
    bool ok = true;
    for (int i = 0; i < d; ++i) {
      const double var =
          (samples.col(i).array() - mean(i)).square().sum() / (R - 1.0);
      const double se = std::sqrt(var / R);
      const double gap = std::abs(mean(i) - truth(i));
      const double bound = 5.0 * se + 1e-13;
      if (gap > bound) ok = false;
      if (gap - bound > worst_gap - worst_bound) {
        worst_gap = gap;
        worst_bound = bound;
        worst_se = se;
      }
    }
    report.rows.push_back({0, h, tau, static_cast<long>(cfg.n_paths) * R,
                           name, worst_gap, worst_se, worst_bound, ok});
  };
  replica_check("regression_y0_gap", y0, exact.Y.mean[0]);
  replica_check("regression_z0_gap", z0, exact.Z[0]);
  // With a single Brownian driver the per-step state values live on a
  // low-dimensional manifold (one direction per independent loading), so
  // rank-deficient designs and the flagged ridge fallback are expected; the
  // count is informational and only capped by the number of fitted steps.
  add_check("regression_ridge_steps", static_cast<double>(ridge_steps),
            static_cast<double>(R) * std::max(0, N - 1),
            static_cast<long>(cfg.n_paths) * R, 0.0);

  report.all_passed = true;
  for (const ReportRow& row : report.rows) {
    report.all_passed = report.all_passed && row.passed;
  }
  return report;
}

void validate_config(const ExperimentConfig& cfg) {
  if (experiment_catalog().count(cfg.experiment) == 0) {
    throw ConfigError("unknown experiment '" + cfg.experiment + "'");
  }
  if (cfg.axis != "time" && cfg.axis != "space") {
    throw ConfigError("axis must be 'time' or 'space'");
  }
  const bool needs_time = cfg.experiment == "forward-time" ||
                          cfg.experiment == "slq-time" ||
                          cfg.experiment == "bspde-z";
  const bool needs_space =
      cfg.experiment == "forward-space" || cfg.experiment == "slq-space";
  if (needs_time && cfg.axis != "time") {
    throw ConfigError(cfg.experiment + " is a temporal study (axis 'time')");
  }
  if (needs_space && cfg.axis != "space") {
    throw ConfigError(cfg.experiment + " is a spatial study (axis 'space')");
  }
  if (cfg.T <= 0.0 || cfg.length <= 0.0) {
    throw ConfigError("T and length must be positive");
  }
  if (cfg.alpha < 0.0) throw ConfigError("alpha must be >= 0");
  if (cfg.n_cells < 2) throw ConfigError("n_cells must be >= 2");
  if (cfg.n_steps < 1) throw ConfigError("n_steps must be >= 1");
  if (cfg.n_paths < 1) throw ConfigError("n_paths must be >= 1");
  if (cfg.replicas < 2) throw ConfigError("replicas must be >= 2");
  if (cfg.kappa < 0.0) throw ConfigError("kappa must be >= 0");
  if (cfg.gd_iters < 1) throw ConfigError("gd_iters must be >= 1");
  if (cfg.threads < 1) throw ConfigError("threads must be >= 1");

  if (is_rate_experiment(cfg.experiment)) {
    if (cfg.ladder.size() < 2) {
      throw ConfigError("refinement ladder needs at least two levels");
    }
    for (std::size_t i = 0; i < cfg.ladder.size(); ++i) {
      if (cfg.ladder[i] < 2) throw ConfigError("ladder entries must be >= 2");
      if (i > 0) {
        if (cfg.ladder[i] <= cfg.ladder[i - 1] ||
            cfg.ladder[i] % cfg.ladder[i - 1] != 0 ||
            !is_pow2(cfg.ladder[i] / cfg.ladder[i - 1])) {
          throw ConfigError("ladder must increase by powers of two");
        }
      }
    }
    const int ref = resolve_reference(cfg);
    if (ref <= cfg.ladder.back() || ref % cfg.ladder.back() != 0 ||
        !is_pow2(ref / cfg.ladder.back())) {
      throw ConfigError(
          "reference must be a power-of-two multiple of the last ladder "
          "entry");
    }
  }

  // Profile kinds are validated by constructing a slice.
  profile_slice(cfg.sigma, 0.0, cfg.length);
  profile_slice(cfg.xtilde, 0.0, cfg.length);
  profile_slice(cfg.x0, 0.0, cfg.length);
}

}  // namespace

ExperimentConfig default_config(const std::string& experiment) {
  if (experiment_catalog().count(experiment) == 0) {
    throw ConfigError("unknown experiment '" + experiment + "'");
  }
  ExperimentConfig cfg;
  cfg.experiment = experiment;
  cfg.axis = (experiment == "forward-space" || experiment == "slq-space")
                 ? "space"
                 : "time";
  if (is_rate_experiment(experiment)) {
    cfg.ladder = {8, 16, 32, 64};
    cfg.n_cells = experiment == "forward-time" ? 64 : 32;
    cfg.n_steps = 64;
  } else if (experiment == "gd-contraction") {
    cfg.n_cells = 16;
    cfg.n_steps = 16;
  } else {  // oracle-crosscheck
    cfg.n_cells = 8;
    cfg.n_steps = 6;
  }
  return cfg;
}

ExperimentConfig parse_config(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ConfigError("config must be a JSON object");
  if (!doc.contains("experiment") || !doc["experiment"].is_string()) {
    throw ConfigError("config needs an 'experiment' string");
  }

  ExperimentConfig cfg = default_config(doc["experiment"].get<std::string>());

  const std::set<std::string> keys = {
      "experiment", "axis",     "T",        "length",   "alpha",
      "n_cells",    "n_steps",  "ladder",   "reference", "n_paths",
      "replicas",   "seed",     "sigma",    "xtilde",   "x0",
      "kappa",      "gd_iters", "threads"};
  for (const auto& item : doc.items()) {
    if (keys.count(item.key()) == 0) {
      throw ConfigError("unknown config key '" + item.key() + "'");
    }
  }

  try {
    auto profile = [&](const char* key, Profile& out) {
      if (!doc.contains(key)) return;
      const json& p = doc[key];
      if (!p.is_object() || !p.contains("kind")) {
        throw ConfigError(std::string(key) +
                          " must be an object with a 'kind'");
      }
      for (const auto& item : p.items()) {
        if (item.key() != "kind" && item.key() != "coeffs") {
          throw ConfigError("unknown profile key '" + item.key() + "'");
        }
      }
      out.kind = p["kind"].get<std::string>();
      out.coeffs.clear();
      if (p.contains("coeffs")) {
        out.coeffs = p["coeffs"].get<std::vector<double>>();
      }
    };
    if (doc.contains("axis")) cfg.axis = doc["axis"].get<std::string>();
    if (doc.contains("T")) cfg.T = doc["T"].get<double>();
    if (doc.contains("length")) cfg.length = doc["length"].get<double>();
    if (doc.contains("alpha")) cfg.alpha = doc["alpha"].get<double>();
    if (doc.contains("n_cells")) cfg.n_cells = doc["n_cells"].get<int>();
    if (doc.contains("n_steps")) cfg.n_steps = doc["n_steps"].get<int>();
    if (doc.contains("ladder")) {
      cfg.ladder = doc["ladder"].get<std::vector<int>>();
    }
    if (doc.contains("reference")) {
      cfg.reference = doc["reference"].get<int>();
    }
    if (doc.contains("n_paths")) cfg.n_paths = doc["n_paths"].get<int>();
    if (doc.contains("replicas")) cfg.replicas = doc["replicas"].get<int>();
    if (doc.contains("seed")) {
      cfg.seed = doc["seed"].get<std::uint64_t>();
    }
    profile("sigma", cfg.sigma);
    profile("xtilde", cfg.xtilde);
    profile("x0", cfg.x0);
    if (doc.contains("kappa")) cfg.kappa = doc["kappa"].get<double>();
    if (doc.contains("gd_iters")) cfg.gd_iters = doc["gd_iters"].get<int>();
    if (doc.contains("threads")) cfg.threads = doc["threads"].get<int>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config field has the wrong type: ") +
                      e.what());
  }

  validate_config(cfg);
  return cfg;
}

std::string config_to_json(const ExperimentConfig& cfg) {
  json doc;
  doc["experiment"] = cfg.experiment;
  doc["axis"] = cfg.axis;
  doc["T"] = cfg.T;
  doc["length"] = cfg.length;
  doc["alpha"] = cfg.alpha;
  doc["n_cells"] = cfg.n_cells;
  doc["n_steps"] = cfg.n_steps;
  doc["ladder"] = cfg.ladder;
  doc["reference"] = cfg.reference;
  doc["n_paths"] = cfg.n_paths;
  doc["replicas"] = cfg.replicas;
  doc["seed"] = cfg.seed;
  doc["sigma"] = {{"kind", cfg.sigma.kind}, {"coeffs", cfg.sigma.coeffs}};
  doc["xtilde"] = {{"kind", cfg.xtilde.kind}, {"coeffs", cfg.xtilde.coeffs}};
  doc["x0"] = {{"kind", cfg.x0.kind}, {"coeffs", cfg.x0.coeffs}};
  doc["kappa"] = cfg.kappa;
  doc["gd_iters"] = cfg.gd_iters;
  doc["threads"] = cfg.threads;
  return doc.dump(2);
}

Report run_experiment(const ExperimentConfig& cfg) {
  validate_config(cfg);
  set_worker_threads(cfg.threads);
  const auto start = std::chrono::steady_clock::now();

  Report report;
  if (cfg.experiment == "forward-time" || cfg.experiment == "forward-space") {
    report = run_forward_rate(cfg);
  } else if (cfg.experiment == "bspde-y" || cfg.experiment == "bspde-z") {
    report = run_bspde_rate(cfg);
  } else if (cfg.experiment == "slq-time" || cfg.experiment == "slq-space") {
    report = run_slq_rate(cfg);
  } else if (cfg.experiment == "gd-contraction") {
    report = run_gd_study(cfg);
  } else {
    report = run_crosscheck(cfg);
  }

  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  return report;
}

double observed_order(const std::vector<double>& params,
                      const std::vector<double>& squared_errors) {
  if (params.size() != squared_errors.size() || params.size() < 2) {
    throw InvalidArgument("order fit needs matching lists with >= 2 points");
  }
  const int n = static_cast<int>(params.size());
  double mx = 0.0;
  double my = 0.0;
  std::vector<double> xs(n);
  std::vector<double> ys(n);
  for (int i = 0; i < n; ++i) {
    if (params[i] <= 0.0 || squared_errors[i] <= 0.0) {
      throw InvalidArgument("order fit needs positive parameters and errors");
    }
    xs[i] = std::log(params[i]);
    ys[i] = std::log(squared_errors[i]);
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double num = 0.0;
  double den = 0.0;
  for (int i = 0; i < n; ++i) {
    num += (xs[i] - mx) * (ys[i] - my);
    den += (xs[i] - mx) * (xs[i] - mx);
  }
  return num / den;
}

namespace {

std::string fmt17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

void write_report_csv(const Report& report, std::ostream& os) {
  os << "level,h,tau,n_paths,metric,squared_error,std_err,fitted_order,"
        "passed\n";
  for (const ReportRow& row : report.rows) {
    os << row.level << ',' << fmt17(row.h) << ',' << fmt17(row.tau) << ','
       << row.n_paths << ',' << row.metric << ',' << fmt17(row.squared_error)
       << ',' << fmt17(row.std_err) << ',' << fmt17(row.fitted_order) << ','
       << (row.passed ? "true" : "false") << '\n';
  }
}

std::string report_sidecar_json(const ExperimentConfig& cfg,
                                const Report& report) {
  json doc;
  doc["config"] = json::parse(config_to_json(cfg));
  doc["version"] = kGitDescribe;
  doc["experiment"] = report.experiment;
  doc["all_passed"] = report.all_passed;
  doc["wall_seconds"] = report.wall_seconds;
  doc["summary"] = report.summary;
  return doc.dump(2);
}

}  // namespace slqheat
