#pragma once
// Experiment driver: builds problems from self-contained configurations,
// runs refinement sweeps against a finest common-noise reference, fits
// observed convergence orders, runs the gradient-descent guarantee study
// and the cross-backend oracle checks, and emits machine-readable reports.
//
// Every report row uses one schema (the CSV header):
//   level,h,tau,n_paths,metric,squared_error,std_err,fitted_order,passed
// For rate studies, fitted_order is the log-log slope fitted to that
// metric's squared errors (repeated on each of its rows). For the
// gradient-descent and crosscheck studies the column carries the
// theoretical bound or tolerance the row is checked against.

#include <slqheat/profiles.hpp>
#include <slqheat/types.hpp>

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace slqheat {

struct ExperimentConfig {
  // One of: forward-time, forward-space, bspde-y, bspde-z, slq-time,
  // slq-space, gd-contraction, oracle-crosscheck.
  std::string experiment;
  std::string axis;  // "time" or "space"; fixed by most experiment ids

  double T = 1.0;
  double length = 1.0;
  double alpha = 1.0;
  int n_cells = 32;  // mesh used by time sweeps (and gd/crosscheck)
  int n_steps = 64;  // grid used by space sweeps (and gd/crosscheck)

  std::vector<int> ladder;  // refinement values: N (time) or n_cells (space)
  int reference = 0;        // finest level; 0 picks the experiment default

  int n_paths = 20000;  // pathwise backends (crosscheck regression)
  int replicas = 5;     // independent regression replicas
  std::uint64_t seed = 0x5EED;

  Profile sigma{"decaying_sine", {1.0, 1.0, 1.0}};
  Profile xtilde{"growing_sine", {1.0, 1.0, 1.0}};
  Profile x0{"sine", {1.0, 1.0}};

  double kappa = 0.0;  // gradient descent; 0 uses the certified bound
  int gd_iters = 50;

  int threads = 1;
};

// Defaults for each experiment id (ladders, scales, thresholds' scales).
ExperimentConfig default_config(const std::string& experiment);

// Strict parse + validation of a JSON config; unknown keys are errors.
ExperimentConfig parse_config(const std::string& json_text);
std::string config_to_json(const ExperimentConfig& config);

struct ReportRow {
  int level = 0;
  double h = 0.0;
  double tau = 0.0;
  long n_paths = 0;  // 0 for exact (chaos/tree) backends
  std::string metric;
  double squared_error = 0.0;
  double std_err = 0.0;
  double fitted_order = 0.0;
  bool passed = true;
};

struct Report {
  std::string experiment;
  std::vector<ReportRow> rows;
  std::map<std::string, double> summary;  // fitted orders, final values
  bool all_passed = false;
  double wall_seconds = 0.0;
};

// Dispatches on config.experiment.
Report run_experiment(const ExperimentConfig& config);

// Least-squares slope of log(squared_error) against log(parameter);
// parameters and errors must be positive and the same length (>= 2).
double observed_order(const std::vector<double>& params,
                      const std::vector<double>& squared_errors);

void write_report_csv(const Report& report, std::ostream& os);
std::string report_sidecar_json(const ExperimentConfig& config,
                                const Report& report);

}  // namespace slqheat
