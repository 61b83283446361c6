#include <doctest.h>

#include <slqheat/errors.hpp>
#include <slqheat/experiments.hpp>

#include "support/checks.hpp"

#include <cmath>
#include <sstream>
#include <string>
#include <vector>

using namespace slqheat;

TEST_CASE("defaults exist and validate for every experiment id") {
  for (const char* id : {"forward-time", "forward-space", "bspde-y", "bspde-z",
                         "slq-time", "slq-space", "gd-contraction",
                         "oracle-crosscheck"}) {
    const auto cfg = default_config(id);
    CHECK(cfg.experiment == id);
  }
  CHECK_THROWS_AS(default_config("unknown"), ConfigError);
}

TEST_CASE("config parsing is strict") {
  CHECK_THROWS_AS(parse_config("not json"), ConfigError);
  CHECK_THROWS_AS(parse_config("[1,2]"), ConfigError);
  CHECK_THROWS_AS(parse_config("{}"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"experiment":"nope"})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"experiment":"slq-time","bogus":1})"),
                  ConfigError);
  CHECK_THROWS_AS(
      parse_config(R"({"experiment":"slq-time","sigma":{"kind":"sine","x":1}})"),
      ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"experiment":"slq-time","T":-1})"),
                  ConfigError);
  CHECK_THROWS_AS(
      parse_config(R"({"experiment":"slq-time","ladder":[8]})"), ConfigError);
  CHECK_THROWS_AS(
      parse_config(R"({"experiment":"slq-time","ladder":[8,24]})"),
      ConfigError);
  CHECK_THROWS_AS(
      parse_config(R"({"experiment":"slq-time","ladder":[16,8]})"),
      ConfigError);
  CHECK_THROWS_AS(
      parse_config(
          R"({"experiment":"slq-time","ladder":[8,16],"reference":24})"),
      ConfigError);
  // Axis is pinned for single-axis studies.
  CHECK_THROWS_AS(
      parse_config(R"({"experiment":"forward-time","axis":"space"})"),
      ConfigError);
  CHECK_THROWS_AS(
      parse_config(R"({"experiment":"slq-space","axis":"time"})"),
      ConfigError);
  // The adjoint-state study accepts both axes.
  CHECK_NOTHROW(parse_config(R"({"experiment":"bspde-y","axis":"space"})"));
  CHECK_NOTHROW(parse_config(R"({"experiment":"bspde-y","axis":"time"})"));

  const auto cfg = parse_config(
      R"({"experiment":"bspde-z","n_cells":16,"seed":7,
          "sigma":{"kind":"sine","coeffs":[2.0,1.0]}})");
  CHECK(cfg.experiment == "bspde-z");
  CHECK(cfg.n_cells == 16);
  CHECK(cfg.seed == 7);
  CHECK(cfg.sigma.kind == "sine");
  REQUIRE(cfg.sigma.coeffs.size() == 2);
  CHECK(cfg.sigma.coeffs[0] == 2.0);
}

TEST_CASE("config round-trips through its JSON echo") {
  auto cfg = default_config("slq-time");
  cfg.n_cells = 24;
  cfg.seed = 99;
  cfg.ladder = {4, 8, 16};
  cfg.reference = 128;
  cfg.xtilde = Profile{"poly", {0.0, 1.0}};
  const auto back = parse_config(config_to_json(cfg));
  CHECK(back.experiment == cfg.experiment);
  CHECK(back.n_cells == cfg.n_cells);
  CHECK(back.seed == cfg.seed);
  CHECK(back.ladder == cfg.ladder);
  CHECK(back.reference == cfg.reference);
  CHECK(back.xtilde.kind == "poly");
  CHECK(back.xtilde.coeffs == cfg.xtilde.coeffs);
  CHECK(back.T == cfg.T);
  CHECK(back.kappa == cfg.kappa);
}

TEST_CASE("fitted order recovers synthetic slopes") {
  const std::vector<double> taus{0.125, 0.0625, 0.03125, 0.015625};
  std::vector<double> clean, noisy;
  for (size_t i = 0; i < taus.size(); ++i) {
    clean.push_back(0.7 * taus[i]);
    const double jitter = 1.0 + 0.01 * ((i % 2 == 0) ? 1.0 : -1.0);
    noisy.push_back(0.7 * taus[i] * jitter);
  }
  CHECK(observed_order(taus, clean) == doctest::Approx(1.0).epsilon(1e-12));
  const double slope = observed_order(taus, noisy);
  CHECK(slope >= 0.95);
  CHECK(slope <= 1.05);

  // Quadratic decay in the parameter doubles the slope.
  std::vector<double> quad;
  for (double t : taus) quad.push_back(3.0 * t * t);
  CHECK(observed_order(taus, quad) == doctest::Approx(2.0).epsilon(1e-12));

  CHECK_THROWS_AS(observed_order({0.1}, {0.1}), InvalidArgument);
  CHECK_THROWS_AS(observed_order({0.1, 0.2}, {0.1}), InvalidArgument);
  CHECK_THROWS_AS(observed_order({0.1, 0.2}, {0.1, 0.0}), InvalidArgument);
}

namespace {

std::string csv_of(const Report& report) {
  std::ostringstream os;
  write_report_csv(report, os);
  return os.str();
}

}  // namespace

TEST_CASE("small temporal sweep converges at first order and reproduces") {
  auto cfg = default_config("forward-time");
  cfg.n_cells = 8;
  cfg.ladder = {4, 8, 16};
  cfg.reference = 128;
  const auto report = run_experiment(cfg);

  REQUIRE(report.rows.size() == 3);
  CHECK(report.summary.count("order_state") == 1);
  CHECK(report.summary.at("order_state") >= 0.9);
  CHECK(report.all_passed);
  for (const auto& row : report.rows) {
    CHECK(row.metric == "state");
    CHECK(row.squared_error > 0.0);
    CHECK(row.passed);
  }
  // Levels carry the ladder sizes and their step widths.
  CHECK(report.rows[0].level == 4);
  CHECK(report.rows[0].tau == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(report.rows[2].level == 16);

  // Identical config, identical bytes.
  const auto again = run_experiment(cfg);
  CHECK(csv_of(report) == csv_of(again));
}

TEST_CASE("small spatial sweep converges at second order") {
  auto cfg = default_config("forward-space");
  cfg.n_steps = 16;
  cfg.ladder = {4, 8, 16};
  cfg.reference = 64;
  const auto report = run_experiment(cfg);
  CHECK(report.summary.at("order_state") >= 1.8);
  CHECK(report.all_passed);
}

TEST_CASE("csv schema is pinned") {
  auto cfg = default_config("forward-time");
  cfg.n_cells = 8;
  cfg.ladder = {4, 8};
  cfg.reference = 32;
  const auto report = run_experiment(cfg);
  const std::string csv = csv_of(report);
  CHECK(csv.rfind(
            "level,h,tau,n_paths,metric,squared_error,std_err,fitted_order,"
            "passed\n",
            0) == 0);
  // One line per row plus the header, each with nine fields.
  std::istringstream is(csv);
  std::string line;
  int lines = 0;
  while (std::getline(is, line)) {
    ++lines;
    CHECK(std::count(line.begin(), line.end(), ',') == 8);
  }
  CHECK(lines == 1 + static_cast<int>(report.rows.size()));
}

TEST_CASE("sidecar json echoes the config and the outcome") {
  auto cfg = default_config("forward-time");
  cfg.n_cells = 8;
  cfg.ladder = {4, 8};
  cfg.reference = 32;
  const auto report = run_experiment(cfg);
  const std::string sidecar = report_sidecar_json(cfg, report);
  CHECK(sidecar.find("\"config\"") != std::string::npos);
  CHECK(sidecar.find("\"all_passed\"") != std::string::npos);
  CHECK(sidecar.find("\"wall_seconds\"") != std::string::npos);
  CHECK(sidecar.find("\"version\"") != std::string::npos);
  CHECK(sidecar.find("\"summary\"") != std::string::npos);
  CHECK(sidecar.find("forward-time") != std::string::npos);
}

TEST_CASE("gradient-descent study verifies its bounds") {
  auto cfg = default_config("gd-contraction");
  cfg.n_cells = 4;
  cfg.n_steps = 4;
  cfg.gd_iters = 8;
  const auto report = run_experiment(cfg);
  CHECK(report.all_passed);
  CHECK(report.summary.at("contraction_ok") == 1.0);
  CHECK(report.summary.at("gap_ok") == 1.0);
  CHECK(report.summary.at("kappa") == doctest::Approx(3.0).epsilon(1e-14));
  CHECK(report.summary.at("d0_sq") > 0.0);

  bool saw_dist = false, saw_gap = false, saw_grad = false;
  for (const auto& row : report.rows) {
    saw_dist = saw_dist || row.metric == "dist_sq";
    saw_gap = saw_gap || row.metric == "cost_gap";
    saw_grad = saw_grad || row.metric == "grad_norm_sq";
  }
  CHECK(saw_dist);
  CHECK(saw_gap);
  CHECK(saw_grad);
}

TEST_CASE("oracle crosscheck passes at reduced scale") {
  auto cfg = default_config("oracle-crosscheck");
  cfg.n_cells = 4;
  cfg.n_steps = 4;
  cfg.n_paths = 2000;
  cfg.replicas = 3;
  const auto report = run_experiment(cfg);
  CHECK(report.all_passed);

  bool saw_tree = false, saw_reg = false;
  for (const auto& row : report.rows) {
    if (row.metric == "tree_forward_gap" || row.metric == "tree_backward_y_gap" ||
        row.metric == "tree_backward_z_gap") {
      saw_tree = true;
      CHECK(row.squared_error <= 1e-12);
    }
    if (row.metric == "regression_y0_gap" || row.metric == "regression_z0_gap") {
      saw_reg = true;
      CHECK(row.passed);
    }
  }
  CHECK(saw_tree);
  CHECK(saw_reg);

  // Same seed, same bytes; a different seed moves the regression rows.
  const auto again = run_experiment(cfg);
  CHECK(csv_of(report) == csv_of(again));
}

TEST_CASE("run_experiment validates before running") {
  auto cfg = default_config("forward-time");
  cfg.ladder = {8, 24};  // consecutive ratio is not a power of two
  CHECK_THROWS_AS(run_experiment(cfg), ConfigError);

  auto cfg2 = default_config("gd-contraction");
  cfg2.kappa = -1.0;
  CHECK_THROWS_AS(run_experiment(cfg2), ConfigError);
}
