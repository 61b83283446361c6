// Command-line experiment driver. Subcommands:
//   rates       refinement sweep with fitted convergence orders
//   gd          gradient-descent guarantee study
//   crosscheck  cross-backend conditional-expectation oracle checks
//   describe    print the fully resolved configuration
// Exit codes: 0 success, 2 configuration error, 3 checks failed.

#include <slqheat/errors.hpp>
#include <slqheat/experiments.hpp>
#include <slqheat/version.hpp>

#include <CLI11.hpp>

#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitChecksFailed = 3;

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw slqheat::ConfigError("cannot open config file '" + path + "'");
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

struct CommonOptions {
  std::string config_path;
  std::string out_path;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int threads = 0;
};

void add_common(CLI::App* cmd, CommonOptions& opt) {
  cmd->add_option("--config", opt.config_path, "JSON experiment config")
      ->required();
  cmd->add_option("--out", opt.out_path,
                  "CSV output path (a JSON sidecar is written next to it); "
                  "stdout when omitted");
  cmd->add_option("--seed", opt.seed, "override the config seed")
      ->each([&opt](const std::string&) { opt.seed_set = true; });
  cmd->add_option("--threads", opt.threads, "override the config thread count")
      ->check(CLI::PositiveNumber);
}

int run_command(const CommonOptions& opt, const std::string& expected_kind) {
  slqheat::ExperimentConfig cfg =
      slqheat::parse_config(read_file(opt.config_path));
  if (opt.seed_set) cfg.seed = opt.seed;
  if (opt.threads > 0) cfg.threads = opt.threads;

  const bool is_rate = cfg.experiment != "gd-contraction" &&
                       cfg.experiment != "oracle-crosscheck";
  if (expected_kind == "rates" && !is_rate) {
    throw slqheat::ConfigError("experiment '" + cfg.experiment +
                               "' does not run under 'rates'");
  }
  if (expected_kind == "gd" && cfg.experiment != "gd-contraction") {
    throw slqheat::ConfigError("'gd' expects a gd-contraction config");
  }
  if (expected_kind == "crosscheck" &&
      cfg.experiment != "oracle-crosscheck") {
    throw slqheat::ConfigError(
        "'crosscheck' expects an oracle-crosscheck config");
  }

  const slqheat::Report report = slqheat::run_experiment(cfg);
  if (opt.out_path.empty()) {
    slqheat::write_report_csv(report, std::cout);
  } else {
    std::ofstream csv(opt.out_path);
    if (!csv) {
      throw slqheat::ConfigError("cannot write '" + opt.out_path + "'");
    }
    slqheat::write_report_csv(report, csv);
    std::ofstream sidecar(opt.out_path + ".json");
    sidecar << slqheat::report_sidecar_json(cfg, report) << '\n';
    std::cout << cfg.experiment << ": "
              << (report.all_passed ? "PASS" : "FAIL") << " ("
              << report.wall_seconds << " s) -> " << opt.out_path << '\n';
  }
  return report.all_passed ? kExitOk : kExitChecksFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Experiment driver for the stochastic heat control solver"};
  app.set_version_flag("--version", std::string(slqheat::kGitDescribe));
  app.require_subcommand(1);

  CommonOptions rates_opt;
  CLI::App* rates = app.add_subcommand("rates", "run a refinement sweep");
  add_common(rates, rates_opt);

  CommonOptions gd_opt;
  CLI::App* gd = app.add_subcommand("gd", "run the gradient-descent study");
  add_common(gd, gd_opt);

  CommonOptions cross_opt;
  CLI::App* cross =
      app.add_subcommand("crosscheck", "run cross-backend oracle checks");
  add_common(cross, cross_opt);

  CommonOptions describe_opt;
  CLI::App* describe =
      app.add_subcommand("describe", "print the resolved config");
  add_common(describe, describe_opt);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (describe->parsed()) {
      slqheat::ExperimentConfig cfg =
          slqheat::parse_config(read_file(describe_opt.config_path));
      if (describe_opt.seed_set) cfg.seed = describe_opt.seed;
      if (describe_opt.threads > 0) cfg.threads = describe_opt.threads;
      std::cout << slqheat::config_to_json(cfg) << '\n';
      return kExitOk;
    }
    if (rates->parsed()) return run_command(rates_opt, "rates");
    if (gd->parsed()) return run_command(gd_opt, "gd");
    return run_command(cross_opt, "crosscheck");
  } catch (const slqheat::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const slqheat::InvalidArgument& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
