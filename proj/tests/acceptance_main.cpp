// Acceptance gate for the solver stack: every shipped claim is re-verified
// here end to end, one line per criterion, with wall-clock budgets enforced.
// Exit code 0 means every criterion passed.

#include <slqheat/slqheat.hpp>

#include "support/checks.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

namespace {

using namespace slqheat;

struct Outcome {
  bool ok = true;
  std::string detail;
};

struct Criterion {
  std::string name;
  double budget_seconds;
  std::function<Outcome()> body;
};

std::string fmt(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.3g", x);
  return std::string(buf);
}

Outcome check_experiment(const ExperimentConfig& cfg,
                         const std::string& label) {
  const Report report = run_experiment(cfg);
  Outcome out;
  out.ok = report.all_passed;
  std::string orders;
  for (const auto& [key, value] : report.summary) {
    if (key.rfind("order_", 0) == 0) {
      orders += (orders.empty() ? "" : ", ") + key + "=" + fmt(value);
    }
  }
  out.detail = label + (orders.empty() ? "" : " (" + orders + ")");
  if (!report.all_passed) {
    for (const auto& row : report.rows) {
      if (!row.passed) {
        out.detail += " FAILED:" + row.metric + "=" + fmt(row.squared_error);
        break;
      }
    }
  }
  return out;
}

// Criterion 1: the three conditional-expectation backends agree — chaos and
// tree to rounding, regression within five replica standard errors.
Outcome criterion_backends() {
  return check_experiment(default_config("oracle-crosscheck"),
                          "chaos/tree <= 1e-12, regression within 5 SE");
}

// Criterion 2: the discrete optimality system holds node by node on
// exhaustive trees, and the Riccati feedback matches a brute-force
// quadratic minimizer over all adapted controls.
Outcome criterion_optimality_system() {
  Outcome out;
  double worst_residual = 0.0;

  struct Setup {
    int n_cells;
    int n_steps;
    bool random;
  };
  for (const Setup& s : {Setup{4, 5, false}, Setup{8, 6, false},
                         Setup{4, 6, true}}) {
    auto fx = s.random
                  ? checks::random_fixture(s.n_cells, s.n_steps, 0xACC0)
                  : checks::default_fixture(s.n_cells, s.n_steps);
    const auto ric = solve_riccati(fx->problem);
    const auto tree = enumerate_tree(fx->grid);
    const auto sol = closed_loop_paths(fx->problem, ric, tree.increments());
    const auto res = tree_residuals(fx->problem, tree, sol);
    worst_residual = std::max(worst_residual, res.max());
  }
  const bool residuals_ok = worst_residual <= 1e-10;

  double worst_dist = 0.0;
  for (std::uint64_t seed : {0xACC1ULL, 0xACC2ULL}) {
    auto fx = checks::random_fixture(4, 4, seed);
    const auto tree = enumerate_tree(fx->grid);
    const auto brute = tree_quadratic_minimizer(fx->problem, tree);
    const auto ric = solve_riccati(fx->problem);
    const auto sol = closed_loop_paths(fx->problem, ric, tree.increments());
    worst_dist = std::max(
        worst_dist,
        std::sqrt(control_dist_sq_paths(fx->problem, brute.U, sol.U)));
  }
  const bool brute_ok = worst_dist <= 1e-8;

  out.ok = residuals_ok && brute_ok;
  out.detail = "max node residual " + fmt(worst_residual) +
               " (tol 1e-10), brute-force control gap " + fmt(worst_dist) +
               " (tol 1e-8)";
  return out;
}

Outcome criterion_forward_time() {
  return check_experiment(default_config("forward-time"),
                          "squared-error slope vs tau >= 0.9");
}

Outcome criterion_forward_space() {
  return check_experiment(default_config("forward-space"),
                          "squared-error slope vs h >= 1.8");
}

// Criterion 5: backward-pair rates — adjoint state in time and space, plus
// the martingale integrand in time.
Outcome criterion_backward_rates() {
  Outcome out;
  std::string detail;

  auto y_time = default_config("bspde-y");
  const Outcome a = check_experiment(y_time, "y-time>=0.9");

  auto y_space = default_config("bspde-y");
  y_space.axis = "space";
  const Outcome b = check_experiment(y_space, "y-space>=1.8");

  const Outcome c = check_experiment(default_config("bspde-z"), "z-time>=0.9");

  out.ok = a.ok && b.ok && c.ok;
  out.detail = a.detail + "; " + b.detail + "; " + c.detail;
  return out;
}

Outcome criterion_slq_rates() {
  const Outcome a = check_experiment(default_config("slq-time"),
                                     "control/state/adjoint >= 0.9 vs tau");
  const Outcome b = check_experiment(default_config("slq-space"),
                                     "control/state/adjoint >= 1.8 vs h");
  Outcome out;
  out.ok = a.ok && b.ok;
  out.detail = a.detail + "; " + b.detail;
  return out;
}

Outcome criterion_gradient_descent() {
  return check_experiment(
      default_config("gd-contraction"),
      "per-step squared-distance ratio <= 1 - 1/kappa, gap <= 2k d0^2/l");
}

Outcome criterion_properties() {
  struct Named {
    const char* name;
    checks::PropertyResult (*fn)();
  };
  const Named battery[] = {
      {"fem-closed-forms", checks::check_fem_closed_forms},
      {"inverse-estimate", checks::check_inverse_estimate},
      {"projection-orthogonality", checks::check_projection_orthogonality},
      {"resolvent-contraction", checks::check_resolvent_contraction},
      {"forward-superposition", checks::check_forward_superposition},
      {"adjoint-identity", checks::check_adjoint_identity},
      {"best-approximation", checks::check_best_approximation},
      {"quadratic-expansion", checks::check_quadratic_expansion},
      {"gradient-vs-fd", checks::check_gradient_vs_fd},
  };
  Outcome out;
  int passed = 0;
  for (const Named& item : battery) {
    const auto r = item.fn();
    if (r.ok) {
      ++passed;
    } else {
      out.ok = false;
      out.detail += std::string(out.detail.empty() ? "" : "; ") + item.name +
                    ": " + r.detail;
    }
  }
  const int total = static_cast<int>(sizeof(battery) / sizeof(battery[0]));
  out.detail = std::to_string(passed) + "/" + std::to_string(total) +
               " properties" + (out.detail.empty() ? "" : "; " + out.detail);
  return out;
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {"backend-agreement", 10.0, criterion_backends},
      {"optimality-system", 30.0, criterion_optimality_system},
      {"forward-rate-time", 120.0, criterion_forward_time},
      {"forward-rate-space", 120.0, criterion_forward_space},
      {"backward-rates", 180.0, criterion_backward_rates},
      {"slq-rates", 300.0, criterion_slq_rates},
      {"gd-contraction", 60.0, criterion_gradient_descent},
      {"property-battery", 60.0, criterion_properties},
  };

  int failures = 0;
  for (const Criterion& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome outcome;
    try {
      outcome = c.body();
    } catch (const std::exception& e) {
      outcome.ok = false;
      outcome.detail = std::string("exception: ") + e.what();
    }
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();
    const bool in_budget = seconds <= c.budget_seconds;
    const bool ok = outcome.ok && in_budget;
    if (!ok) ++failures;
    std::printf("[%s] %-20s %7.2fs (budget %.0fs)  %s%s\n",
                ok ? "PASS" : "FAIL", c.name.c_str(), seconds,
                c.budget_seconds, outcome.detail.c_str(),
                in_budget ? "" : "  [over budget]");
    std::fflush(stdout);
  }

  std::printf("acceptance: %d/%d criteria passed\n",
              static_cast<int>(criteria.size()) - failures,
              static_cast<int>(criteria.size()));
  return failures == 0 ? 0 : 1;
}
