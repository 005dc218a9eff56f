// Command-line front end: single solves, convergence traces, relaxation and
// misestimation tables, and a derivative check of the built-in problems.

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "noisy_sqp/noisy_sqp.hpp"

namespace {

using namespace noisy_sqp;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitLineSearch = 2;
constexpr int kExitSingular = 3;
constexpr int kExitFailure = 4;

struct SolverFlags {
  std::string config_path;
  std::optional<double> nu, tau, beta, pi_init, alpha_init;
  std::optional<int> max_backtracks;
  bool no_relaxation = false;
  bool no_stop = false;

  void attach(CLI::App* app) {
    app->add_option("--config", config_path,
                    "JSON file with SolverConfig fields")
        ->check(CLI::ExistingFile);
    app->add_option("--nu", nu, "Armijo fraction (default 0.1)");
    app->add_option("--tau", tau, "penalty margin (default 0.9)");
    app->add_option("--beta", beta, "Hessian multiple (default 50)");
    app->add_option("--pi-init", pi_init, "initial penalty (default 1)");
    app->add_option("--alpha-init", alpha_init, "first trial step (default 1)");
    app->add_option("--max-backtracks", max_backtracks,
                    "halvings before a line-search failure (default 50)");
  }

  /// Base config from --config plus flag overrides. Sets `explicit_est` when
  /// the file fixed the noise estimates.
  SolverConfig build(bool& explicit_est) const {
    LoadedConfig loaded;
    if (!config_path.empty()) loaded = load_config_file(config_path);
    explicit_est = loaded.has_estimates;
    SolverConfig c = loaded.config;
    if (nu) c.nu = *nu;
    if (tau) c.tau = *tau;
    if (beta) c.beta = *beta;
    if (pi_init) c.pi_init = *pi_init;
    if (alpha_init) c.alpha_init = *alpha_init;
    if (max_backtracks) c.max_backtracks = *max_backtracks;
    if (no_relaxation) c.relaxation_enabled = false;
    if (no_stop) c.stop_on_optimality = false;
    c.validate();
    return c;
  }
};

unsigned resolve_jobs(std::optional<unsigned> flag) {
  if (flag && *flag > 0) return *flag;
  if (const char* env = std::getenv("NOISY_SQP_JOBS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v > 0) return static_cast<unsigned>(v);
  }
  return default_jobs();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path);
  f << text;
  if (!f) throw std::runtime_error("failed writing " + path);
}

std::string vec_str(const Vector& v) {
  std::string s = "(";
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (i) s += ", ";
    s += format_double(v[i]);
  }
  return s + ")";
}

int exit_code(SolverStatus s) {
  switch (s) {
    case SolverStatus::kLineSearchFailure: return kExitLineSearch;
    case SolverStatus::kSingularJacobian: return kExitSingular;
    default: return kExitOk;
  }
}

// --- solve -----------------------------------------------------------------

struct SolveArgs {
  std::string problem;
  double eps1 = 0.0, eps2 = 0.0;
  std::uint64_t seed = 1;
  std::optional<int> iters;
  double est_multiplier = 1.0;
  std::string out;
  std::string format = "text";
  SolverFlags solver;
};

int run_solve(const SolveArgs& a) {
  const Problem p = get_problem(a.problem);
  const NoiseSpec noise{a.eps1, a.eps2, a.seed};
  noise.validate();
  bool explicit_est = false;
  SolverConfig cfg = a.solver.build(explicit_est);
  if (a.iters) cfg.max_iters = *a.iters;
  if (!explicit_est) {
    cfg.set_estimates(derived_bounds(noise, p.n, p.m).scaled(a.est_multiplier));
  }
  cfg.validate();

  const ReferenceSolution& ref = reference_solution(p.name);
  SolveOptions opts;
  opts.x_ref = ref.x_star;
  opts.exact_psi = !a.out.empty();
  const SolveResult r = solve(p, noise, cfg, opts);

  const Vector g = p.eval_g(r.x);
  const Vector c = p.eval_c(r.x);
  const Matrix J = p.eval_J(r.x);
  double kkt = std::numeric_limits<double>::quiet_NaN();
  try {
    kkt = kkt_residual(g, J, kkt_multiplier(J, g));
  } catch (const SingularJacobian&) {
  }
  double min_dist = (r.x - ref.x_star).norm();
  for (const auto& rec : r.trace) min_dist = std::min(min_dist, rec.dist_to_ref);

  if (a.format == "json") {
    nlohmann::json j{{"problem", p.name},
                     {"status", std::string(to_string(r.status))},
                     {"iterations", r.final_iter},
                     {"failure_iter", r.failure_iter
                                          ? nlohmann::json(*r.failure_iter)
                                          : nlohmann::json(nullptr)},
                     {"x", std::vector<double>(r.x.data(),
                                               r.x.data() + r.x.size())},
                     {"f", p.eval_f(r.x)},
                     {"feasibility_l1", c.lpNorm<1>()},
                     {"kkt_residual", kkt},
                     {"final_pi", r.final_pi},
                     {"min_dist", min_dist},
                     {"config", config_to_json(cfg)}};
    std::cout << j.dump(2) << "\n";
  } else {
    std::cout << "problem       " << p.name << "\n"
              << "status        " << to_string(r.status) << "\n"
              << "iterations    " << r.final_iter << "\n";
    if (r.failure_iter) {
      std::cout << "failure iter  " << *r.failure_iter << "\n";
    }
    std::cout << "x             " << vec_str(r.x) << "\n"
              << "f(x)          " << format_double(p.eval_f(r.x)) << "\n"
              << "||c(x)||_1    " << format_double(c.lpNorm<1>()) << "\n"
              << "kkt residual  " << format_double(kkt) << "\n"
              << "final pi      " << format_double(r.final_pi) << "\n"
              << "min dist x*   " << format_double(min_dist) << "\n";
  }
  if (!a.out.empty()) write_file(a.out, trace_csv(r.trace));
  return exit_code(r.status);
}

// --- trace -----------------------------------------------------------------

struct TraceArgs {
  std::string problem;
  double eps1 = 1e-3, eps2 = 1e-3;
  std::uint64_t seed = 1;
  int iters = 1000;
  std::string out;
  SolverFlags solver;
};

int run_trace(const TraceArgs& a) {
  bool explicit_est = false;
  const SolverConfig base = a.solver.build(explicit_est);
  RunSpec spec = trace_run_spec(a.problem, a.eps1, a.eps2, a.seed, a.iters, base);
  spec.noise.validate();
  const RunOutcome out = run_trace_experiment(spec, a.out);
  const auto& tr = out.result.trace;
  std::cout << "wrote " << tr.size() << " rows to " << a.out << " (status "
            << to_string(out.result.status) << ")\n";
  return exit_code(out.result.status);
}

// --- tables / misest -------------------------------------------------------

struct TableArgs {
  std::vector<std::string> problems{"HS7", "BT11", "HS40"};
  std::vector<double> eps{1e-5, 1e-3, 1e-1};
  int seeds = 10;
  std::uint64_t first_seed = 1;
  std::vector<int> k_max{100, 500, 1000};
  std::vector<double> multipliers;  // misest only; empty = per-level defaults
  int max_iters = 10000;            // misest only
  std::string out;
  std::string format = "text";
  std::optional<unsigned> jobs;
  SolverFlags solver;
};

ExperimentPlan base_plan(const TableArgs& a) {
  ExperimentPlan plan;
  plan.problems = a.problems;
  for (int i = 0; i < a.seeds; ++i) {
    plan.seeds.push_back(a.first_seed + static_cast<std::uint64_t>(i));
  }
  bool explicit_est = false;
  plan.base = a.solver.build(explicit_est);
  return plan;
}

void emit(const TableArgs& a, const std::string& table,
          const std::vector<RunSummary>& rows) {
  const std::string text = a.format == "json" ? summaries_json(table, rows)
                                              : summaries_text(rows);
  if (a.out.empty()) {
    std::cout << text;
  } else {
    write_file(a.out, text);
    std::cout << "wrote " << rows.size() << " rows to " << a.out << "\n";
  }
}

int run_tables(const TableArgs& a) {
  ExperimentPlan plan = base_plan(a);
  for (double e : a.eps) plan.eps_levels.emplace_back(e, e);
  plan.k_max_values = a.k_max;
  plan.relaxation_modes = {false, true};
  plan.est_multipliers = {1.0};
  emit(a, "relaxation", run_relaxation_table(plan, resolve_jobs(a.jobs)));
  return kExitOk;
}

int run_misest(const TableArgs& a) {
  std::vector<RunSummary> rows;
  for (double e : a.eps) {
    ExperimentPlan plan = base_plan(a);
    plan.eps_levels = {{e, e}};
    plan.k_max_values = {a.max_iters};
    plan.relaxation_modes = {true};
    plan.est_multipliers = a.multipliers.empty() ? table_multipliers(e)
                                                 : a.multipliers;
    const auto part = run_misestimation_table(plan, resolve_jobs(a.jobs));
    rows.insert(rows.end(), part.begin(), part.end());
  }
  emit(a, "misestimation", rows);
  return kExitOk;
}

// --- check -----------------------------------------------------------------

struct CheckArgs {
  int points = 100;
  double h = 1e-6;
  double tol = 1e-5;
  std::uint64_t seed = 1;
};

int run_check(const CheckArgs& a) {
  std::mt19937_64 rng(a.seed);
  std::uniform_real_distribution<double> box(-2.0, 2.0);
  bool ok = true;
  for (auto name : kProblemNames) {
    const Problem p = get_problem(name);
    double worst = verify_derivatives(p, p.x_start, a.h);
    for (int i = 0; i < a.points; ++i) {
      Vector x = p.x_start;
      for (Eigen::Index j = 0; j < x.size(); ++j) x[j] += box(rng);
      worst = std::max(worst, verify_derivatives(p, x, a.h));
    }
    const bool pass = worst <= a.tol;
    ok = ok && pass;
    std::cout << p.name << "  max relative error " << format_double(worst)
              << (pass ? "  ok" : "  FAIL") << "\n";
  }
  return ok ? kExitOk : kExitFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Noise-tolerant SQP solver and experiment runner"};
  app.require_subcommand(1);

  SolveArgs solve_args;
  auto* solve_cmd = app.add_subcommand("solve", "solve one problem");
  solve_cmd->add_option("--problem", solve_args.problem, "HS7 | BT11 | HS40")
      ->required();
  solve_cmd->add_option("--eps1", solve_args.eps1, "value noise half-width");
  solve_cmd->add_option("--eps2", solve_args.eps2, "derivative noise half-width");
  solve_cmd->add_option("--seed", solve_args.seed, "noise seed");
  solve_cmd->add_option("--iters,--max-iters", solve_args.iters,
                        "iteration limit (default 1000)");
  solve_cmd->add_flag("--no-relaxation", solve_args.solver.no_relaxation,
                      "plain Armijo line search");
  solve_cmd->add_flag("--no-stop", solve_args.solver.no_stop,
                      "ignore the noisy optimality test");
  solve_cmd->add_option("--est-multiplier", solve_args.est_multiplier,
                        "scale applied to the true noise bounds");
  solve_cmd->add_option("--out", solve_args.out, "write the trace CSV here");
  solve_cmd->add_option("--format", solve_args.format)
      ->check(CLI::IsMember({"text", "json"}));
  solve_args.solver.attach(solve_cmd);

  TraceArgs trace_args;
  auto* trace_cmd = app.add_subcommand("trace", "write a convergence trace CSV");
  trace_cmd->add_option("--problem", trace_args.problem)->required();
  trace_cmd->add_option("--eps1", trace_args.eps1);
  trace_cmd->add_option("--eps2", trace_args.eps2);
  trace_cmd->add_option("--seed", trace_args.seed);
  trace_cmd->add_option("--iters", trace_args.iters);
  trace_cmd->add_flag("--no-relaxation", trace_args.solver.no_relaxation);
  trace_cmd->add_option("--out", trace_args.out)->required();
  trace_args.solver.attach(trace_cmd);

  TableArgs table_args;
  auto* tables_cmd =
      app.add_subcommand("tables", "relaxation on/off comparison tables");
  TableArgs misest_args;
  auto* misest_cmd =
      app.add_subcommand("misest", "noise misestimation tables");
  for (auto [cmd, args] : {std::pair{tables_cmd, &table_args},
                           std::pair{misest_cmd, &misest_args}}) {
    cmd->add_option("--problems", args->problems);
    cmd->add_option("--eps", args->eps, "noise levels (eps1 = eps2)");
    cmd->add_option("--seeds", args->seeds, "number of seeds")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--first-seed", args->first_seed);
    cmd->add_option("--out", args->out);
    cmd->add_option("--format", args->format)
        ->check(CLI::IsMember({"text", "json"}));
    cmd->add_option("--jobs", args->jobs, "worker threads");
    args->solver.attach(cmd);
  }
  tables_cmd->add_option("--k-max", table_args.k_max);
  misest_cmd->add_option("--multipliers", misest_args.multipliers);
  misest_cmd->add_option("--max-iters", misest_args.max_iters);

  CheckArgs check_args;
  auto* check_cmd =
      app.add_subcommand("check", "compare analytic derivatives with central differences");
  check_cmd->add_option("--points", check_args.points);
  check_cmd->add_option("--step", check_args.h, "central-difference step");
  check_cmd->add_option("--tol", check_args.tol);

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }

  try {
    if (*solve_cmd) return run_solve(solve_args);
    if (*trace_cmd) return run_trace(trace_args);
    if (*tables_cmd) return run_tables(table_args);
    if (*misest_cmd) return run_misest(misest_args);
    if (*check_cmd) return run_check(check_args);
  } catch (const ContractViolation& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const UnknownProblem& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitUsage;
}
