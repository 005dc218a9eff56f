#pragma once

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <iomanip>
#include <limits>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "noisy_sqp/problem.hpp"
#include "noisy_sqp/solver.hpp"
#include "noisy_sqp/test_problems.hpp"

namespace noisy_sqp {

/**
 * Cartesian product of settings to sweep. Which lists are used depends on
 * the experiment: the relaxation table reads relaxation_modes and k_max
 * values, the misestimation table reads est_multipliers.
 */
struct ExperimentPlan {
  std::vector<std::string> problems;
  std::vector<std::pair<double, double>> eps_levels;
  std::vector<std::uint64_t> seeds;
  std::vector<int> k_max_values;
  std::vector<bool> relaxation_modes;
  std::vector<double> est_multipliers;
  /// Settings shared by every run; estimates and relaxation are overridden.
  SolverConfig base;
  JacobianBound jacobian_bound = JacobianBound::kInducedWorstCase;

  void validate() const {
    if (problems.empty() || eps_levels.empty() || seeds.empty() ||
        k_max_values.empty() || relaxation_modes.empty() ||
        est_multipliers.empty()) {
      throw ContractViolation("experiment plan lists must be non-empty");
    }
    for (double mult : est_multipliers) {
      if (!(mult > 0.0)) {
        throw ContractViolation("estimate multipliers must be positive");
      }
    }
    for (int k : k_max_values) {
      if (k <= 0) throw ContractViolation("k_max values must be positive");
    }
    for (const auto& name : problems) get_problem(name);
  }

  int max_k() const {
    return *std::max_element(k_max_values.begin(), k_max_values.end());
  }
};

/// Estimate multipliers used for each noise level of the misestimation study.
inline std::vector<double> table_multipliers(double eps) {
  if (eps <= 1e-5 * 1.0000001) return {1.0, 1e-3, 1e3};
  if (eps <= 1e-3 * 1.0000001) return {1.0, 1e-2, 1e2};
  return {1.0, 1e-1, 1e1};
}

enum class TerminationKind { kOpt, kLineSearch, kMaxIters, kSingular };

inline std::string_view to_string(TerminationKind t) {
  switch (t) {
    case TerminationKind::kOpt: return "opt";
    case TerminationKind::kLineSearch: return "ls";
    case TerminationKind::kMaxIters: return "max_iters";
    case TerminationKind::kSingular: return "singular";
  }
  return "unknown";
}

inline TerminationKind termination_kind(SolverStatus s) {
  switch (s) {
    case SolverStatus::kConverged: return TerminationKind::kOpt;
    case SolverStatus::kLineSearchFailure: return TerminationKind::kLineSearch;
    case SolverStatus::kMaxIters: return TerminationKind::kMaxIters;
    case SolverStatus::kSingularJacobian: return TerminationKind::kSingular;
  }
  return TerminationKind::kMaxIters;
}

struct RunSummary {
  std::string problem;
  double eps1 = 0.0;
  double eps2 = 0.0;
  std::uint64_t seed = 0;
  bool relaxation = true;
  double est_multiplier = 1.0;
  int k_max = 0;
  SolverStatus status = SolverStatus::kMaxIters;
  std::optional<int> failure_iter;
  double min_dist = 0.0;  ///< min over x_0..x_K of ∥x_k − x*∥, K ≤ k_max
  int min_dist_iter = 0;
  int iters_run = 0;
  TerminationKind termination = TerminationKind::kMaxIters;
  double final_pi = 0.0;
  bool pi_monotone = true;
  /// First iteration from which π stays at its final value.
  int pi_fixed_from = 0;
};

/// One solver run of an experiment.
struct RunSpec {
  std::string problem;
  NoiseSpec noise;
  bool relaxation = true;
  double est_multiplier = 1.0;
  int max_iters = 1000;
  bool stop_on_optimality = false;
  bool exact_psi = false;
  SolverConfig base;
  JacobianBound jacobian_bound = JacobianBound::kInducedWorstCase;
};

struct RunOutcome {
  SolveResult result;
  /// ∥x_k − x*∥ for k = 0..final_iter
  std::vector<double> dist;
};

inline SolverConfig make_config(const RunSpec& spec, const Problem& p) {
  SolverConfig cfg = spec.base;
  cfg.relaxation_enabled = spec.relaxation;
  cfg.max_iters = spec.max_iters;
  cfg.stop_on_optimality = spec.stop_on_optimality;
  cfg.set_estimates(derived_bounds(spec.noise, p.n, p.m, spec.jacobian_bound)
                        .scaled(spec.est_multiplier));
  return cfg;
}

inline RunOutcome execute_run(const RunSpec& spec) {
  const Problem p = get_problem(spec.problem);
  const ReferenceSolution& ref = reference_solution(spec.problem);
  SolveOptions opts;
  opts.x_ref = ref.x_star;
  opts.exact_psi = spec.exact_psi;
  RunOutcome out;
  out.result = solve(p, spec.noise, make_config(spec, p), opts);
  out.dist.reserve(out.result.trace.size() + 1);
  for (const auto& rec : out.result.trace) out.dist.push_back(rec.dist_to_ref);
  // The failing iteration does not move x, so x_K is already in the trace.
  if (out.result.status != SolverStatus::kLineSearchFailure) {
    out.dist.push_back((out.result.x - ref.x_star).norm());
  }
  return out;
}

/// Summary of the first k_max iterations of a run (the whole run if k_max ≤ 0).
inline RunSummary summarize(const RunSpec& spec, const RunOutcome& out,
                            int k_max = 0) {
  const SolveResult& r = out.result;
  RunSummary s;
  s.problem = spec.problem;
  s.eps1 = spec.noise.eps1;
  s.eps2 = spec.noise.eps2;
  s.seed = spec.noise.seed;
  s.relaxation = spec.relaxation;
  s.est_multiplier = spec.est_multiplier;
  s.k_max = k_max > 0 ? k_max : spec.max_iters;

  const bool truncated = k_max > 0 && k_max < r.final_iter;
  if (truncated) {
    s.status = SolverStatus::kMaxIters;
    s.iters_run = k_max;
  } else {
    s.status = r.status;
    s.failure_iter = r.failure_iter;
    s.iters_run = r.final_iter;
  }
  s.termination = termination_kind(s.status);

  const std::size_t last =
      std::min<std::size_t>(static_cast<std::size_t>(s.iters_run),
                            out.dist.size() - 1);
  s.min_dist = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k <= last; ++k) {
    if (out.dist[k] < s.min_dist) {
      s.min_dist = out.dist[k];
      s.min_dist_iter = static_cast<int>(k);
    }
  }

  const std::size_t n_rec =
      std::min(r.trace.size(), static_cast<std::size_t>(s.iters_run) +
                                   (s.failure_iter ? 1 : 0));
  if (n_rec > 0) {
    const double final_pi = r.trace[n_rec - 1].pi;
    s.final_pi = final_pi;
    s.pi_fixed_from = 0;
    for (std::size_t k = 0; k < n_rec; ++k) {
      if (k > 0 && r.trace[k].pi < r.trace[k - 1].pi) s.pi_monotone = false;
      if (r.trace[k].pi != final_pi) s.pi_fixed_from = static_cast<int>(k) + 1;
    }
  } else {
    s.final_pi = r.final_pi;
  }
  return s;
}

/**
 * Runs task(i) for i in [0, count) on up to `jobs` threads and returns the
 * results in index order.
 */
template <typename T>
std::vector<T> parallel_map(std::size_t count, unsigned jobs,
                            const std::function<T(std::size_t)>& task) {
  std::vector<T> out(count);
  jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(count)));
  if (jobs <= 1) {
    for (std::size_t i = 0; i < count; ++i) out[i] = task(i);
    return out;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(jobs);
  {
    std::vector<std::jthread> workers;
    for (unsigned w = 0; w < jobs; ++w) {
      workers.emplace_back([&, w] {
        try {
          for (std::size_t i = next++; i < count; i = next++) out[i] = task(i);
        } catch (...) {
          errors[w] = std::current_exception();
          next = count;
        }
      });
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

inline unsigned default_jobs() {
  return std::max(1u, std::thread::hardware_concurrency());
}

/**
 * Relaxation on/off comparison. Every run goes to max(k_max) iterations (or
 * until a line-search failure) without the optimality stop. Relaxed runs
 * yield one summary per k_max, taken from prefixes of the same run;
 * unrelaxed runs yield a single summary.
 */
inline std::vector<RunSummary> run_relaxation_table(
    const ExperimentPlan& plan, unsigned jobs = default_jobs()) {
  plan.validate();
  std::vector<RunSpec> specs;
  for (const auto& name : plan.problems) {
    for (const auto& [e1, e2] : plan.eps_levels) {
      for (bool relax : plan.relaxation_modes) {
        for (std::uint64_t seed : plan.seeds) {
          RunSpec s;
          s.problem = name;
          s.noise = {e1, e2, seed};
          s.relaxation = relax;
          s.max_iters = plan.max_k();
          s.stop_on_optimality = false;
          s.base = plan.base;
          s.jacobian_bound = plan.jacobian_bound;
          specs.push_back(std::move(s));
        }
      }
    }
  }
  std::vector<int> k_values = plan.k_max_values;
  std::sort(k_values.begin(), k_values.end());
  k_values.erase(std::unique(k_values.begin(), k_values.end()), k_values.end());

  const auto per_run = parallel_map<std::vector<RunSummary>>(
      specs.size(), jobs, [&](std::size_t i) {
        const RunOutcome out = execute_run(specs[i]);
        std::vector<RunSummary> rows;
        if (specs[i].relaxation) {
          for (int k : k_values) rows.push_back(summarize(specs[i], out, k));
        } else {
          rows.push_back(summarize(specs[i], out));
        }
        return rows;
      });
  std::vector<RunSummary> rows;
  for (const auto& r : per_run) rows.insert(rows.end(), r.begin(), r.end());
  return rows;
}

/**
 * Runs with estimates scaled by each multiplier, relaxation on, stopping on
 * the noisy optimality test. max(k_max) caps the iteration count.
 */
inline std::vector<RunSummary> run_misestimation_table(
    const ExperimentPlan& plan, unsigned jobs = default_jobs()) {
  plan.validate();
  std::vector<RunSpec> specs;
  for (const auto& name : plan.problems) {
    for (const auto& [e1, e2] : plan.eps_levels) {
      for (double mult : plan.est_multipliers) {
        for (std::uint64_t seed : plan.seeds) {
          RunSpec s;
          s.problem = name;
          s.noise = {e1, e2, seed};
          s.relaxation = true;
          s.est_multiplier = mult;
          s.max_iters = plan.max_k();
          s.stop_on_optimality = true;
          s.base = plan.base;
          s.jacobian_bound = plan.jacobian_bound;
          specs.push_back(std::move(s));
        }
      }
    }
  }
  return parallel_map<RunSummary>(specs.size(), jobs, [&](std::size_t i) {
    return summarize(specs[i], execute_run(specs[i]));
  });
}

// ---------------------------------------------------------------------------
// Serialization

/// Shortest decimal that round-trips to the same double.
inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline constexpr std::string_view kTraceHeader =
    "k,dist,log2_dist,alpha,pi,merit_noisy,psi,backtracks";

inline std::string trace_csv(const std::vector<IterateRecord>& trace) {
  std::string out(kTraceHeader);
  out += '\n';
  for (const auto& r : trace) {
    out += std::to_string(r.k);
    for (double v : {r.dist_to_ref, std::log2(r.dist_to_ref), r.alpha, r.pi,
                     r.merit_noisy, r.psi}) {
      out += ',';
      out += format_double(v);
    }
    out += ',';
    out += std::to_string(r.backtracks);
    out += '\n';
  }
  return out;
}

/// The trace settings: relaxation on, exact estimates, no optimality stop.
inline RunSpec trace_run_spec(const std::string& problem, double eps1,
                              double eps2, std::uint64_t seed, int iters,
                              const SolverConfig& base = {}) {
  RunSpec s;
  s.problem = problem;
  s.noise = {eps1, eps2, seed};
  s.relaxation = base.relaxation_enabled;
  s.max_iters = iters;
  s.stop_on_optimality = false;
  s.exact_psi = true;
  s.base = base;
  return s;
}

inline RunOutcome run_trace_experiment(const RunSpec& spec,
                                       const std::string& csv_path) {
  RunOutcome out = execute_run(spec);
  std::ofstream f(csv_path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + csv_path);
  f << trace_csv(out.result.trace);
  if (!f) throw std::runtime_error("failed writing " + csv_path);
  return out;
}

}  // namespace noisy_sqp
