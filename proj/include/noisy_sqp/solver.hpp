#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string_view>
#include <vector>

#include "noisy_sqp/diagnostics.hpp"
#include "noisy_sqp/linear_kernels.hpp"
#include "noisy_sqp/problem.hpp"

namespace noisy_sqp {

/**
 * Parameters of the noise-tolerant SQP iteration.
 *
 * The eps_*_est fields are what the algorithm believes the noise bounds to
 * be; they need not match the NoiseSpec actually used to perturb the oracles.
 */
struct SolverConfig {
  double nu = 0.1;
  double tau = 0.9;
  double beta = 50.0;
  double pi_init = 1.0;
  bool relaxation_enabled = true;
  double eps_f_est = 0.0;
  double eps_c_est = 0.0;
  double eps_g_est = 0.0;
  double eps_J_est = 0.0;
  double alpha_init = 1.0;
  int max_backtracks = 50;
  int max_iters = 1000;
  /// Stop as soon as the noisy feasibility/optimality test passes. When off,
  /// the run only ends on max_iters or a failure.
  bool stop_on_optimality = true;
  /// Stand-in for zero noise estimates in the stopping test.
  double exact_tol = 1e-8;
  /// Relative allowance for rounding in merit comparisons, added to ε_R as
  /// rounding_margin·(1 + |f̃| + π(1 + ∥c̃∥₁)) when relaxation is enabled.
  /// Without it exact-oracle runs stall once the model decrease drops below
  /// the rounding level of φ.
  double rounding_margin = 1e-14;

  void set_estimates(const NoiseBounds& b) {
    eps_f_est = b.eps_f;
    eps_c_est = b.eps_c;
    eps_g_est = b.eps_g;
    eps_J_est = b.eps_J;
  }

  void validate() const {
    if (!(nu > 0.0 && nu < 1.0)) throw ContractViolation("nu must be in (0,1)");
    if (!(tau > 0.0 && tau < 1.0)) {
      throw ContractViolation("tau must be in (0,1)");
    }
    if (!(beta > 0.0)) throw ContractViolation("beta must be positive");
    if (!(pi_init > 0.0)) throw ContractViolation("pi_init must be positive");
    if (!(alpha_init > 0.0)) {
      throw ContractViolation("alpha_init must be positive");
    }
    if (!(eps_f_est >= 0.0 && eps_c_est >= 0.0 && eps_g_est >= 0.0 &&
          eps_J_est >= 0.0)) {
      throw ContractViolation("noise estimates must be nonnegative");
    }
    if (max_backtracks < 0) {
      throw ContractViolation("max_backtracks must be nonnegative");
    }
    if (max_iters <= 0) throw ContractViolation("max_iters must be positive");
    if (!(exact_tol > 0.0)) {
      throw ContractViolation("exact_tol must be positive");
    }
    if (!(rounding_margin >= 0.0)) {
      throw ContractViolation("rounding_margin must be nonnegative");
    }
  }
};

struct PenaltyState {
  double pi = 1.0;
};

/// One row of a solver trace: the state at x_k and the step taken from it.
struct IterateRecord {
  int k = 0;
  Vector x;
  double alpha = 0.0;
  double pi = 0.0;
  double merit_noisy = 0.0;     ///< φ̃(x_k), the reference value of the search
  double merit_accepted = 0.0;  ///< φ̃ at the accepted trial point
  double model_value = 0.0;     ///< ℓ̃(x_k; d_k)
  double eps_relax = 0.0;       ///< ε_R used in the search
  double dist_to_ref = std::numeric_limits<double>::quiet_NaN();
  double psi = std::numeric_limits<double>::quiet_NaN();
  int backtracks = 0;
  bool line_search_failed = false;
};

enum class SolverStatus { kConverged, kMaxIters, kLineSearchFailure,
                          kSingularJacobian };

inline std::string_view to_string(SolverStatus s) {
  switch (s) {
    case SolverStatus::kConverged: return "converged";
    case SolverStatus::kMaxIters: return "max_iters";
    case SolverStatus::kLineSearchFailure: return "line_search_failure";
    case SolverStatus::kSingularJacobian: return "singular_jacobian";
  }
  return "unknown";
}

struct SolveResult {
  Vector x;  ///< last iterate
  std::vector<IterateRecord> trace;
  SolverStatus status = SolverStatus::kMaxIters;
  /// Iteration index at which the run stopped (the number of steps taken).
  int final_iter = 0;
  std::optional<int> failure_iter;
  double final_pi = 0.0;
};

/// Extras for a solve that do not influence the iterates.
struct SolveOptions {
  /// Reference solution for dist_to_ref; NaN when absent.
  std::optional<Vector> x_ref;
  /// Compute ψ_π at each iterate from the exact oracles.
  bool exact_psi = false;
};

/// φ̃ = f + π∥c∥₁
inline double merit_value(double f_val, const Vector& c_val, double pi) {
  return f_val + pi * c_val.lpNorm<1>();
}

/// First-order model of the merit change: gᵀd + π∥c + Jd∥₁ − π∥c∥₁.
inline double linear_model(const Vector& g, const Vector& c, const Matrix& J,
                           const Vector& d, double pi) {
  if (g.size() != d.size() || J.cols() != d.size() || J.rows() != c.size()) {
    throw ContractViolation("linear_model: dimension mismatch");
  }
  return g.dot(d) + pi * (c + J * d).lpNorm<1>() - pi * c.lpNorm<1>();
}

/**
 * Keeps π if π ≥ ∥λ̂∥∞/(1−τ); otherwise jumps to 2∥λ̂∥∞/(1−τ).
 */
inline PenaltyState update_penalty(PenaltyState state, const Vector& lambda_hat,
                                   double tau) {
  if (!(tau > 0.0 && tau < 1.0)) {
    throw ContractViolation("update_penalty: tau must be in (0,1)");
  }
  const double lam = lambda_hat.size() ? lambda_hat.lpNorm<Eigen::Infinity>()
                                       : 0.0;
  if (state.pi >= lam / (1.0 - tau)) {
    return state;
  }
  return {2.0 * lam / (1.0 - tau)};
}

struct LineSearchResult {
  bool accepted = false;
  double alpha = 0.0;
  int backtracks = 0;
  double merit = 0.0;  ///< φ̃ at the last trial
};

/**
 * Backtracking by halving from alpha_init until
 *
 *   φ̃(x + αd) ≤ merit_0 + ν α model + eps_R.
 *
 * merit_at(α) is called once per trial. At most max_backtracks halvings are
 * tried after the initial step; if none is accepted the result has
 * accepted == false.
 */
template <typename MeritFn>
LineSearchResult relaxed_line_search(MeritFn&& merit_at, double merit_0,
                                     double model, double nu, double eps_R,
                                     double alpha_init, int max_backtracks) {
  LineSearchResult r;
  double alpha = alpha_init;
  for (int j = 0; j <= max_backtracks; ++j, alpha *= 0.5) {
    const double trial = merit_at(alpha);
    r.merit = trial;
    if (trial <= merit_0 + nu * alpha * model + eps_R) {
      r.accepted = true;
      r.alpha = alpha;
      r.backtracks = j;
      return r;
    }
  }
  r.backtracks = max_backtracks;
  return r;
}

/// Noisy stopping test: ∥c̃∥₁ ≤ ε_c and ∥g̃ + J̃ᵀλ∥ ≤ ε_g + ∥λ∥∞ ε_J.
inline bool check_termination(const Vector& c, const Vector& g,
                              const Matrix& J, const Vector& lambda,
                              double eps_c_est, double eps_g_est,
                              double eps_J_est) {
  if (c.lpNorm<1>() > eps_c_est) {
    return false;
  }
  const double lam_inf =
      lambda.size() ? lambda.lpNorm<Eigen::Infinity>() : 0.0;
  return kkt_residual(g, J, lambda) <= eps_g_est + lam_inf * eps_J_est;
}

/**
 * Runs the noise-tolerant SQP iteration from p.x_start.
 *
 * Each iteration draws one full noisy evaluation at x_k and one (f, c)
 * evaluation per line-search trial. Line-search failures and singular
 * Jacobians end the run with the corresponding status; the trace up to that
 * point is kept, including the failing iteration.
 */
inline SolveResult solve(const Problem& p, const NoiseSpec& spec,
                         const SolverConfig& cfg,
                         const SolveOptions& opts = {}) {
  p.validate();
  spec.validate();
  cfg.validate();

  NoiseStream stream(spec.seed);
  SolveResult res;
  res.x = p.x_start;
  res.trace.reserve(static_cast<std::size_t>(std::min(cfg.max_iters, 100000)));
  PenaltyState penalty{cfg.pi_init};

  const double feas_tol = cfg.eps_c_est > 0.0 ? cfg.eps_c_est : cfg.exact_tol;
  const bool exact_opt_test = cfg.eps_g_est == 0.0 && cfg.eps_J_est == 0.0;

  for (int k = 0;; ++k) {
    res.final_iter = k;
    if (k == cfg.max_iters) {
      res.status = SolverStatus::kMaxIters;
      break;
    }
    const NoisyEval ev = eval_noisy(p, res.x, spec, stream);

    StepResult step;
    try {
      step = solve_sqp_step(ev.J_tilde, ev.c_tilde, ev.g_tilde, cfg.beta);
    } catch (const SingularJacobian&) {
      res.status = SolverStatus::kSingularJacobian;
      break;
    }

    if (cfg.stop_on_optimality) {
      const Vector lambda = -step.lambda_hat;
      const bool done =
          exact_opt_test
              ? check_termination(ev.c_tilde, ev.g_tilde, ev.J_tilde, lambda,
                                  feas_tol, cfg.exact_tol, 0.0)
              : check_termination(ev.c_tilde, ev.g_tilde, ev.J_tilde, lambda,
                                  feas_tol, cfg.eps_g_est, cfg.eps_J_est);
      if (done) {
        res.status = SolverStatus::kConverged;
        break;
      }
    }

    penalty = update_penalty(penalty, step.lambda_hat, cfg.tau);
    const double pi = penalty.pi;
    const double model =
        linear_model(ev.g_tilde, ev.c_tilde, ev.J_tilde, step.d, pi);
    const double merit_0 = merit_value(ev.f_tilde, ev.c_tilde, pi);
    const double eps_R =
        cfg.relaxation_enabled
            ? 2.0 * (cfg.eps_f_est + pi * cfg.eps_c_est) +
                  cfg.rounding_margin *
                      (1.0 + std::abs(ev.f_tilde) +
                       pi * (1.0 + ev.c_tilde.lpNorm<1>()))
            : 0.0;

    const auto merit_at = [&](double alpha) {
      const NoisyValues nv =
          eval_noisy_values(p, res.x + alpha * step.d, spec, stream);
      return merit_value(nv.f_tilde, nv.c_tilde, pi);
    };
    const LineSearchResult ls =
        relaxed_line_search(merit_at, merit_0, model, cfg.nu, eps_R,
                            cfg.alpha_init, cfg.max_backtracks);

    IterateRecord rec;
    rec.k = k;
    rec.x = res.x;
    rec.alpha = ls.alpha;
    rec.pi = pi;
    rec.merit_noisy = merit_0;
    rec.merit_accepted = ls.merit;
    rec.model_value = model;
    rec.eps_relax = eps_R;
    rec.backtracks = ls.backtracks;
    rec.line_search_failed = !ls.accepted;
    if (opts.x_ref) {
      rec.dist_to_ref = (res.x - *opts.x_ref).norm();
    }
    if (opts.exact_psi) {
      try {
        rec.psi = stationarity_psi(p.eval_g(res.x), p.eval_c(res.x),
                                   p.eval_J(res.x), pi, cfg.tau, cfg.beta);
      } catch (const SingularJacobian&) {
        // left as NaN
      }
    }
    res.trace.push_back(std::move(rec));

    if (!ls.accepted) {
      res.status = SolverStatus::kLineSearchFailure;
      res.failure_iter = k;
      break;
    }
    res.x += ls.alpha * step.d;
  }
  res.final_pi = penalty.pi;
  return res;
}

}  // namespace noisy_sqp
