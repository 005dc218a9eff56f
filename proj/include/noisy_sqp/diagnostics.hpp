#pragma once

#include "noisy_sqp/linear_kernels.hpp"

namespace noisy_sqp {

/// Stationarity and conditioning snapshot at one point.
struct DiagnosticsRow {
  double psi = 0.0;
  double kkt_residual = 0.0;
  double feasibility = 0.0;  ///< ∥c∥₁
  double sigma_min = 0.0;
  bool exact = false;  ///< computed from exact oracles rather than noisy ones
};

/**
 * Non-stationarity measure ψ_π(x) = (1/b_u)∥Pg∥² + πτ∥c∥₁.
 *
 * Zero exactly at KKT points; b_u is the upper bound on β (β itself when β
 * is held constant).
 */
inline double stationarity_psi(const Vector& g, const Vector& c,
                               const Matrix& J, double pi, double tau,
                               double b_u) {
  if (!(b_u > 0.0)) {
    throw ContractViolation("stationarity_psi: b_u must be positive");
  }
  const Vector pg = project_tangent(J, g);
  return pg.squaredNorm() / b_u + pi * tau * c.lpNorm<1>();
}

/// ∥g + Jᵀλ∥₂
inline double kkt_residual(const Vector& g, const Matrix& J,
                           const Vector& lambda) {
  if (J.cols() != g.size() || J.rows() != lambda.size()) {
    throw ContractViolation("kkt_residual: dimension mismatch");
  }
  return (g + J.transpose() * lambda).norm();
}

/// Multiplier for the g + Jᵀλ = 0 convention, i.e. -λ̂.
inline Vector kkt_multiplier(const Matrix& J, const Vector& g) {
  return -least_squares_multiplier(J, g);
}

inline DiagnosticsRow compute_diagnostics(const Vector& g, const Vector& c,
                                          const Matrix& J, double pi,
                                          double tau, double b_u,
                                          bool exact) {
  DiagnosticsRow row;
  row.exact = exact;
  row.feasibility = c.lpNorm<1>();
  row.sigma_min = min_singular_value(J);
  const NormalEquations ne(J);
  const Vector pg = ne.project(g);
  row.psi = pg.squaredNorm() / b_u + pi * tau * row.feasibility;
  row.kkt_residual = kkt_residual(g, J, -ne.multiplier(g));
  return row;
}

}  // namespace noisy_sqp
