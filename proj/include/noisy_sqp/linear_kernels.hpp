#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/SVD>

#include "noisy_sqp/problem.hpp"

namespace noisy_sqp {

/// The constraint Jacobian is (numerically) rank deficient.
class SingularJacobian : public std::runtime_error {
 public:
  explicit SingularJacobian(double sigma_min)
      : std::runtime_error("constraint Jacobian is rank deficient (sigma_min = " +
                           std::to_string(sigma_min) + ")"),
        sigma_min_(sigma_min) {}

  double sigma_min() const { return sigma_min_; }

 private:
  double sigma_min_;
};

/**
 * Step of the equality-constrained QP with H = βI, split as d = v + u where
 * v = -Jᵀ(JJᵀ)⁻¹c lies in the row space of J and u = -(1/β)Pg lies in its
 * null space.
 */
struct StepResult {
  Vector d;
  Vector v;
  Vector u;
  Vector lambda_hat;  ///< (JJᵀ)⁻¹Jg
  double beta = 0.0;
};

inline double min_singular_value(const Matrix& J) {
  // a tall matrix is never full row rank
  if (J.rows() == 0 || J.cols() == 0 || J.rows() > J.cols()) {
    return 0.0;
  }
  Eigen::JacobiSVD<Matrix> svd(J);
  const auto& s = svd.singularValues();
  return s[s.size() - 1];
}

/**
 * Factored normal-equations operator (JJᵀ)⁻¹ for a full-row-rank J.
 *
 * Uses a Cholesky factorization of the m×m Gram matrix. If Cholesky breaks
 * down even though the rank test passed, solves go through the SVD of J.
 */
class NormalEquations {
 public:
  explicit NormalEquations(const Matrix& J, double rank_tol_rel = 1e-10)
      : J_(J) {
    if (J.rows() == 0 || J.rows() > J.cols()) {
      throw SingularJacobian(0.0);
    }
    svd_.compute(J, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& s = svd_.singularValues();
    sigma_min_ = s[s.size() - 1];
    const double sigma_max = s[0];
    if (!(sigma_min_ > rank_tol_rel * sigma_max) || sigma_max == 0.0) {
      throw SingularJacobian(sigma_min_);
    }
    llt_.compute(J * J.transpose());
    use_svd_ = llt_.info() != Eigen::Success;
  }

  double sigma_min() const { return sigma_min_; }

  /// (JJᵀ)⁻¹ r
  Vector solve(const Vector& r) const {
    if (!use_svd_) {
      return llt_.solve(r);
    }
    // JJᵀ = U S² Uᵀ
    const Vector s2 = svd_.singularValues().array().square();
    return svd_.matrixU() *
           ((svd_.matrixU().transpose() * r).array() / s2.array()).matrix();
  }

  /// (JJᵀ)⁻¹ J w
  Vector multiplier(const Vector& w) const { return solve(J_ * w); }

  /// w - Jᵀ(JJᵀ)⁻¹Jw
  Vector project(const Vector& w) const {
    return w - J_.transpose() * multiplier(w);
  }

  const Matrix& jacobian() const { return J_; }

 private:
  Matrix J_;
  Eigen::JacobiSVD<Matrix> svd_;
  Eigen::LLT<Matrix> llt_;
  double sigma_min_ = 0.0;
  bool use_svd_ = false;
};

namespace detail {

inline void check_cols(const Matrix& J, const Vector& w, const char* what) {
  if (J.cols() != w.size()) {
    throw ContractViolation(std::string(what) + ": length " +
                            std::to_string(w.size()) + " does not match " +
                            std::to_string(J.cols()) + " Jacobian columns");
  }
}

}  // namespace detail

/// λ̂ = (JJᵀ)⁻¹Jg. Note the sign: g - Jᵀλ̂ is the projected gradient.
inline Vector least_squares_multiplier(const Matrix& J, const Vector& g) {
  detail::check_cols(J, g, "least_squares_multiplier");
  return NormalEquations(J).multiplier(g);
}

/// Orthogonal projection of w onto null(J).
inline Vector project_tangent(const Matrix& J, const Vector& w) {
  detail::check_cols(J, w, "project_tangent");
  return NormalEquations(J).project(w);
}

inline StepResult solve_sqp_step(const Matrix& J, const Vector& c,
                                 const Vector& g, double beta) {
  if (!(beta > 0.0)) {
    throw ContractViolation("solve_sqp_step: beta must be positive");
  }
  detail::check_cols(J, g, "solve_sqp_step");
  if (c.size() != J.rows()) {
    throw ContractViolation("solve_sqp_step: constraint length mismatch");
  }
  const NormalEquations ne(J);
  StepResult r;
  r.beta = beta;
  r.lambda_hat = ne.multiplier(g);
  r.v = -(J.transpose() * ne.solve(c));
  r.u = -(g - J.transpose() * r.lambda_hat) / beta;
  r.d = r.v + r.u;
  return r;
}

}  // namespace noisy_sqp
