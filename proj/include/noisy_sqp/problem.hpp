#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <utility>

#include <Eigen/Core>

namespace noisy_sqp {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Thrown when a caller breaks a documented precondition (dimension
/// mismatch, out-of-range parameter).
class ContractViolation : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/**
 * Equality-constrained problem
 *
 *   min f(x)  s.t.  c(x) = 0,   x ∈ Rⁿ, c: Rⁿ → Rᵐ, m < n,
 *
 * with exact oracles for f, c, ∇f and the m×n constraint Jacobian.
 * Instances are immutable once built and can be shared across threads.
 */
struct Problem {
  std::string name;
  int n = 0;
  int m = 0;
  std::function<double(const Vector&)> eval_f;
  std::function<Vector(const Vector&)> eval_c;
  std::function<Vector(const Vector&)> eval_g;
  std::function<Matrix(const Vector&)> eval_J;
  Vector x_start;

  void validate() const {
    if (n <= 0 || m <= 0 || m >= n) {
      throw ContractViolation("problem '" + name + "': need 0 < m < n");
    }
    if (x_start.size() != n) {
      throw ContractViolation("problem '" + name +
                              "': start point has wrong length");
    }
    if (!eval_f || !eval_c || !eval_g || !eval_J) {
      throw ContractViolation("problem '" + name + "': missing oracle");
    }
  }
};

/// How ε_J is derived from the per-entry Jacobian half-width.
enum class JacobianBound {
  /// m·√n·ε₂: worst case of the norm induced by ℓ₁ on Rᵐ and ℓ₂ on Rⁿ.
  kInducedWorstCase,
  /// √(m·n)·ε₂: Frobenius-norm bound on the perturbation.
  kFrobenius,
};

/**
 * Uniform noise model. Every scalar of f, c gets an independent
 * U(-eps1, eps1) perturbation; every entry of g and J gets U(-eps2, eps2).
 */
struct NoiseSpec {
  double eps1 = 0.0;
  double eps2 = 0.0;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(eps1 >= 0.0) || !(eps2 >= 0.0)) {
      throw ContractViolation("noise half-widths must be nonnegative");
    }
  }

  bool is_zero() const { return eps1 == 0.0 && eps2 == 0.0; }
};

/// Norm bounds (ε_f, ε_c, ε_g, ε_J) implied by a NoiseSpec on an m×n problem.
struct NoiseBounds {
  double eps_f = 0.0;
  double eps_c = 0.0;
  double eps_g = 0.0;
  double eps_J = 0.0;

  NoiseBounds scaled(double factor) const {
    return {eps_f * factor, eps_c * factor, eps_g * factor, eps_J * factor};
  }
};

inline NoiseBounds derived_bounds(const NoiseSpec& spec, int n, int m,
                                  JacobianBound jac =
                                      JacobianBound::kInducedWorstCase) {
  const double dn = n;
  const double dm = m;
  NoiseBounds b;
  b.eps_f = spec.eps1;
  b.eps_c = dm * spec.eps1;
  b.eps_g = std::sqrt(dn) * spec.eps2;
  b.eps_J = jac == JacobianBound::kInducedWorstCase
                ? dm * std::sqrt(dn) * spec.eps2
                : std::sqrt(dm * dn) * spec.eps2;
  return b;
}

/**
 * Counter-based uniform stream. Draw i is a pure function of (seed, i), so a
 * run's noise sequence depends only on its seed and how many scalars it has
 * consumed, never on scheduling.
 */
class NoiseStream {
 public:
  explicit NoiseStream(std::uint64_t seed) : key_(mix(seed ^ kSeedSalt)) {}

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() {
    const std::uint64_t bits = mix(key_ + kGolden * ++counter_);
    return static_cast<double>(bits >> 11) * 0x1.0p-53;
  }

  /// Uniform on [-half_width, half_width].
  double symmetric(double half_width) {
    return (2.0 * uniform() - 1.0) * half_width;
  }

  std::uint64_t counter() const { return counter_; }

 private:
  static constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;
  static constexpr std::uint64_t kSeedSalt = 0x6A09E667F3BCC909ULL;

  // splitmix64 finalizer
  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

/// One (possibly perturbed) evaluation of all four oracles at a point.
struct NoisyEval {
  double f_tilde = 0.0;
  Vector c_tilde;
  Vector g_tilde;
  Matrix J_tilde;
};

/// Perturbed objective and constraint values only; what a merit trial needs.
struct NoisyValues {
  double f_tilde = 0.0;
  Vector c_tilde;
};

namespace detail {

inline void check_point(const Problem& p, const Vector& x) {
  if (x.size() != p.n) {
    throw ContractViolation("problem '" + p.name + "': expected x of length " +
                            std::to_string(p.n) + ", got " +
                            std::to_string(x.size()));
  }
}

}  // namespace detail

inline NoisyEval eval_exact(const Problem& p, const Vector& x) {
  detail::check_point(p, x);
  return {p.eval_f(x), p.eval_c(x), p.eval_g(x), p.eval_J(x)};
}

/**
 * Exact evaluation plus one fresh uniform draw per scalar, consumed in the
 * order f, c₁..cₘ, g₁..gₙ, then J row-major (1 + m + n + m·n draws).
 */
inline NoisyEval eval_noisy(const Problem& p, const Vector& x,
                            const NoiseSpec& spec, NoiseStream& stream) {
  NoisyEval e = eval_exact(p, x);
  e.f_tilde += stream.symmetric(spec.eps1);
  for (Eigen::Index i = 0; i < e.c_tilde.size(); ++i) {
    e.c_tilde[i] += stream.symmetric(spec.eps1);
  }
  for (Eigen::Index j = 0; j < e.g_tilde.size(); ++j) {
    e.g_tilde[j] += stream.symmetric(spec.eps2);
  }
  for (Eigen::Index i = 0; i < e.J_tilde.rows(); ++i) {
    for (Eigen::Index j = 0; j < e.J_tilde.cols(); ++j) {
      e.J_tilde(i, j) += stream.symmetric(spec.eps2);
    }
  }
  return e;
}

/// Like eval_noisy but for f and c only (1 + m draws).
inline NoisyValues eval_noisy_values(const Problem& p, const Vector& x,
                                     const NoiseSpec& spec,
                                     NoiseStream& stream) {
  detail::check_point(p, x);
  NoisyValues v{p.eval_f(x), p.eval_c(x)};
  v.f_tilde += stream.symmetric(spec.eps1);
  for (Eigen::Index i = 0; i < v.c_tilde.size(); ++i) {
    v.c_tilde[i] += stream.symmetric(spec.eps1);
  }
  return v;
}

}  // namespace noisy_sqp
