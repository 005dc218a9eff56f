#include <gtest/gtest.h>

#include <cmath>

#include "noisy_sqp/solver.hpp"
#include "noisy_sqp/test_problems.hpp"
#include "oracles.hpp"

using namespace noisy_sqp;

TEST(GetProblem, Dimensions) {
  EXPECT_EQ(get_problem("HS7").n, 2);
  EXPECT_EQ(get_problem("HS7").m, 1);
  EXPECT_EQ(get_problem("BT11").n, 4);
  EXPECT_EQ(get_problem("BT11").m, 3);
  EXPECT_EQ(get_problem("HS40").n, 5);
  EXPECT_EQ(get_problem("HS40").m, 3);
}

TEST(GetProblem, StartPoints) {
  EXPECT_EQ(get_problem("HS7").x_start, Vector::Constant(2, 2.0));
  EXPECT_EQ(get_problem("BT11").x_start, Vector::Constant(4, 2.0));
  EXPECT_EQ(get_problem("HS40").x_start, Vector::Constant(5, 0.8));
}

TEST(GetProblem, UnknownName) {
  EXPECT_THROW(get_problem("HS8"), UnknownProblem);
  EXPECT_THROW(get_problem(""), std::out_of_range);
}

TEST(VerifyDerivatives, StandardPoints) {
  EXPECT_LE(verify_derivatives(get_problem("HS7"), Vector{{2.0, 2.0}}, 1e-6),
            1e-6);
  EXPECT_LE(verify_derivatives(get_problem("BT11"), Vector::Ones(4), 1e-6),
            1e-6);
  EXPECT_LE(verify_derivatives(get_problem("HS40"), Vector::Constant(5, 0.8),
                               1e-6),
            1e-6);
}

TEST(VerifyDerivatives, RandomPoints) {
  oracle::Random rng(77);
  for (auto name : kProblemNames) {
    const Problem p = get_problem(name);
    for (int t = 0; t < 100; ++t) {
      const Vector x = rng.vector(p.n, -2.0, 2.0);
      EXPECT_LE(verify_derivatives(p, x, 1e-6), 1e-5) << name;
    }
  }
}

TEST(VerifyDerivatives, DetectsWrongGradient) {
  Problem p = get_problem("HS7");
  p.eval_g = [](const Vector& x) { return Vector{{x[0], -1.0}}; };
  EXPECT_GT(verify_derivatives(p, Vector{{2.0, 2.0}}, 1e-6), 1e-2);
}

TEST(AnalyticDerivatives, MatchFivePointStencil) {
  oracle::Random rng(78);
  for (auto name : kProblemNames) {
    const Problem p = get_problem(name);
    for (int t = 0; t < 20; ++t) {
      const Vector x = rng.vector(p.n, -1.5, 1.5);
      const Vector g = p.eval_g(x);
      const Matrix J = p.eval_J(x);
      for (Eigen::Index j = 0; j < p.n; ++j) {
        const double df = oracle::five_point(p.eval_f, x, j, 1e-3);
        EXPECT_NEAR(g[j], df, 1e-7 * std::max(1.0, std::abs(df))) << name;
        for (Eigen::Index i = 0; i < p.m; ++i) {
          const auto ci = [&](const Vector& y) { return p.eval_c(y)[i]; };
          const double dc = oracle::five_point(ci, x, j, 1e-3);
          EXPECT_NEAR(J(i, j), dc, 1e-7 * std::max(1.0, std::abs(dc))) << name;
        }
      }
    }
  }
}

TEST(ReferenceSolution, Invariants) {
  for (auto name : kProblemNames) {
    const Problem p = get_problem(name);
    const ReferenceSolution& ref = reference_solution(name);
    const Vector g = p.eval_g(ref.x_star);
    const Matrix J = p.eval_J(ref.x_star);
    EXPECT_LE(p.eval_c(ref.x_star).lpNorm<Eigen::Infinity>(), 1e-9) << name;
    EXPECT_LE((oracle::projector(J) * g).norm(), 1e-10) << name;
    EXPECT_LE((g + J.transpose() * oracle::ls_multiplier(J, -g)).norm(), 1e-10);
    EXPECT_EQ(ref.f_star, p.eval_f(ref.x_star));
    EXPECT_EQ(ref.source, "derived-zero-noise-run");
  }
}

TEST(ReferenceSolution, Hs7IsKnownOptimum) {
  const ReferenceSolution& ref = reference_solution("HS7");
  EXPECT_NEAR(ref.x_star[0], 0.0, 1e-9);
  EXPECT_NEAR(ref.x_star[1], std::sqrt(3.0), 1e-9);
  const double f = std::log1p(ref.x_star[0] * ref.x_star[0]) - ref.x_star[1];
  EXPECT_NEAR(ref.f_star, f, 1e-12);
}

TEST(ReferenceSolution, Bt11ClosedForm) {
  // x = (2^(-1/3), 2^(-1/2), 2^(-11/12), 2^(-1/4)), f = -1/4
  const ReferenceSolution& ref = reference_solution("BT11");
  const Vector expected{{0.7937005259840998, 0.7071067811865476,
                         0.5297315471796477, 0.8408964152537145}};
  EXPECT_LE((ref.x_star - expected).lpNorm<Eigen::Infinity>(), 1e-9);
  EXPECT_NEAR(ref.f_star, -0.25, 1e-12);
}

TEST(ReferenceSolution, IsFixedPointOfStep) {
  for (auto name : kProblemNames) {
    const Problem p = get_problem(name);
    const ReferenceSolution& ref = reference_solution(name);
    const StepResult s = solve_sqp_step(p.eval_J(ref.x_star),
                                        p.eval_c(ref.x_star),
                                        p.eval_g(ref.x_star), 50.0);
    EXPECT_LE(s.d.norm(), 1e-8) << name;
  }
}

TEST(ReferenceSolution, CachedInstanceIsStable) {
  const ReferenceSolution* a = &reference_solution("HS40");
  const ReferenceSolution* b = &reference_solution("HS40");
  EXPECT_EQ(a, b);
  EXPECT_THROW(reference_solution("nope"), UnknownProblem);
}
