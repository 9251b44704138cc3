#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "test_util.hpp"
#include "tsk/krylov.hpp"
#include "tsk/problems.hpp"

namespace tsk {
namespace {

using testing::random_matrix;
using testing::random_orthonormal;
using testing::random_vector;

LinearOperator identity_operator(std::size_t n) {
  return {n, [](std::span<const double> x) { return Vector(x.begin(), x.end()); }};
}

TEST(Gmres, IdentityConvergesInOneIteration) {
  const Vector b{3.0, 4.0, 5.0};
  const auto out = gmres(identity_operator(3), b, Vector(3, 0.0), 1e-6, 3);
  EXPECT_EQ(out.iterations, 1u);
  EXPECT_EQ(out.terminated_by, GmresTermination::tolerance);
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(out.solution[i], b[i], 1e-14);
  EXPECT_EQ(out.residual_norms.size(), out.iterations + 1);
}

TEST(Gmres, RankOnePerturbationTerminatesInTwoSteps) {
  const std::size_t n = 6;
  LinearOperator a{n, [](std::span<const double> x) {
                     Vector y(x.begin(), x.end());
                     y[0] -= 0.5 * x[0];
                     return y;
                   }};
  Vector b(n, 0.0);
  b[0] = b[1] = 1.0;
  const auto out = gmres(a, b, Vector(n, 0.0), 1e-10, n);
  EXPECT_LE(out.iterations, 2u);
  EXPECT_NEAR(out.solution[0], 2.0, 1e-13);
  EXPECT_NEAR(out.solution[1], 1.0, 1e-13);
  for (std::size_t i = 2; i < n; ++i) EXPECT_NEAR(out.solution[i], 0.0, 1e-13);
}

TEST(Gmres, SyntheticCompactOperatorMatchesDenseSolve) {
  const auto syn = synthetic_compact({400, 10, 1e-10, 42});
  std::mt19937_64 rng(99);
  const Vector b = random_vector(400, rng);
  const auto out = gmres(syn.op, b, Vector(400, 0.0), 1e-6, 400);
  ASSERT_LE(out.iterations, 11u);
  // run the full p+1 cycle regardless of the tolerance to see the bound
  const auto cycle = gmres(syn.op, b, Vector(400, 0.0), 1e-15, 11);
  ASSERT_EQ(cycle.residual_norms.size(), 12u);
  EXPECT_LE(cycle.residual_norms[11], 1e3 * 1e-10 * cycle.residual_norms[0]);
  const Vector exact = syn.true_solve(b);
  EXPECT_LT(norm2(subtract(out.solution, exact)), 1e-6 * norm2(exact));
  EXPECT_FALSE(out.residual_mismatch);
}

TEST(Gmres, HistoryMatchesTrueResidualOfEachIterate) {
  std::mt19937_64 rng(1);
  DenseMatrix m = random_matrix(30, 30, rng);
  for (std::size_t i = 0; i < 30; ++i) m(i, i) += 8.0;
  const auto a = dense_operator(m);
  const Vector b = random_vector(30, rng);
  const auto full = gmres(a, b, Vector(30, 0.0), 1e-12, 30);
  for (std::size_t k = 1; k <= std::min<std::size_t>(full.iterations, 12); ++k) {
    const auto partial = gmres(a, b, Vector(30, 0.0), 1e-15, k);
    EXPECT_NEAR(partial.true_residual, full.residual_norms[k], 1e-12 * full.residual_norms[0]) << "k = " << k;
  }
}

TEST(Gmres, NonZeroInitialIterate) {
  std::mt19937_64 rng(2);
  DenseMatrix m = random_matrix(20, 20, rng);
  for (std::size_t i = 0; i < 20; ++i) m(i, i) += 10.0;
  const Vector b = random_vector(20, rng), x0 = random_vector(20, rng);
  const auto out = gmres(dense_operator(m), b, x0, 1e-10, 20);
  EXPECT_EQ(out.terminated_by, GmresTermination::tolerance);
  EXPECT_LE(out.true_residual, 1e-10 * out.residual_norms[0] * (1.0 + 1e-12) + 1e-14);
}

TEST(Gmres, ExactInitialGuessNeedsNoIterations) {
  const Vector b{1.0, 2.0};
  const auto out = gmres(identity_operator(2), b, b, 0.5, 2);
  EXPECT_EQ(out.iterations, 0u);
  EXPECT_EQ(out.terminated_by, GmresTermination::tolerance);
}

TEST(Gmres, MaxIterationsIsReportedNotThrown) {
  std::mt19937_64 rng(4);
  const DenseMatrix m = random_matrix(25, 25, rng);
  const auto out = gmres(dense_operator(m), random_vector(25, rng), Vector(25, 0.0), 1e-12, 3);
  EXPECT_EQ(out.iterations, 3u);
  EXPECT_EQ(out.terminated_by, GmresTermination::max_iterations);
}

TEST(Gmres, NanFromOperatorIsHardError) {
  LinearOperator bad{2, [](std::span<const double>) { return Vector{std::nan(""), 0.0}; }};
  EXPECT_THROW(gmres(bad, Vector{1.0, 0.0}, Vector(2, 0.0), 0.1, 2), NumericalError);
}

TEST(Gmres, PreconditionsChecked) {
  EXPECT_THROW(gmres(identity_operator(2), Vector{1.0, 0.0}, Vector(2, 0.0), 1.0, 2), std::invalid_argument);
  EXPECT_THROW(gmres(identity_operator(2), Vector{1.0, 0.0}, Vector(2, 0.0), 0.1, 3), std::invalid_argument);
  EXPECT_THROW(gmres(identity_operator(2), Vector{1.0}, Vector(2, 0.0), 0.1, 2), std::invalid_argument);
}

// ||r_k|| <= ||p(A) r_0|| for every residual polynomial p of degree k.
TEST(GmresProperties, OptimalOverRandomResidualPolynomials) {
  std::mt19937_64 rng(8);
  const std::size_t n = 30;
  DenseMatrix m = random_matrix(n, n, rng);
  for (std::size_t i = 0; i < n; ++i) m(i, i) += 6.0;
  scale(1.0 / 6.0, m.data());
  const auto a = dense_operator(m);
  const Vector b = random_vector(n, rng);
  const auto out = gmres(a, b, Vector(n, 0.0), 1e-14, 8);
  std::normal_distribution<double> coef(0.0, 0.5);
  for (std::size_t k = 1; k <= out.iterations; ++k) {
    for (int sample = 0; sample < 100; ++sample) {
      // Horner: p(A) r0 with p(z) = 1 + c_1 z + ... + c_k z^k
      Vector c(k + 1);
      c[0] = 1.0;
      for (std::size_t j = 1; j <= k; ++j) c[j] = coef(rng);
      Vector acc = b;
      scale(c[k], acc);
      for (std::size_t j = k; j-- > 0;) {
        acc = m.multiply(acc);
        axpy(c[j], b, acc);
      }
      EXPECT_LE(out.residual_norms[k], norm2(acc) * (1.0 + 1e-12) + 1e-14);
    }
  }
}

TEST(GmresProperties, ResidualHistoryNonIncreasing) {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 20; ++trial) {
    const DenseMatrix m = random_matrix(40, 40, rng);
    const auto out = gmres(dense_operator(m), random_vector(40, rng), Vector(40, 0.0), 1e-10, 40);
    for (std::size_t k = 1; k < out.residual_norms.size(); ++k)
      EXPECT_LE(out.residual_norms[k], out.residual_norms[k - 1]);
  }
}

TEST(GmresProperties, FiniteTerminationWithinDimension) {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 10; ++trial) {
    DenseMatrix m = random_matrix(25, 25, rng);
    for (std::size_t i = 0; i < 25; ++i) m(i, i) += 3.0;
    const auto out = gmres(dense_operator(m), random_vector(25, rng), Vector(25, 0.0), 1e-10, 25);
    EXPECT_EQ(out.terminated_by, GmresTermination::tolerance);
    EXPECT_LE(out.iterations, 25u);
  }
}

TEST(GmresProperties, LowRankStructureBoundsIterationCount) {
  std::mt19937_64 rng(14);
  const std::size_t n = 120;
  const double eta = 1e-6;
  for (std::size_t p : {1u, 2u, 4u, 7u}) {
    for (int trial = 0; trial < 5; ++trial) {
      const auto q = random_orthonormal(n, p, rng);
      const DenseMatrix bmat = random_matrix(p, p, rng);
      DenseMatrix e = random_matrix(n, n, rng);
      scale(eta * 1e-2 / e.frobenius(), e.data());  // ||E||_2 <= ||E||_F
      DenseMatrix a = e;
      for (std::size_t i = 0; i < n; ++i) a(i, i) += 1.0;
      const double kscale = 0.5 / std::max(1.0, bmat.frobenius());
      for (std::size_t r = 0; r < p; ++r)
        for (std::size_t c = 0; c < p; ++c)
          for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) a(i, j) -= kscale * q[r][i] * bmat(r, c) * q[c][j];
      const auto out = gmres(dense_operator(a), random_vector(n, rng), Vector(n, 0.0), eta, n);
      EXPECT_LE(out.iterations, p + 1) << "p = " << p;
    }
  }
}

TEST(TheoremBoundCheck, ExactStructurePassesWithZeroPerturbation) {
  for (std::size_t p : {1u, 3u, 6u}) {
    const auto syn = synthetic_compact({150, p, 0.0, 5 + p});
    std::mt19937_64 rng(p);
    const auto out = gmres(syn.op, random_vector(150, rng), Vector(150, 0.0), 1e-6, 150);
    ASSERT_GE(out.iterations, p + 1);
    EXPECT_LE(out.residual_norms[p + 1], 1e-13 * out.residual_norms[0]);
    EXPECT_TRUE(theorem_bound_check(out, p, 0.0, 1e4).pass);
  }
}

TEST(TheoremBoundCheck, SweepOverSeedsPasses) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto syn = synthetic_compact({120, 5, 1e-8, seed});
    std::mt19937_64 rng(1000 + seed);
    const auto out = gmres(syn.op, random_vector(120, rng), Vector(120, 0.0), 1e-6, 120);
    const auto v = theorem_bound_check(out, 5, 1e-8, 1e4);
    EXPECT_TRUE(v.pass) << "seed " << seed << " worst ratio " << v.worst_ratio;
  }
}

TEST(TheoremBoundCheck, UnstructuredOperatorFails) {
  std::mt19937_64 rng(21);
  const std::size_t n = 60;
  DenseMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0 + 9.0 * static_cast<double>(i) / n;
  const auto out = gmres(dense_operator(m), random_vector(n, rng), Vector(n, 0.0), 1e-10, n);
  for (std::size_t k = 1; k < out.residual_norms.size(); ++k)
    EXPECT_LE(out.residual_norms[k], out.residual_norms[k - 1]);
  const auto v = theorem_bound_check(out, 3, 1e-10, 1e4);
  EXPECT_FALSE(v.pass);
  EXPECT_GT(v.worst_ratio, 1.0);
}

}  // namespace
}  // namespace tsk
