#include <gtest/gtest.h>

#include <cmath>
#include <memory>
#include <random>

#include "test_util.hpp"
#include "tsk/newton.hpp"
#include "tsk/problems.hpp"
#include "tsk/timestepper.hpp"

namespace tsk {
namespace {

using testing::random_matrix;
using testing::random_vector;

NonlinearSystem linear_system(const DenseMatrix& a, Vector b = {}) {
  if (b.empty()) b.assign(a.rows(), 0.0);
  return {a.rows(), [a, b](std::span<const double> u) {
            Vector y = a.multiply(u);
            axpy(-1.0, b, y);
            return y;
          }};
}

NonlinearSystem square_system(std::size_t n) {
  return {n, [](std::span<const double> u) {
            Vector y(u.begin(), u.end());
            for (double& v : y) v *= v;
            return y;
          }};
}

// Wraps a system and counts residual calls.
struct Counted {
  std::shared_ptr<std::size_t> calls = std::make_shared<std::size_t>(0);
  NonlinearSystem sys;

  explicit Counted(NonlinearSystem inner) {
    sys.dimension = inner.dimension;
    sys.residual = [inner, c = calls](std::span<const double> u) {
      ++*c;
      return inner.residual(u);
    };
  }
};

TEST(Dirder, LinearMapIsRecovered) {
  std::mt19937_64 rng(3);
  const DenseMatrix a = random_matrix(20, 20, rng);
  const auto sys = linear_system(a);
  const Vector u = random_vector(20, rng), v = random_vector(20, rng);
  const Vector got = dirder(sys, u, v, sys(u));
  const Vector want = a.multiply(v);
  EXPECT_LT(norm2(subtract(got, want)), 1e-7 * a.frobenius() * norm2(v));
}

TEST(Dirder, ElementwiseSquare) {
  const auto sys = square_system(2);
  const Vector u{1.0, 2.0};
  const Vector got = dirder(sys, u, Vector{1.0, 0.0}, sys(u));
  EXPECT_NEAR(got[0], 2.0, 1e-6);
  EXPECT_NEAR(got[1], 0.0, 1e-6);
}

TEST(Dirder, ZeroDirectionCostsNothing) {
  Counted c(square_system(3));
  const Vector u{1.0, 2.0, 3.0};
  const Vector f = c.sys(u);
  *c.calls = 0;
  const Vector got = dirder(c.sys, u, Vector(3, 0.0), f);
  EXPECT_EQ(*c.calls, 0u);
  for (double g : got) EXPECT_EQ(g, 0.0);
}

TEST(Dirder, OneEvaluationPerCall) {
  Counted c(square_system(3));
  const Vector u{1.0, 2.0, 3.0};
  const Vector f = c.sys(u);
  *c.calls = 0;
  dirder(c.sys, u, Vector{0.0, 1.0, 0.0}, f);
  EXPECT_EQ(*c.calls, 1u);
}

TEST(Dirder, NonFiniteProbeIsReported) {
  NonlinearSystem bad{1, [](std::span<const double> u) {
                        return Vector{u[0] > 1.0 ? std::numeric_limits<double>::infinity() : u[0]};
                      }};
  EXPECT_THROW(dirder(bad, Vector{1.0}, Vector{1.0}, Vector{1.0}), NumericalError);
}

TEST(DirderProperties, ErrorWithinIncrementScale) {
  std::mt19937_64 rng(5);
  const ChafeeInfanteSpec spec{41, 2.0};
  const NonlinearSystem ci{spec.interior(), [spec](std::span<const double> u) { return ci_rhs(spec, u); }};
  for (int trial = 0; trial < 20; ++trial) {
    const Vector u = random_vector(spec.interior(), rng), v = random_vector(spec.interior(), rng);
    const Tridiagonal j = ci_jacobian_tridiag(spec, u);
    const double jnorm = testing::to_eigen(j.to_dense()).norm();
    const double h = dirder_increment(u, v);
    const Vector err = subtract(dirder(ci, u, v, ci(u)), j.multiply(v));
    // curvature of the cubic adds |6 u v^2| h / 2 per component
    EXPECT_LE(norm2(err), 10.0 * h * jnorm * norm2(v)) << "trial " << trial;
  }
  const auto sq = square_system(30);
  for (int trial = 0; trial < 20; ++trial) {
    const Vector u = random_vector(30, rng), v = random_vector(30, rng);
    Vector jv(30);
    for (std::size_t i = 0; i < 30; ++i) jv[i] = 2.0 * u[i] * v[i];
    const double h = dirder_increment(u, v);
    EXPECT_LE(norm2(subtract(dirder(sq, u, v, sq(u)), jv)), 10.0 * h * 2.0 * norm_inf(u) * norm2(v) + 10.0 * h * norm2(v));
  }
}

TEST(ForcingTerm, ConstantModeIgnoresHistory) {
  const auto cfg = ForcingConfig::constant(1e-4);
  EXPECT_EQ(forcing_term(cfg, 0.5, 1.0, 0.3), 1e-4);
  EXPECT_EQ(forcing_term(cfg, 1e-9, 1.0, 1e-4), 1e-4);
}

TEST(ForcingTerm, EisenstatWalkerQuadraticRatio) {
  ForcingConfig cfg;
  EXPECT_NEAR(forcing_term(cfg, 0.1, 1.0, 1e-3), 0.009, 1e-15);
}

TEST(ForcingTerm, StagnationClampsToEtaMax) {
  ForcingConfig cfg;
  EXPECT_EQ(forcing_term(cfg, 1.0, 1.0, 0.01), cfg.eta_max);
}

TEST(ForcingTerm, SafeguardAndFloor) {
  ForcingConfig cfg;
  // 0.9 * 0.5^2 = 0.225 > 0.1 keeps eta from collapsing
  EXPECT_NEAR(forcing_term(cfg, 1e-6, 1.0, 0.5), 0.225, 1e-15);
  EXPECT_EQ(forcing_term(cfg, 1e-12, 1.0, 1e-6), cfg.eta_floor);
}

TEST(ForcingConfig, RejectsOutOfOrderBounds) {
  ForcingConfig cfg;
  cfg.eta_floor = 0.5;
  cfg.eta_const = 0.1;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  ForcingConfig g;
  g.gamma = 1.5;
  EXPECT_THROW(g.validate(), std::invalid_argument);
}

TEST(NewtonGmres, ShiftedIdentityInOneStep) {
  const Vector b{1.0, -2.0, 0.5, 4.0};
  NonlinearSystem sys{4, [b](std::span<const double> u) { return subtract(u, b); }};
  NewtonConfig cfg;
  cfg.atol = cfg.rtol = 1e-6;  // forward differences of a linear map are exact only to ~1e-8
  const auto out = newton_gmres(sys, Vector(4, 0.0), cfg);
  ASSERT_TRUE(out.converged);
  EXPECT_EQ(out.outer_steps(), 1u);
  EXPECT_EQ(out.inner_iterations[1], 1u);
  EXPECT_LT(norm2(subtract(out.solution, b)), 1e-6);
}

TEST(NewtonGmres, HistoryLengthsAgree) {
  const auto sys = heq_system({100, 0.5});
  const auto out = newton_gmres(sys, Vector(100, 1.0), NewtonConfig{});
  ASSERT_TRUE(out.converged);
  EXPECT_EQ(out.f_norms.size(), out.inner_iterations.size());
  EXPECT_EQ(out.f_norms.size(), out.cumulative_fevals.size());
  for (std::size_t k = 1; k < out.f_norms.size(); ++k) {
    EXPECT_LT(out.f_norms[k], out.f_norms[k - 1]);
    EXPECT_GE(out.cumulative_fevals[k], out.cumulative_fevals[k - 1]);
  }
  EXPECT_LE(out.f_norms.back(), 1e-12 + 1e-12 * out.f_norms.front());
}

TEST(NewtonGmres, FevalAccountingMatchesCountingWrapper) {
  for (double c : {0.3, 0.9, 0.9999179}) {
    Counted counted(heq_system({100, c}));
    const auto out = newton_gmres(counted.sys, Vector(100, 1.0), NewtonConfig{});
    ASSERT_TRUE(out.converged) << "c = " << c;
    std::size_t expected = 1;
    for (std::size_t k = 1; k < out.inner_iterations.size(); ++k) expected += out.inner_iterations[k] + 1;
    EXPECT_EQ(out.total_fevals(), expected);
    EXPECT_EQ(*counted.calls, expected);
  }
}

TEST(NewtonGmres, HEquationFromPerturbedSolution) {
  const HEquationSpec spec;
  const auto sys = heq_system(spec);
  const auto ref = newton_gmres(sys, Vector(spec.n_nodes, 1.0), NewtonConfig{});
  ASSERT_TRUE(ref.converged);
  Vector u0 = ref.solution;
  const Vector mu = spec.nodes();
  for (std::size_t i = 0; i < u0.size(); ++i) u0[i] += 0.05 * std::sin(mu[i]);
  const auto out = newton_gmres(sys, u0, NewtonConfig{});
  ASSERT_TRUE(out.converged);
  for (std::size_t k = 1; k < out.inner_iterations.size(); ++k) EXPECT_LE(out.inner_iterations[k], 6u);
  // this close to the fold the positive perturbation carries the iteration to
  // the companion root; the negative one returns to the reference
  EXPECT_LT(norm_inf(subtract(out.solution, ref.solution)), 0.1);
  EXPECT_LT(norm2(sys(out.solution)), 1e-10);
  for (std::size_t i = 0; i < u0.size(); ++i) u0[i] = ref.solution[i] - 0.05 * std::sin(mu[i]);
  const auto back = newton_gmres(sys, u0, NewtonConfig{});
  ASSERT_TRUE(back.converged);
  EXPECT_LT(norm_inf(subtract(back.solution, ref.solution)), 1e-8);
}

TEST(NewtonGmres, MaxOuterReachedKeepsHistory) {
  const auto sys = heq_system({100, 0.9});
  NewtonConfig cfg;
  cfg.max_outer = 1;
  const auto out = newton_gmres(sys, Vector(100, 1.0), cfg);
  EXPECT_FALSE(out.converged);
  EXPECT_EQ(out.f_norms.size(), 2u);
}

TEST(NewtonGmres, DampingRecoversFromOvershoot) {
  // atan has a Newton iteration that diverges from |u0| > 1.39 without damping
  NonlinearSystem sys{1, [](std::span<const double> u) { return Vector{std::atan(u[0])}; }};
  NewtonConfig cfg;
  cfg.damping = true;
  cfg.atol = 1e-10;
  const auto out = newton_gmres(sys, Vector{3.0}, cfg);
  EXPECT_TRUE(out.converged);
  EXPECT_NEAR(out.solution[0], 0.0, 1e-9);
}

TEST(NewtonGmres, RejectsBadInput) {
  const auto sys = heq_system({10, 0.5});
  EXPECT_THROW(newton_gmres(sys, Vector(9, 1.0), NewtonConfig{}), std::invalid_argument);
  NewtonConfig cfg;
  cfg.atol = 0.0;
  EXPECT_THROW(newton_gmres(sys, Vector(10, 1.0), cfg), std::invalid_argument);
}

TEST(NewtonProperties, LocalQuadraticDecreaseOnHEquation) {
  const auto sys = heq_system({100, 0.9});
  NewtonConfig cfg;
  cfg.atol = cfg.rtol = 1e-14;
  const auto out = newton_gmres(sys, Vector(100, 1.0), cfg);
  ASSERT_TRUE(out.converged);
  ASSERT_GE(out.f_norms.size(), 4u);
  const std::size_t last = out.f_norms.size() - 1;
  for (std::size_t k = last - 2; k < last; ++k) {
    if (out.f_norms[k + 1] < 1e-13) continue;  // rounding floor
    EXPECT_LE(out.f_norms[k + 1] / (out.f_norms[k] * out.f_norms[k]), 1e3) << "step " << k;
  }
}

TEST(NewtonGmres, ChafeeInfanteTimeStepperLastStepUsesTwoInner) {
  const ChafeeInfanteSpec spec;
  const Vector ustar = ci_steady_state(spec, ci_sine_profile(spec, 1.0));
  const auto prob = ci_problem(spec.n_points);
  StepperConfig sc{StepperMethod::rk4, 4.0, stable_rk4_dt(prob, spec.lambda)};
  const auto sys = fixed_point_system(prob, spec.lambda, sc);
  Vector u0 = ustar;
  axpy(1.0, ci_sine_profile(spec, 0.1), u0);
  NewtonConfig cfg;
  cfg.atol = 1e-10;
  cfg.rtol = 1e-12;
  cfg.forcing = ForcingConfig::constant(1e-3);
  const auto out = newton_gmres(sys, u0, cfg);
  ASSERT_TRUE(out.converged);
  EXPECT_EQ(out.last_step_inner(), 2u);
}

}  // namespace
}  // namespace tsk
