#include <gtest/gtest.h>

#include <cmath>

#include "pzo/baselines.hpp"
#include "pzo/pca.hpp"

using namespace pzo;

TEST(Baselines, RgfFirstStep) {
  EXPECT_NEAR(rgf_step(1), 0.008326, 5e-7);
  EXPECT_DOUBLE_EQ(rgf_step(4), rgf_step(1) / 4.0);
  EXPECT_DOUBLE_EQ(zo_sgd_step(4), 0.005);
}

TEST(Baselines, ZeroGradientKeepsInitialPoint) {
  ProblemInstance p;
  p.oracle.dimension = 3;
  p.oracle.query = [](const Vector&, Seed) { return 1.5; };
  p.X = FeasibleSet::whole_space(3);
  p.constraint = no_constraint(3);
  p.initial_point = Vector::LinSpaced(3, -1.0, 2.0);
  for (auto par : {make_rgf_params(25, 0.1), make_zo_sgd_params(25, 0.1, 4)}) {
    const RunOutput out = run_baseline(p, par, 11);
    for (const Vector& x : out.iterates) EXPECT_EQ(x, *p.initial_point);
    EXPECT_EQ(out.oracle_calls, 2 * 25 * par.J);
  }
}

TEST(Baselines, IgnoreTheLinearConstraint) {
  const auto inst = pca::generate_instance(4, 5, 3, 20, 1e-4, 0.01, 3);
  const RunOutput out = run_baseline(inst.problem, make_zo_sgd_params(60, 0.1, 20), 5);
  // iterates stay feasible for X but do not reach consensus
  EXPECT_TRUE(inst.problem.X.contains(out.final_state.x_curr, 1e-12));
  EXPECT_GT(out.trajectory.back().constraint_violation, 1e-3);
  EXPECT_EQ(out.trajectory.back().dual_step, 0.0);
  ASSERT_TRUE(out.trajectory.back().psi.has_value());
}

TEST(Baselines, DeterministicPerSeed) {
  const auto inst = pca::generate_instance(3, 3, 2, 10, 1e-4, 0.01, 4);
  const RunOutput a = run_baseline(inst.problem, make_rgf_params(40, 0.1), 8);
  const RunOutput b = run_baseline(inst.problem, make_rgf_params(40, 0.1), 8);
  const RunOutput c = run_baseline(inst.problem, make_rgf_params(40, 0.1), 9);
  EXPECT_EQ(a.iterates.back(), b.iterates.back());
  EXPECT_NE(a.iterates.back(), c.iterates.back());
}

TEST(Baselines, PenaltyWrapperReducesViolation) {
  const auto inst = pca::generate_instance(4, 5, 3, 20, 1e-4, 0.01, 3);
  const auto par = make_zo_sgd_params(200, 0.05, 20);
  const double plain = run_baseline(inst.problem, par, 5).trajectory.back().constraint_violation;
  const double penalized =
      run_baseline(with_quadratic_penalty(inst.problem, 50.0), par, 5).trajectory.back().constraint_violation;
  EXPECT_LT(penalized, plain);
}

TEST(Baselines, BadParamsRejected) {
  BaselineParams p = make_rgf_params(5, 0.1);
  p.mu = 0.0;
  EXPECT_THROW(p.check(), ParameterError);
  p = make_zo_sgd_params(5, 0.1, 0);
  EXPECT_THROW(p.check(), ParameterError);
}
