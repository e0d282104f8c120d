#include <gtest/gtest.h>

#include <sstream>

#include "pzo/diagnostics.hpp"
#include "pzo/pca.hpp"

using namespace pzo;

namespace {

ProblemInstance quadratic_problem(const Matrix& Q, Index m = 0) {
  ProblemInstance p;
  p.oracle = make_quadratic_oracle(Q);
  p.X = FeasibleSet::whole_space(Q.rows());
  p.constraint = {Matrix::Zero(m, Q.rows()), Vector::Zero(m)};
  return p;
}

}  // namespace

TEST(OptimalityGap, ZeroAtStationaryFixedPoint) {
  ProblemInstance p = quadratic_problem(Matrix::Identity(2, 2), 1);
  const Vector x = Vector::Zero(2), lam = Vector::Zero(1);
  EXPECT_EQ(optimality_gap(p, x, x, lam, lam, 3.0, 2.0), 0.0);
}

TEST(OptimalityGap, UnconstrainedSmoothCase) {
  Matrix Q(2, 2);
  Q << 2.0, 0.5, 0.5, 1.0;
  ProblemInstance p = quadratic_problem(Q);
  Vector x(2);
  x << 0.3, -0.7;
  const double beta = 4.0;
  const Vector g = 2.0 * Q * x;
  const double psi = optimality_gap(p, x, x, Vector::Zero(0), Vector::Zero(0), beta, 1.0);
  EXPECT_NEAR(psi, g.squaredNorm() / (beta * beta), 1e-15);
  EXPECT_EQ(psi, optimality_gap(p, x, x, Vector::Zero(0), Vector::Zero(0), beta, 1.0));
}

TEST(OptimalityGap, MissingGradientIsCapabilityError) {
  ProblemInstance p = quadratic_problem(Matrix::Identity(2, 2));
  p.oracle.exact_gradient = nullptr;
  p.oracle.smoothed_gradient = nullptr;
  const Vector x = Vector::Zero(2);
  EXPECT_THROW(optimality_gap(p, x, x, Vector::Zero(0), Vector::Zero(0), 1.0, 1.0), CapabilityError);
  EXPECT_THROW(optimality_gap(p, x, x, Vector::Zero(0), Vector::Zero(0), 1.0, 1.0, GradientSource::smoothed, 0.1),
               CapabilityError);
}

TEST(AlValueC, Examples) {
  ProblemInstance p = quadratic_problem(Matrix::Identity(2, 2));
  SmoothedValueSource src;
  src.mu = 1.0;
  EXPECT_DOUBLE_EQ(al_value_C(p, Vector::Zero(2), Vector::Zero(0), 1.0, 0.5, src), 0.5);

  // feasible x, lambda = 0: C = f_mu(x)
  ProblemInstance q = quadratic_problem(Matrix::Identity(2, 2), 1);
  q.constraint.A << 1.0, -1.0;
  const Vector x = Vector::Constant(2, 0.4);
  src.mu = 0.3;
  EXPECT_DOUBLE_EQ(al_value_C(q, x, Vector::Zero(1), 2.0, 0.1, src), q.oracle.smoothed_value(x, 0.3));

  // with Ax = b the multiplier enters only through -(1 - rho gamma) gamma ||lam||^2
  const double rho = 2.0, gamma = 0.1;
  Vector lam(1);
  lam << 3.0;
  const double drop = al_value_C(q, x, Vector::Zero(1), rho, gamma, src) - al_value_C(q, x, lam, rho, gamma, src);
  EXPECT_NEAR(drop, (1.0 - rho * gamma) * gamma * 9.0, 1e-14);
}

TEST(AlValueC, MissingSmoothedValueIsCapabilityError) {
  ProblemInstance p = quadratic_problem(Matrix::Identity(2, 2));
  p.oracle.smoothed_value = nullptr;
  SmoothedValueSource src;
  src.mu = 0.1;
  EXPECT_THROW(al_value_C(p, Vector::Zero(2), Vector::Zero(0), 1.0, 0.5, src), CapabilityError);
  src.mode = SmoothedValueSource::Mode::monte_carlo;
  EXPECT_NO_THROW(al_value_C(p, Vector::Zero(2), Vector::Zero(0), 1.0, 0.5, src));
}

TEST(PotentialQ, ReducesToCWhenIteratesCoincide) {
  ProblemInstance p = quadratic_problem(Matrix::Identity(3, 3), 1);
  p.constraint.A << 1.0, 1.0, -2.0;
  const Vector x = Vector::Constant(3, 0.25);
  SmoothedValueSource src;
  src.mu = 0.2;
  const PotentialParams par{2.0, 0.1, 3.0, 2.0};
  const Matrix G = Matrix::Identity(3, 3);
  EXPECT_DOUBLE_EQ(potential_Q(p, x, Vector::Zero(1), x, Vector::Zero(1), par, G, src),
                   p.oracle.smoothed_value(x, 0.2));
  Vector lam(1), lam_prev(1);
  lam << 1.5;
  lam_prev << -1.0;
  const Vector x_prev = Vector::Constant(3, -0.1);
  const double c0 = potential_Q(p, x_prev, lam_prev, x, lam, par, G, src, 0.0);
  EXPECT_NEAR(c0, al_value_C(p, x, lam, 2.0, 0.1, src) + 0.5 * 0.8 * 0.1 * 2.25, 1e-14);
}

TEST(PotentialQ, ShiftedPotential) {
  EXPECT_DOUBLE_EQ(shifted_potential(10.0, 0, 2.0), 10.0 - 7.0);
  EXPECT_DOUBLE_EQ(shifted_potential(10.0, 4, 2.0), 10.0 - 5 * 3.5 * 2.0);
}

TEST(Stationarity, QuadraticMinimizer) {
  ProblemInstance p = quadratic_problem(Matrix::Identity(2, 2));
  const auto rep = stationarity_check(p, Vector::Zero(2), Vector::Zero(0), 1e-8);
  EXPECT_TRUE(rep.stationary);
  EXPECT_EQ(rep.prox_residual, 0.0);
}

TEST(Stationarity, RandomPointIsFlagged) {
  ProblemInstance p = quadratic_problem(Matrix::Identity(2, 2));
  Vector x(2);
  x << 0.8, -0.3;
  EXPECT_FALSE(stationarity_check(p, x, Vector::Zero(0), 1e-8).stationary);
}

TEST(Stationarity, ConsensusPointSatisfiesConstraintExactly) {
  const auto inst = pca::generate_instance(4, 5, 3, 20, 1e-4, 0.01, 3);
  Vector x(12);
  for (int i = 0; i < 4; ++i) x.segment(i * 3, 3) << 0.2, -0.1, 0.4;
  const auto rep = stationarity_check(inst.problem, x, Vector::Zero(inst.problem.constraint_rows()), 1e-8);
  EXPECT_EQ(rep.constraint_norm, 0.0);
}

TEST(MetricCsv, HeaderOrderAndEmptyOptionals) {
  MetricRow row;
  row.r = 3;
  row.constraint_violation = 0.5;
  row.primal_step = 1e-300;
  row.oracle_calls_cum = 12;
  row.Q = -2.25;
  EXPECT_EQ(metric_csv_header(),
            "r,psi,psi_mu,constraint_violation,Q,Q_shifted,primal_step,dual_step,oracle_calls_cum,wall_ms,residual");
  EXPECT_EQ(to_csv_line(row), "3,,,0.5,-2.25,,1e-300,0,12,0,");
}

TEST(MetricCsv, DoublesRoundTrip) {
  for (double v : {0.1, 1.0 / 3.0, 6.02214076e23, 5e-324, -0.0}) {
    EXPECT_EQ(std::strtod(format_double(v).c_str(), nullptr), v);
  }
}
