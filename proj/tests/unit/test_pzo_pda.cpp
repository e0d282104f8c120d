#include <gtest/gtest.h>

#include <algorithm>

#include "pzo/pca.hpp"
#include "pzo/pzo_pda.hpp"

using namespace pzo;

namespace {

bool has(const std::vector<Violation>& v, const char* cond) {
  return std::any_of(v.begin(), v.end(), [&](const Violation& x) { return x.condition == cond; });
}

SolverParams params(double rho, double gamma, double beta) {
  SolverParams p;
  p.rho = rho;
  p.gamma = gamma;
  p.beta = beta;
  return p;
}

ProblemInstance small_problem(Index n, Index m, Seed seed, double l1 = 0.2) {
  Rng rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  Matrix Q(n, n), A(m, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) Q(i, j) = g(rng);
  for (Index i = 0; i < m; ++i)
    for (Index j = 0; j < n; ++j) A(i, j) = g(rng);
  ProblemInstance p;
  p.oracle = make_quadratic_oracle(0.5 * (Q + Q.transpose()) / static_cast<double>(n), 0.01, 2.0);
  p.h = NonsmoothTerm::l1(l1);
  p.X = FeasibleSet::ball(n, 2.0);
  p.constraint = {A, Vector::Zero(m)};
  p.initial_point = Vector::Constant(n, 0.3);
  return p;
}

}  // namespace

TEST(ValidateParams, ConditionOneViolated) {
  const auto v = validate_params(params(10.0, 0.01, 10.0), 1.0);
  EXPECT_TRUE(has(v, kCondDual));
  EXPECT_EQ(v.size(), 1u);
}

TEST(ValidateParams, RhoBelowBeta) {
  const auto v = validate_params(params(1.0, 0.5, 10.0), 1.0);
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v[0].condition, kCondRhoBeta);
}

TEST(ValidateParams, ConditionTwoIsStrict) {
  const auto v = validate_params(params(100.0, 0.007, 8.0), 1.0);
  EXPECT_TRUE(has(v, kCondBetaQuadratic));
  EXPECT_FALSE(has(validate_params(params(100.0, 0.007, 8.0000001), 1.0), kCondBetaQuadratic));
}

TEST(ValidateParams, NeverThrowsOnGarbage) {
  SolverParams p = params(-1.0, 0.0, std::nan(""));
  p.J = 0;
  std::vector<Violation> v;
  EXPECT_NO_THROW(v = validate_params(p, 1.0));
  EXPECT_GE(v.size(), 4u);
}

TEST(DeriveParams, FreeGammaSatisfiesEverything) {
  for (double L : {0.0, 0.5, 3.0, 534.0}) {
    const ParamPreset pr = derive_params(L);
    SolverParams p = params(pr.rho, pr.gamma, pr.beta);
    EXPECT_TRUE(validate_params(p, L).empty()) << "L = " << L;
  }
}

TEST(DeriveParams, PublishedGammaLeavesConditionTwoOpenForLargeL) {
  const ParamPreset pr = derive_params(534.0, 0.7, 1e-5);
  EXPECT_DOUBLE_EQ(pr.rho, 7e4);
  const auto v = validate_params(params(pr.rho, pr.gamma, pr.beta), 534.0);
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v[0].condition, kCondBetaQuadratic);
}

TEST(DeriveParams, AdmissibleRangeOfRhoGamma) {
  // condition 1 with gamma = a / rho becomes a^2 - 5a + 2 < 0
  const double lo = min_admissible_rho_gamma();
  EXPECT_NEAR(lo * lo - 5.0 * lo + 2.0, 0.0, 1e-12);
  EXPECT_TRUE(has(validate_params(params(100.0, (lo - 1e-3) / 100.0, 100.0), 1.0), kCondDual));
  EXPECT_FALSE(has(validate_params(params(100.0, (lo + 1e-3) / 100.0, 100.0), 1.0), kCondDual));
  EXPECT_THROW(derive_params(1.0, 1.0), ParameterError);
}

TEST(ScalingMatrix, ClosedFormIdentityExample) {
  const Matrix I = Matrix::Identity(3, 3);
  const Matrix G = build_scaling_matrix(I, 1.0, 1.0, ScalingMode::closed_form);
  EXPECT_LT((G - I).norm(), 1e-15);
}

TEST(ScalingMatrix, IdentityComplementForZeroA) {
  const Matrix G = build_scaling_matrix(Matrix::Zero(2, 4), 1.0, 1.0, ScalingMode::identity_complement);
  EXPECT_LT((G - Matrix::Identity(4, 4)).norm(), 1e-15);
}

TEST(ScalingMatrix, PostconditionInEveryMode) {
  Rng rng(5);
  std::normal_distribution<double> g(0.0, 1.0);
  Matrix A(3, 5);
  for (Index i = 0; i < 3; ++i)
    for (Index j = 0; j < 5; ++j) A(i, j) = g(rng);
  const Matrix AtA = A.transpose() * A;
  for (auto mode : {ScalingMode::closed_form, ScalingMode::identity_complement}) {
    const Matrix G = build_scaling_matrix(A, 2.0, 3.0, mode);
    EXPECT_GE(min_eigenvalue(AtA + G), 1.0 - 1e-10);
  }
  EXPECT_NO_THROW(build_scaling_matrix(A, 1.0, 1.0, ScalingMode::explicit_gram, Matrix(Matrix::Identity(5, 5))));
  EXPECT_THROW(build_scaling_matrix(A, 1.0, 1.0, ScalingMode::explicit_gram, Matrix(0.1 * Matrix::Identity(5, 5))),
               ParameterError);
  EXPECT_THROW(build_scaling_matrix(A, 1.0, 1.0, ScalingMode::explicit_gram), ParameterError);
}

TEST(PrimalUpdate, FixedPointWithoutForces) {
  ProblemInstance p;
  p.oracle = make_quadratic_oracle(Matrix::Identity(3, 3));
  p.X = FeasibleSet::whole_space(3);
  p.constraint = {Matrix::Zero(1, 3), Vector::Zero(1)};
  const SolverParams par = params(2.0, 0.1, 2.0);
  const auto sub = make_subproblem(p, par);
  Vector x(3);
  x << 0.4, -1.0, 2.0;
  for (auto s : {PrimalStrategy::closed_form, PrimalStrategy::iterative}) {
    const PrimalStep st = primal_update(p, sub, x, Vector::Zero(1), par, Vector::Zero(3), s);
    EXPECT_LT((st.x - x).norm(), 1e-12);
  }
}

TEST(PrimalUpdate, StrategiesAgreeInTwoDimensions) {
  ProblemInstance p = small_problem(2, 1, 17, 1.0);
  const SolverParams par = params(3.0, 0.2, 2.0);
  const auto sub = make_subproblem(p, par);
  Vector x(2), G(2), lam(1);
  x << 0.5, -0.1;
  G << 1.5, -0.3;
  lam << 0.7;
  InnerSolverOptions inner;
  inner.lipschitz_scale = 3.0;
  const auto a = primal_update(p, sub, x, lam, par, G, PrimalStrategy::closed_form);
  const auto b = primal_update(p, sub, x, lam, par, G, PrimalStrategy::iterative, inner);
  EXPECT_GT(b.inner_iterations, 1);
  EXPECT_LT((a.x - b.x).norm(), 1e-8);
  EXPECT_LE(subproblem_vi_residual(p, sub, par, x, lam, G, a, 100, 1), 1e-6);
  EXPECT_LE(subproblem_vi_residual(p, sub, par, x, lam, G, b, 100, 2), 1e-6);
}

TEST(PrimalUpdate, IterativeHandlesNonDiagonalHessian) {
  ProblemInstance p = small_problem(6, 3, 23);
  SolverParams par = params(4.0, 0.1, 2.0);
  par.scaling = ScalingMode::identity_complement;
  const auto sub = make_subproblem(p, par);
  EXPECT_GT(sub.lmax / sub.lmin, 1.0 + 1e-6);
  const Vector x = Vector::Constant(6, 0.2), G = Vector::LinSpaced(6, -1.0, 1.0), lam = Vector::Ones(3);
  const auto st = primal_update(p, sub, x, lam, par, G);
  EXPECT_LE(st.inner_residual, 1e-10);
  EXPECT_LE(subproblem_vi_residual(p, sub, par, x, lam, G, st, 200, 3), 1e-6);
  EXPECT_THROW(primal_update(p, sub, x, lam, par, G, PrimalStrategy::closed_form), ParameterError);
}

TEST(PrimalUpdate, CapExceededCarriesResidual) {
  ProblemInstance p = small_problem(6, 3, 29);
  SolverParams par = params(4.0, 0.1, 2.0);
  par.scaling = ScalingMode::identity_complement;
  const auto sub = make_subproblem(p, par);
  InnerSolverOptions inner;
  inner.cap_floor = 0;
  inner.cap_per_sqrt_condition = 1;
  inner.tolerance = 1e-300;
  try {
    primal_update(p, sub, Vector::Zero(6), Vector::Ones(3), par, Vector::Ones(6), PrimalStrategy::iterative, inner);
    FAIL() << "expected SolverError";
  } catch (const SolverError& e) {
    EXPECT_GT(e.last_residual(), 0.0);
  }
}

TEST(DualUpdate, Examples) {
  LinearConstraint c{Matrix::Identity(1, 1), Vector::Zero(1)};
  Vector lam(1), x(1);
  lam << 2.0;
  x << 1.0;
  EXPECT_DOUBLE_EQ(dual_update(lam, x, c, 1.0, 0.5)[0], 2.0);
  EXPECT_EQ(dual_update(Vector::Zero(1), Vector::Zero(1), c, 3.0, 0.1), Vector::Zero(1));
  EXPECT_DOUBLE_EQ(dual_update(lam, x, c, 1.5, 0.0)[0], 2.0 + 1.5);
}

TEST(Run, ZeroIterationsReturnsInitialPoint) {
  const ProblemInstance p = small_problem(4, 2, 31);
  SolverParams par = params(1.0, 0.7, 1.0);
  par.R = 0;
  RunOptions ro;
  ro.force = true;
  const RunOutput out = run(p, par, 5, ro);
  EXPECT_EQ(out.sample_index, 0);
  EXPECT_EQ(out.x_a, *p.initial_point);
  EXPECT_TRUE(out.trajectory.empty());
}

TEST(Run, InvalidParametersNeedForce) {
  const ProblemInstance p = small_problem(4, 2, 37);
  SolverParams par = params(1.0, 0.5, 10.0);
  par.R = 3;
  EXPECT_THROW(run(p, par, 1), ParameterError);
  RunOptions ro;
  ro.force = true;
  const RunOutput out = run(p, par, 1, ro);
  EXPECT_FALSE(out.warnings.empty());
  EXPECT_EQ(out.trajectory.size(), 3u);
}

TEST(Run, SameSeedIsBitIdenticalAndCallbackStreamsRows) {
  const ProblemInstance p = small_problem(5, 2, 41);
  const ParamPreset pr = derive_params(p.oracle.smoothness);
  SolverParams par = params(pr.rho, pr.gamma, pr.beta);
  par.R = 30;
  par.J = 5;
  RunOptions ro;
  ro.diagnostics = DiagnosticsLevel::full;
  long seen = 0;
  ro.on_row = [&](const MetricRow& row) { EXPECT_EQ(row.r, ++seen % 30 == 0 ? 30 : seen % 30); };
  const RunOutput a = run(p, par, 77, ro);
  const RunOutput b = run(p, par, 77, ro);
  EXPECT_EQ(seen, 60);
  ASSERT_EQ(a.trajectory.size(), 30u);
  for (std::size_t i = 0; i < 30; ++i) {
    EXPECT_EQ(a.iterates[i], b.iterates[i]);
    EXPECT_EQ(*a.trajectory[i].Q, *b.trajectory[i].Q);
    EXPECT_EQ(a.trajectory[i].oracle_calls_cum, static_cast<long long>(2 * 5 * (i + 1)));
  }
  EXPECT_EQ(a.sample_index, b.sample_index);
  EXPECT_GE(a.sample_index, 0);
  EXPECT_LE(a.sample_index, 30);
  EXPECT_EQ(a.x_a, a.iterates[static_cast<std::size_t>(a.sample_index)]);
}

TEST(Run, NonFiniteOracleAbortsWithPartialTrajectory) {
  ProblemInstance p = small_problem(3, 1, 43);
  const auto base = p.oracle.query;
  auto calls = std::make_shared<int>(0);
  p.oracle.query = [base, calls](const Vector& x, Seed s) {
    return ++*calls > 40 ? std::numeric_limits<double>::quiet_NaN() : base(x, s);
  };
  const ParamPreset pr = derive_params(p.oracle.smoothness);
  SolverParams par = params(pr.rho, pr.gamma, pr.beta);
  par.R = 50;
  par.J = 2;
  try {
    run(p, par, 3);
    FAIL() << "expected RunAborted";
  } catch (const RunAborted& e) {
    EXPECT_EQ(e.partial().trajectory.size(), 10u);
  }
}

TEST(Run, ConstraintViolationShrinksOnPcaInstance) {
  const auto inst = pca::generate_instance(4, 5, 3, 20, 1e-4, 0.01, 7);
  const ParamPreset pr = derive_params(inst.problem.oracle.smoothness);
  SolverParams par = params(pr.rho, pr.gamma, pr.beta);
  par.R = 100;
  par.J = 100;
  par.mu = 0.1;
  const RunOutput out = run(inst.problem, par, 9);
  EXPECT_LT(out.trajectory.back().constraint_violation, 1e-2 * out.trajectory.front().constraint_violation);
  EXPECT_TRUE(inst.problem.X.contains(out.final_state.x_curr, 1e-12));
}
