#pragma once

// Proximal zeroth-order primal-dual iteration for
//   min_{x in X} f(x) + h(x)  s.t.  Ax = b
// with f known only through noisy values.
//
// Each iteration: batched two-point estimate G of grad f_mu at x^r, then
//   x^{r+1} = argmin_{x in X} <G, x - x^r> + h(x) + <(1 - rho gamma) lam^r, Ax - b>
//                              + (rho/2)||Ax - b||^2 + (beta/2)||x - x^r||^2_{B'B}
//   lam^{r+1} = (1 - rho gamma) lam^r + rho (A x^{r+1} - b)

#include <chrono>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "pzo/diagnostics.hpp"
#include "pzo/errors.hpp"
#include "pzo/estimator.hpp"
#include "pzo/linalg.hpp"
#include "pzo/problem.hpp"
#include "pzo/run_output.hpp"

namespace pzo {

enum class ScalingMode { closed_form, explicit_gram, identity_complement };

struct SolverParams {
  double rho = 1.0;    // penalty
  double gamma = 0.5;  // dual perturbation, rho * gamma < 1
  double beta = 1.0;   // proximal weight
  double mu = 0.1;     // smoothing radius
  long J = 1;          // oracle-call pairs per iteration
  long R = 100;        // iterations
  ScalingMode scaling = ScalingMode::closed_form;
  std::optional<Matrix> explicit_gram;  // B'B when scaling == explicit_gram
};

// ---------------------------------------------------------------------------
// Parameter validation
// ---------------------------------------------------------------------------

struct Violation {
  std::string condition;
  double lhs = 0.0;
  double rhs = 0.0;

  std::string describe() const {
    std::ostringstream os;
    os.precision(10);
    os << condition << " violated (lhs = " << lhs << ", rhs = " << rhs << ")";
    return os.str();
  }
};

inline constexpr const char* kCondRhoGamma = "rho*gamma < 1";
inline constexpr const char* kCondRhoBeta = "rho >= beta";
inline constexpr const char* kCondBetaLinear = "beta > 3L + 1";
inline constexpr const char* kCondDual = "condition 1: (1-rho*gamma)*gamma/2 + gamma - (1-rho*gamma)/rho > 0";
inline constexpr const char* kCondBetaQuadratic = "condition 2: beta > (3 + 3L)L + 2";

// Never throws. L stands in for L_mu (the conditions are monotone in it).
inline std::vector<Violation> validate_params(const SolverParams& p, double L) {
  std::vector<Violation> out;
  auto positive = [&](const char* name, double v) {
    if (!(v > 0.0)) out.push_back({std::string(name) + " > 0", v, 0.0});
  };
  positive("rho", p.rho);
  positive("gamma", p.gamma);
  positive("beta", p.beta);
  positive("mu", p.mu);
  if (p.J < 1) out.push_back({"J >= 1", static_cast<double>(p.J), 1.0});
  if (p.R < 0) out.push_back({"R >= 0", static_cast<double>(p.R), 0.0});

  const double rg = p.rho * p.gamma;
  if (!(rg < 1.0)) out.push_back({kCondRhoGamma, rg, 1.0});
  if (!(p.rho >= p.beta)) out.push_back({kCondRhoBeta, p.rho, p.beta});
  if (!(p.beta > 3.0 * L + 1.0)) out.push_back({kCondBetaLinear, p.beta, 3.0 * L + 1.0});
  const double cond1 = (1.0 - rg) * p.gamma / 2.0 + p.gamma - (1.0 - rg) / p.rho;
  if (!(cond1 > 0.0)) out.push_back({kCondDual, cond1, 0.0});
  const double beta_min = (3.0 + 3.0 * L) * L + 2.0;
  if (!(p.beta > beta_min)) out.push_back({kCondBetaQuadratic, p.beta, beta_min});
  return out;
}

// Lower end of the admissible alpha0 = rho*gamma range: condition 1 reduces to
// alpha0^2 - 5 alpha0 + 2 < 0 once gamma = alpha0 / rho.
inline double min_admissible_rho_gamma() { return (5.0 - std::sqrt(17.0)) / 2.0; }

struct ParamPreset {
  double rho = 0.0;
  double gamma = 0.0;
  double beta = 0.0;
};

// Derives (rho, gamma, beta) from L and a target alpha0 = rho*gamma.
// With gamma free: beta = margin * ((3+3L)L + 2), rho = beta, gamma = alpha0/rho.
// With gamma fixed: rho = alpha0/gamma and beta = min(rho, margin * ((3+3L)L + 2));
// condition 2 may then be unattainable, which validate_params reports.
inline ParamPreset derive_params(double L, double alpha0 = 0.7, std::optional<double> fixed_gamma = std::nullopt,
                                 double margin = 1.01) {
  if (!(alpha0 > 0.0 && alpha0 < 1.0)) throw ParameterError("derive_params: alpha0 must lie in (0, 1)");
  if (!(margin >= 1.0)) throw ParameterError("derive_params: margin must be >= 1");
  const double beta_req = margin * ((3.0 + 3.0 * L) * L + 2.0) + 1e-12;
  ParamPreset out;
  if (fixed_gamma) {
    if (!(*fixed_gamma > 0.0)) throw ParameterError("derive_params: gamma must be > 0");
    out.gamma = *fixed_gamma;
    out.rho = alpha0 / out.gamma;
    out.beta = std::min(out.rho, beta_req);
  } else {
    out.beta = beta_req;
    out.rho = out.beta;
    out.gamma = alpha0 / out.rho;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Scaling matrix (only its Gram B'B is ever formed)
// ---------------------------------------------------------------------------

inline Matrix build_scaling_matrix(const Matrix& A, double rho, double beta, ScalingMode mode,
                                   const std::optional<Matrix>& explicit_gram = std::nullopt) {
  const Index n = A.cols();
  const Matrix AtA = A.transpose() * A;
  const double smax = max_eigenvalue(AtA);
  switch (mode) {
    case ScalingMode::closed_form: {
      if (!(rho > 0.0) || !(beta > 0.0)) throw ParameterError("build_scaling_matrix: rho, beta must be > 0");
      const double eta = rho * smax + beta;
      return (eta / beta) * Matrix::Identity(n, n) - (rho / beta) * AtA;
    }
    case ScalingMode::identity_complement: {
      const double c = std::max(1.0, smax);
      return c * Matrix::Identity(n, n) - AtA;
    }
    case ScalingMode::explicit_gram: {
      if (!explicit_gram) throw ParameterError("build_scaling_matrix: explicit mode needs a Gram matrix");
      const Matrix& G = *explicit_gram;
      if (G.rows() != n || G.cols() != n) throw ParameterError("build_scaling_matrix: Gram has wrong shape");
      if (!is_symmetric(G, 1e-10)) throw ParameterError("build_scaling_matrix: Gram must be symmetric");
      if (min_eigenvalue(G) < -1e-10) throw ParameterError("build_scaling_matrix: Gram must be PSD");
      if (min_eigenvalue(AtA + G) < 1.0 - 1e-10) throw ParameterError("build_scaling_matrix: A'A + G >= I fails");
      return G;
    }
  }
  throw ParameterError("build_scaling_matrix: unknown mode");
}

// Quantities of the strongly convex primal subproblem fixed for a whole run.
struct PrimalSubproblem {
  ScalingMode mode = ScalingMode::closed_form;
  Matrix gram;     // B'B
  Matrix hessian;  // rho A'A + beta B'B
  double eta = 0.0;  // hessian == eta I in closed_form mode
  double lmin = 0.0;
  double lmax = 0.0;
};

inline PrimalSubproblem make_subproblem(const ProblemInstance& p, const SolverParams& params) {
  PrimalSubproblem s;
  s.mode = params.scaling;
  const Matrix& A = p.constraint.A;
  s.gram = build_scaling_matrix(A, params.rho, params.beta, params.scaling, params.explicit_gram);
  s.hessian = params.rho * (A.transpose() * A) + params.beta * s.gram;
  const Vector ev = symmetric_eigenvalues(s.hessian);
  s.lmin = ev.minCoeff();
  s.lmax = ev.maxCoeff();
  if (!(s.lmin > 0.0)) throw SolverError("primal subproblem is not strongly convex", s.lmin);
  if (s.mode == ScalingMode::closed_form) s.eta = params.rho * max_eigenvalue(A.transpose() * A) + params.beta;
  return s;
}

// ---------------------------------------------------------------------------
// Primal and dual updates
// ---------------------------------------------------------------------------

enum class PrimalStrategy { automatic, closed_form, iterative };

struct InnerSolverOptions {
  double tolerance = 1e-10;  // on ||x - T(x)||, T the proximal-gradient map
  long cap_per_sqrt_condition = 100;
  long cap_floor = 1000;
  double lipschitz_scale = 1.0;  // > 1 overestimates the curvature; slower, used for cross-checks
};

struct PrimalStep {
  Vector x;
  Vector h_subgradient;  // eta^{r+1} in dh(x^{r+1})
  long inner_iterations = 0;
  double inner_residual = 0.0;
};

// Gradient of the smooth part of the subproblem, assembled from A and B'B.
inline Vector subproblem_gradient(const ProblemInstance& p, const PrimalSubproblem& s, const SolverParams& par,
                                  const Vector& x_r, const Vector& lam_r, const Vector& G, const Vector& x) {
  const Matrix& A = p.constraint.A;
  return G + (1.0 - par.rho * par.gamma) * (A.transpose() * lam_r) +
         par.rho * (A.transpose() * (A * x - p.constraint.b)) + par.beta * (s.gram * (x - x_r));
}

inline PrimalStep primal_update(const ProblemInstance& p, const PrimalSubproblem& s, const Vector& x_r,
                                const Vector& lam_r, const SolverParams& par, const Vector& G,
                                PrimalStrategy strategy = PrimalStrategy::automatic,
                                const InnerSolverOptions& inner = {}) {
  require_size(x_r.size(), p.dimension(), "primal_update: x");
  require_size(G.size(), p.dimension(), "primal_update: gradient estimate");
  require_size(lam_r.size(), p.constraint_rows(), "primal_update: lambda");
  if (strategy == PrimalStrategy::automatic) {
    strategy = s.mode == ScalingMode::closed_form ? PrimalStrategy::closed_form : PrimalStrategy::iterative;
  }

  if (strategy == PrimalStrategy::closed_form) {
    if (s.mode != ScalingMode::closed_form) throw ParameterError("closed-form update needs the closed_form scaling");
    // rho A'A + beta B'B = eta I, so the subproblem is (eta/2)||x - (x_r - c/eta)||^2 + h + i_X.
    const Matrix& A = p.constraint.A;
    const Vector c = G + (1.0 - par.rho * par.gamma) * (A.transpose() * lam_r) +
                     par.rho * (A.transpose() * (A * x_r - p.constraint.b));
    ProxResult pr = p.X.composite_prox_split(s.eta, x_r - c / s.eta, p.h);
    return {std::move(pr.point), std::move(pr.h_subgradient), 1, 0.0};
  }

  // Accelerated proximal gradient with constant strongly convex momentum.
  if (!(inner.lipschitz_scale >= 1.0)) throw ParameterError("primal_update: lipschitz_scale must be >= 1");
  const double Lh = s.lmax * inner.lipschitz_scale;
  const double kappa = Lh / s.lmin;
  const double sk = std::sqrt(kappa);
  const double momentum = (sk - 1.0) / (sk + 1.0);
  const long cap = inner.cap_per_sqrt_condition * static_cast<long>(std::ceil(sk)) + inner.cap_floor;

  Vector x = x_r, y = x_r;
  double res = std::numeric_limits<double>::infinity();
  for (long k = 1; k <= cap; ++k) {
    const Vector g = subproblem_gradient(p, s, par, x_r, lam_r, G, y);
    const Vector x_new = p.X.composite_prox(Lh, y - g / Lh, p.h);
    y = x_new + momentum * (x_new - x);
    x = x_new;
    ProxResult pr = p.X.composite_prox_split(Lh, x - subproblem_gradient(p, s, par, x_r, lam_r, G, x) / Lh, p.h);
    res = (x - pr.point).norm();
    if (res <= inner.tolerance) return {std::move(pr.point), std::move(pr.h_subgradient), k, res};
  }
  throw SolverError("primal_update: inner solver did not converge", res);
}

// Largest value of <grad q(x+) + eta, x+ - x> over sampled feasible x, where q is
// the smooth part of the subproblem. Nonpositive (up to rounding) at the exact minimizer.
inline double subproblem_vi_residual(const ProblemInstance& p, const PrimalSubproblem& s, const SolverParams& par,
                                     const Vector& x_r, const Vector& lam_r, const Vector& G, const PrimalStep& step,
                                     long samples, Seed seed) {
  const Vector d = subproblem_gradient(p, s, par, x_r, lam_r, G, step.x) + step.h_subgradient;
  Rng rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  double worst = -std::numeric_limits<double>::infinity();
  for (long k = 0; k < samples; ++k) {
    Vector z(step.x.size());
    for (Index i = 0; i < z.size(); ++i) z[i] = gauss(rng);
    const Vector xs = p.X.project(k % 2 == 0 ? Vector(3.0 * z) : Vector(step.x + 1e-2 * z));
    worst = std::max(worst, d.dot(step.x - xs));
  }
  return worst;
}

inline Vector dual_update(const Vector& lam, const Vector& x_next, const LinearConstraint& c, double rho,
                          double gamma) {
  require_size(lam.size(), c.rows(), "dual_update");
  return (1.0 - rho * gamma) * lam + rho * constraint_residual(c, x_next);
}

// ---------------------------------------------------------------------------
// Full run
// ---------------------------------------------------------------------------

struct RunOptions {
  bool force = false;
  DiagnosticsLevel diagnostics = DiagnosticsLevel::basic;
  RowCallback on_row;
  std::optional<Vector> x0;
  std::optional<Vector> lambda0;
  PrimalStrategy strategy = PrimalStrategy::automatic;
  InnerSolverOptions inner;
  double dual_bound_slack = 10.0;
  long monte_carlo_samples = 10'000;  // for f_mu when no analytic form exists
};


inline RunOutput run(const ProblemInstance& p, const SolverParams& par, Seed master_seed, const RunOptions& opts = {}) {
  p.check();
  RunOutput out;
  const auto violations = validate_params(par, p.oracle.smoothness);
  if (!violations.empty()) {
    std::string msg = "invalid solver parameters:";
    for (const auto& v : violations) msg += "\n  " + v.describe();
    if (!opts.force) throw ParameterError(msg);
    for (const auto& v : violations) out.warnings.push_back("forced: " + v.describe());
  }
  if (par.R < 0 || par.J < 1 || !(par.mu > 0.0)) throw ParameterError("run: R >= 0, J >= 1 and mu > 0 are required");
  if (!(par.rho > 0.0) || !(par.beta > 0.0) || !(par.gamma >= 0.0))
    throw ParameterError("run: rho, beta must be > 0 and gamma >= 0");

  const PrimalSubproblem sub = make_subproblem(p, par);
  const Index m = p.constraint_rows();
  Vector x = detail::resolve_initial_point(p, opts.x0);
  Vector lam = opts.lambda0 ? *opts.lambda0 : Vector(Vector::Zero(m));
  require_size(lam.size(), m, "run: lambda0");

  Rng est_rng = make_stream(master_seed, Stream::estimation);
  Rng mc_rng = make_stream(master_seed, Stream::monte_carlo);
  const SmoothingConfig cfg{par.mu, par.J};
  const bool full = opts.diagnostics == DiagnosticsLevel::full;
  const double sig_over_J = variance_bound(p.oracle, par.mu, par.J);
  const PotentialParams pot{par.rho, par.gamma, par.beta, p.oracle.smoothness};
  const bool analytic_fmu = static_cast<bool>(p.oracle.smoothed_value);
  const double lower_shift = p.oracle.value_lower_bound ? std::max(0.0, -*p.oracle.value_lower_bound) : 0.0;
  std::optional<double> Q0;

  out.iterates.reserve(static_cast<std::size_t>(par.R) + 1);
  out.trajectory.reserve(static_cast<std::size_t>(par.R));
  out.iterates.push_back(x);
  out.final_state = IterateState{x, x, lam, lam, {}, Vector::Zero(x.size()), 0};

  const auto t0 = std::chrono::steady_clock::now();
  long r = 1;
  try {
    for (; r <= par.R; ++r) {
      GradientEstimate est = estimate_batch(p.oracle, x, cfg, est_rng);
      PrimalStep step = primal_update(p, sub, x, lam, par, est.value, opts.strategy, opts.inner);
      Vector lam_next = dual_update(lam, step.x, p.constraint, par.rho, par.gamma);
      out.oracle_calls += 2 * par.J;
      if (!step.x.allFinite() || !lam_next.allFinite()) throw SolverError("non-finite iterate");

      MetricRow row;
      row.r = r;
      row.constraint_violation = constraint_residual(p.constraint, step.x).squaredNorm();
      row.primal_step = (step.x - x).squaredNorm();
      row.dual_step = (lam_next - lam).squaredNorm();
      row.oracle_calls_cum = out.oracle_calls;
      if (p.oracle.exact_gradient) {
        row.psi = optimality_gap(p, x, step.x, lam, lam_next, par.beta, par.rho, GradientSource::exact);
        row.residual = prox_gradient_residual(p, step.x);
      }
      if (p.oracle.smoothed_gradient) {
        row.psi_mu = optimality_gap(p, x, step.x, lam, lam_next, par.beta, par.rho, GradientSource::smoothed, par.mu);
      }
      if (full) {
        SmoothedValueSource src;
        src.mu = par.mu;
        if (!analytic_fmu) {
          src.mode = SmoothedValueSource::Mode::monte_carlo;
          src.samples = opts.monte_carlo_samples;
          src.seed = mc_rng();
          out.potential_band =
              std::max(out.potential_band, smoothed_value_monte_carlo(p.oracle, step.x, par.mu, src.samples, src.seed).half_width);
        }
        const double Q = potential_Q(p, x, lam, step.x, lam_next, pot, sub.gram, src);
        row.Q = Q;
        row.Q_shifted = shifted_potential(Q, r - 1, sig_over_J);
        if (!Q0) Q0 = Q + lower_shift + out.potential_band;
        if (!dual_bound_holds(lam_next, par.rho, par.gamma, *Q0, r, sig_over_J, opts.dual_bound_slack)) {
          ++out.dual_bound_violations;
        }
      }
      row.wall_ms = detail::elapsed_ms(t0);

      out.final_state.x_prev = x;
      out.final_state.lambda_prev = lam;
      x = std::move(step.x);
      lam = std::move(lam_next);
      out.final_state.x_curr = x;
      out.final_state.lambda_curr = lam;
      out.final_state.last_estimate = std::move(est);
      out.final_state.last_h_subgradient = std::move(step.h_subgradient);
      out.final_state.r = r;
      out.iterates.push_back(x);
      out.trajectory.push_back(row);
      if (opts.on_row) opts.on_row(out.trajectory.back());
    }
  } catch (const SolverError& e) {
    out.sample_index = static_cast<long>(out.iterates.size()) - 1;
    out.x_a = out.iterates.back();
    throw RunAborted(std::string("run aborted at iteration ") + std::to_string(r) + ": " + e.what(), std::move(out),
                     e.last_residual());
  } catch (const std::exception& e) {
    out.sample_index = static_cast<long>(out.iterates.size()) - 1;
    out.x_a = out.iterates.back();
    throw RunAborted(std::string("run aborted at iteration ") + std::to_string(r) + ": " + e.what(), std::move(out));
  }

  out.sample_index = sample_output_index(master_seed, par.R);
  out.x_a = out.iterates[static_cast<std::size_t>(out.sample_index)];
  return out;
}

}  // namespace pzo
