#pragma once

// Zeroth-order comparison solvers: random gradient-free descent (RGF) and
// zeroth-order SGD. Both take a proximal step on f + h over X,
//   x^{r+1} = prox^{1/s_r}_{h+X}(x^r - s_r G^r),
// and ignore the linear constraint Ax = b.

#include <chrono>
#include <cmath>
#include <functional>
#include <string>

#include "pzo/diagnostics.hpp"
#include "pzo/estimator.hpp"
#include "pzo/problem.hpp"
#include "pzo/run_output.hpp"

namespace pzo {

enum class BaselineVariant { rgf, zo_sgd };

inline double rgf_step(long r) { return 0.01 * std::sqrt(std::log(2.0)) / static_cast<double>(r); }
inline double zo_sgd_step(long r) { return 0.01 / std::sqrt(static_cast<double>(r)); }

struct BaselineParams {
  BaselineVariant variant = BaselineVariant::rgf;
  std::function<double(long)> step;  // s_r for r >= 1
  double mu = 0.1;
  long J = 1;
  long R = 100;

  void check() const {
    if (!step) throw ParameterError("BaselineParams: missing step rule");
    if (!(mu > 0.0)) throw ParameterError("BaselineParams: mu must be > 0");
    if (J < 1) throw ParameterError("BaselineParams: J must be >= 1");
    if (R < 0) throw ParameterError("BaselineParams: R must be >= 0");
    for (long r : {1L, 2L, R > 0 ? R : 1L}) {
      if (!(step(r) > 0.0)) throw ParameterError("BaselineParams: step sizes must be positive");
    }
  }
};

// RGF: single direction per iteration, step 0.01 sqrt(log 2) / r.
inline BaselineParams make_rgf_params(long R, double mu) {
  return {BaselineVariant::rgf, rgf_step, mu, 1, R};
}

// ZO-SGD: batch of J directions, step 0.01 / sqrt(r).
inline BaselineParams make_zo_sgd_params(long R, double mu, long J) {
  return {BaselineVariant::zo_sgd, zo_sgd_step, mu, J, R};
}

struct BaselineOptions {
  RowCallback on_row;
  std::optional<Vector> x0;
};

inline RunOutput run_baseline(const ProblemInstance& p, const BaselineParams& par, Seed master_seed,
                              const BaselineOptions& opts = {}) {
  p.check();
  par.check();
  RunOutput out;
  const Index m = p.constraint_rows();
  const Vector zero_dual = Vector::Zero(m);
  Vector x = detail::resolve_initial_point(p, opts.x0);
  Rng est_rng = make_stream(master_seed, Stream::estimation);
  const SmoothingConfig cfg{par.mu, par.J};

  out.iterates.reserve(static_cast<std::size_t>(par.R) + 1);
  out.iterates.push_back(x);
  out.final_state = IterateState{x, x, zero_dual, zero_dual, {}, Vector::Zero(x.size()), 0};
  const auto t0 = std::chrono::steady_clock::now();
  long r = 1;
  try {
    for (; r <= par.R; ++r) {
      GradientEstimate est = estimate_batch(p.oracle, x, cfg, est_rng);
      const double s = par.step(r);
      ProxResult pr = p.X.composite_prox_split(1.0 / s, x - s * est.value, p.h);
      out.oracle_calls += 2 * par.J;
      if (!pr.point.allFinite()) throw SolverError("non-finite iterate");

      MetricRow row;
      row.r = r;
      row.constraint_violation = constraint_residual(p.constraint, pr.point).squaredNorm();
      row.primal_step = (pr.point - x).squaredNorm();
      row.dual_step = 0.0;
      row.oracle_calls_cum = out.oracle_calls;
      // Same gap with beta = rho = 1 and no multiplier.
      if (p.oracle.exact_gradient) {
        row.psi = optimality_gap(p, x, pr.point, zero_dual, zero_dual, 1.0, 1.0, GradientSource::exact);
        row.residual = prox_gradient_residual(p, pr.point);
      }
      if (p.oracle.smoothed_gradient) {
        row.psi_mu =
            optimality_gap(p, x, pr.point, zero_dual, zero_dual, 1.0, 1.0, GradientSource::smoothed, par.mu);
      }
      row.wall_ms = detail::elapsed_ms(t0);

      out.final_state.x_prev = x;
      x = std::move(pr.point);
      out.final_state.x_curr = x;
      out.final_state.last_estimate = std::move(est);
      out.final_state.last_h_subgradient = std::move(pr.h_subgradient);
      out.final_state.r = r;
      out.iterates.push_back(x);
      out.trajectory.push_back(row);
      if (opts.on_row) opts.on_row(out.trajectory.back());
    }
  } catch (const std::exception& e) {
    out.sample_index = static_cast<long>(out.iterates.size()) - 1;
    out.x_a = out.iterates.back();
    throw RunAborted(std::string("baseline aborted at iteration ") + std::to_string(r) + ": " + e.what(),
                     std::move(out));
  }
  out.sample_index = sample_output_index(master_seed, par.R);
  out.x_a = out.iterates[static_cast<std::size_t>(out.sample_index)];
  return out;
}

}  // namespace pzo
