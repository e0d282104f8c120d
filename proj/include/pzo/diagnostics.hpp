#pragma once

// Analysis quantities of the primal-dual method: optimality gaps, the
// augmented-Lagrangian-like function C, the potential Q and its shifted
// version, stationarity checks, and the per-iteration MetricRow record.

#include <array>
#include <charconv>
#include <cmath>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "pzo/errors.hpp"
#include "pzo/estimator.hpp"
#include "pzo/linalg.hpp"
#include "pzo/problem.hpp"

namespace pzo {

// ---------------------------------------------------------------------------
// MetricRow and its CSV schema
// ---------------------------------------------------------------------------

// One record per iteration r >= 1. The row for iteration r describes the step
// (x^{r-1}, lambda^{r-1}) -> (x^r, lambda^r):
//   psi, psi_mu        gap at x^{r-1} with the step terms of this transition
//   constraint_violation  ||A x^r - b||^2
//   Q, Q_shifted       potential of the pair (r-1, r)
//   residual           ||x^r - prox_{h+X}^1[x^r - grad f(x^r)]||^2
struct MetricRow {
  long r = 0;
  std::optional<double> psi;
  std::optional<double> psi_mu;
  double constraint_violation = 0.0;
  std::optional<double> Q;
  std::optional<double> Q_shifted;
  double primal_step = 0.0;
  double dual_step = 0.0;
  long long oracle_calls_cum = 0;
  double wall_ms = 0.0;
  std::optional<double> residual;
};

inline constexpr std::array<const char*, 11> kMetricColumns = {
    "r",           "psi",       "psi_mu",           "constraint_violation", "Q",       "Q_shifted",
    "primal_step", "dual_step", "oracle_calls_cum", "wall_ms",              "residual"};

// Shortest round-trip decimal, independent of locale.
inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::array<char, 64> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), end);
}

inline std::string metric_csv_header() {
  std::string s;
  for (std::size_t i = 0; i < kMetricColumns.size(); ++i) {
    if (i) s += ',';
    s += kMetricColumns[i];
  }
  return s;
}

inline std::string to_csv_line(const MetricRow& row) {
  auto opt = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string(); };
  std::string s = std::to_string(row.r);
  s += ',' + opt(row.psi);
  s += ',' + opt(row.psi_mu);
  s += ',' + format_double(row.constraint_violation);
  s += ',' + opt(row.Q);
  s += ',' + opt(row.Q_shifted);
  s += ',' + format_double(row.primal_step);
  s += ',' + format_double(row.dual_step);
  s += ',' + std::to_string(row.oracle_calls_cum);
  s += ',' + format_double(row.wall_ms);
  s += ',' + opt(row.residual);
  return s;
}

inline void write_metric_csv(std::ostream& os, const std::vector<MetricRow>& rows) {
  os << metric_csv_header() << '\n';
  for (const auto& row : rows) os << to_csv_line(row) << '\n';
}

// ---------------------------------------------------------------------------
// Gradient and f_mu sources
// ---------------------------------------------------------------------------

enum class GradientSource { exact, smoothed };

inline Vector gradient_from(const SmoothOracle& o, const Vector& x, GradientSource src, double mu) {
  if (src == GradientSource::exact) {
    if (!o.exact_gradient) throw CapabilityError("exact gradient is not available for this oracle");
    return o.exact_gradient(x);
  }
  if (!o.smoothed_gradient) throw CapabilityError("smoothed gradient is not available for this oracle");
  return o.smoothed_gradient(x, mu);
}

struct SmoothedValueSource {
  enum class Mode { analytic, monte_carlo };
  Mode mode = Mode::analytic;
  double mu = 0.0;
  long samples = 10'000;
  Seed seed = 0;
};

inline SmoothedValueEstimate smoothed_value(const SmoothOracle& o, const Vector& x, const SmoothedValueSource& src) {
  if (src.mode == SmoothedValueSource::Mode::analytic) {
    if (!o.smoothed_value) throw CapabilityError("analytic f_mu is not available for this oracle");
    return {o.smoothed_value(x, src.mu), 0.0, 0};
  }
  if (!o.exact_value && !o.query) throw CapabilityError("no value source for Monte-Carlo f_mu");
  return smoothed_value_monte_carlo(o, x, src.mu, src.samples, src.seed);
}

// ---------------------------------------------------------------------------
// Optimality gap
// ---------------------------------------------------------------------------

//   ||x_r - prox^beta_{h+X}[x_r - (g(x_r) + A' lam_r)/beta]||^2
//     + ||x_next - x_r||^2 / beta^2 + ||lam_next - lam_r||^2 / rho^2
// g is grad f (exact) or grad f_mu (smoothed).
inline double optimality_gap(const ProblemInstance& p, const Vector& x_r, const Vector& x_next, const Vector& lam_r,
                             const Vector& lam_next, double beta, double rho,
                             GradientSource src = GradientSource::exact, double mu = 0.0) {
  require_size(x_r.size(), p.dimension(), "optimality_gap: x_r");
  require_size(x_next.size(), p.dimension(), "optimality_gap: x_next");
  require_size(lam_r.size(), p.constraint_rows(), "optimality_gap: lambda_r");
  require_size(lam_next.size(), p.constraint_rows(), "optimality_gap: lambda_next");
  if (!(beta > 0.0) || !(rho > 0.0)) throw ContractViolation("optimality_gap: beta and rho must be > 0");
  const Vector g = gradient_from(p.oracle, x_r, src, mu);
  const Vector arg = x_r - (g + p.constraint.A.transpose() * lam_r) / beta;
  const double prox_term = (x_r - p.X.composite_prox(beta, arg, p.h)).squaredNorm();
  return prox_term + (x_next - x_r).squaredNorm() / (beta * beta) + (lam_next - lam_r).squaredNorm() / (rho * rho);
}

// ||x - prox^1_{h+X}[x - grad f(x)]||^2, the solver-independent residual.
inline double prox_gradient_residual(const ProblemInstance& p, const Vector& x) {
  const Vector g = gradient_from(p.oracle, x, GradientSource::exact, 0.0);
  return (x - p.X.composite_prox(1.0, x - g, p.h)).squaredNorm();
}

// ---------------------------------------------------------------------------
// C, Q and the shifted potential
// ---------------------------------------------------------------------------

// C(x, lam) = f_mu(x) + h(x) + <(1 - rho gamma) lam, Ax - b - gamma lam> + (rho/2)||Ax - b||^2
inline double al_value_C(const ProblemInstance& p, const Vector& x, const Vector& lam, double rho, double gamma,
                         const SmoothedValueSource& src) {
  require_size(x.size(), p.dimension(), "al_value_C: x");
  require_size(lam.size(), p.constraint_rows(), "al_value_C: lambda");
  const Vector res = constraint_residual(p.constraint, x);
  const double fmu = smoothed_value(p.oracle, x, src).value;
  return fmu + p.h.evaluate(x) + (1.0 - rho * gamma) * lam.dot(res - gamma * lam) + 0.5 * rho * res.squaredNorm();
}

struct PotentialParams {
  double rho = 0.0;
  double gamma = 0.0;
  double beta = 0.0;
  double smoothness = 0.0;  // L, used in place of L_mu (L_mu <= L)
};

// Q_c(x_next, lam_next; x_prev, lam_prev) = C(x_next, lam_next) + ((1 - rho gamma) gamma / 2)||lam_next||^2
//   + (c/2) [ ((1 - rho gamma)/rho)||dlam||^2 + beta ||dx||^2_G + 3 L^2 ||dx||^2 ]
inline double potential_Q(const ProblemInstance& p, const Vector& x_prev, const Vector& lam_prev, const Vector& x_next,
                          const Vector& lam_next, const PotentialParams& par, const Matrix& gram,
                          const SmoothedValueSource& src, double c = 1.0) {
  require_size(gram.rows(), p.dimension(), "potential_Q: Gram");
  const double a = 1.0 - par.rho * par.gamma;
  const Vector dx = x_next - x_prev;
  const Vector dl = lam_next - lam_prev;
  const double C = al_value_C(p, x_next, lam_next, par.rho, par.gamma, src);
  const double L = par.smoothness;
  return C + 0.5 * a * par.gamma * lam_next.squaredNorm() +
         0.5 * c * (a / par.rho * dl.squaredNorm() + par.beta * dx.dot(gram * dx) + 3.0 * L * L * dx.squaredNorm());
}

// Q~ = Q - (pair_index + 1) * (7/2) * sigma_tilde^2 / J, where pair_index r
// labels the pair (x^{r+1}, x^r).
inline double shifted_potential(double Q, long pair_index, double sigma_tilde_sq_over_J) {
  return Q - static_cast<double>(pair_index + 1) * 3.5 * sigma_tilde_sq_over_J;
}

// (gamma (1 - rho gamma) / 2) ||lam||^2 <= Q0 + (7 r / 2) sigma_tilde^2 / J, with
// a multiplicative slack on the stochastic term.
inline bool dual_bound_holds(const Vector& lam, double rho, double gamma, double Q0, long r,
                             double sigma_tilde_sq_over_J, double slack) {
  const double lhs = 0.5 * gamma * (1.0 - rho * gamma) * lam.squaredNorm();
  const double rhs = Q0 + slack * 3.5 * static_cast<double>(r) * sigma_tilde_sq_over_J;
  return lhs <= rhs;
}

// ---------------------------------------------------------------------------
// Stationarity
// ---------------------------------------------------------------------------

struct StationarityReport {
  double constraint_norm = 0.0;    // ||A x - b||
  double variational_max = 0.0;    // max_x <grad f + A' lam + eta, x* - x> over sampled x in X
  double prox_residual = 0.0;      // ||x* - prox^1_{h+X}[x* - grad f - A' lam]||
  bool stationary = false;
};

struct StationarityOptions {
  long samples = 200;
  Seed seed = 1;
  double sample_radius = 2.0;
  std::optional<Vector> h_subgradient;  // eta*; recovered from a prox step when absent
};

inline StationarityReport stationarity_check(const ProblemInstance& p, const Vector& x, const Vector& lam, double tol,
                                             const StationarityOptions& opts = {}) {
  require_size(x.size(), p.dimension(), "stationarity_check: x");
  require_size(lam.size(), p.constraint_rows(), "stationarity_check: lambda");
  const Vector g = gradient_from(p.oracle, x, GradientSource::exact, 0.0) + p.constraint.A.transpose() * lam;

  StationarityReport rep;
  rep.constraint_norm = constraint_residual(p.constraint, x).norm();
  const ProxResult pr = p.X.composite_prox_split(1.0, x - g, p.h);
  rep.prox_residual = (x - pr.point).norm();
  const Vector eta = opts.h_subgradient ? *opts.h_subgradient : pr.h_subgradient;
  const Vector d = g + eta;

  Rng rng(opts.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  double worst = -std::numeric_limits<double>::infinity();
  for (long k = 0; k < opts.samples; ++k) {
    Vector z(x.size());
    for (Index i = 0; i < z.size(); ++i) z[i] = gauss(rng);
    // alternate between global samples and local perturbations around x
    const Vector cand = (k % 2 == 0) ? Vector(opts.sample_radius * z) : Vector(x + 1e-3 * z);
    const Vector xs = p.X.project(cand);
    worst = std::max(worst, d.dot(x - xs));
  }
  rep.variational_max = std::max(worst, 0.0);
  rep.stationary = rep.constraint_norm <= tol && rep.variational_max <= tol;
  return rep;
}

}  // namespace pzo
