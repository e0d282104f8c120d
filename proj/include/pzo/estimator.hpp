#pragma once

// Two-point random-direction gradient estimator for the ball-smoothed
// function f_mu(x) = E_{u ~ U(ball)} f(x + mu u).
//
// Directions are uniform on the unit sphere; this is the distribution under
// which E[(N/mu)(f(x + mu v) - f(x)) v] equals grad f_mu exactly.

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "pzo/errors.hpp"
#include "pzo/linalg.hpp"
#include "pzo/problem.hpp"

namespace pzo {

using Rng = std::mt19937_64;

struct SmoothingConfig {
  double mu = 0.0;
  long batch = 1;  // J: oracle-call pairs per estimate

  void check() const {
    if (!(mu > 0.0) || !std::isfinite(mu)) throw ContractViolation("SmoothingConfig: mu must be > 0");
    if (batch < 1) throw ContractViolation("SmoothingConfig: J must be >= 1");
  }
};

struct GradientEstimate {
  Vector value;
  double mu = 0.0;
  long batch = 0;
  Seed batch_seed = 0;  // regenerates every direction and noise seed of the batch
};

template <class Engine>
Vector sample_direction(Engine& rng, Index n) {
  if (n < 1) throw ContractViolation("sample_direction: N must be >= 1");
  std::normal_distribution<double> gauss(0.0, 1.0);
  Vector v(n);
  double norm = 0.0;
  do {
    for (Index i = 0; i < n; ++i) v[i] = gauss(rng);
    norm = v.norm();
  } while (!(norm > 0.0));
  return v / norm;
}

// Uniform point in the unit ball (used by Monte-Carlo references for f_mu).
template <class Engine>
Vector sample_in_ball(Engine& rng, Index n) {
  Vector v = sample_direction(rng, n);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  return v * std::pow(unif(rng), 1.0 / static_cast<double>(n));
}

// (N/mu) * (F(x + mu v, xi) - F(x, xi)) * v, both calls sharing the seed xi.
inline Vector estimate_single(const SmoothOracle& oracle, const Vector& x, const Vector& v, Seed xi, double mu) {
  require_size(x.size(), oracle.dimension, "estimate_single: x");
  require_size(v.size(), oracle.dimension, "estimate_single: v");
  if (!(mu > 0.0)) throw ContractViolation("estimate_single: mu must be > 0");
  const double n = static_cast<double>(oracle.dimension);
  const double diff = oracle.query(x + mu * v, xi) - oracle.query(x, xi);
  return (n / mu * diff) * v;
}

inline GradientEstimate estimate_batch_seeded(const SmoothOracle& oracle, const Vector& x, const SmoothingConfig& cfg,
                                              Seed batch_seed) {
  cfg.check();
  Rng local(batch_seed);
  Vector acc = Vector::Zero(oracle.dimension);
  for (long j = 0; j < cfg.batch; ++j) {
    const Vector v = sample_direction(local, oracle.dimension);
    const Seed xi = local();
    acc += estimate_single(oracle, x, v, xi, cfg.mu);
  }
  acc /= static_cast<double>(cfg.batch);
  return GradientEstimate{std::move(acc), cfg.mu, cfg.batch, batch_seed};
}

// Mean of J independent single estimates. Draws one seed from rng and records it.
inline GradientEstimate estimate_batch(const SmoothOracle& oracle, const Vector& x, const SmoothingConfig& cfg,
                                       Rng& rng) {
  return estimate_batch_seeded(oracle, x, cfg, rng());
}

// x'Qx + mu^2 tr(Q) / (N + 2): exact ball-smoothing of a quadratic, since
// E[u u'] = I / (N + 2) for u uniform in the unit ball.
inline double smoothed_value_analytic_quadratic(const Matrix& Q, const Vector& x, double mu) {
  if (!is_symmetric(Q)) throw ContractViolation("smoothed_value_analytic_quadratic: Q must be symmetric");
  require_size(x.size(), Q.rows(), "smoothed_value_analytic_quadratic");
  const double n = static_cast<double>(Q.rows());
  return x.dot(Q * x) + mu * mu * Q.trace() / (n + 2.0);
}

// sigma_tilde^2 / J with sigma_tilde^2 = 2N [K^2 + sigma^2 + mu^2 L^2 N].
inline double variance_bound(double K, double sigma, double mu, double L, Index n, long J) {
  if (K < 0 || sigma < 0 || mu < 0 || L < 0 || n < 0) throw ContractViolation("variance_bound: negative argument");
  if (J < 1) throw ContractViolation("variance_bound: J must be >= 1");
  const double nn = static_cast<double>(n);
  return 2.0 * nn * (K * K + sigma * sigma + mu * mu * L * L * nn) / static_cast<double>(J);
}

inline double variance_bound(const SmoothOracle& o, double mu, long J) {
  return variance_bound(o.gradient_bound, std::sqrt(o.noise_variance), mu, o.smoothness, o.dimension, J);
}

// Monte-Carlo estimate of f_mu(x) with a 4-sigma half-width. Uses the exact
// value hook when present, otherwise fresh noisy oracle queries.
struct SmoothedValueEstimate {
  double value = 0.0;
  double half_width = 0.0;
  long samples = 0;
};

inline SmoothedValueEstimate smoothed_value_monte_carlo(const SmoothOracle& oracle, const Vector& x, double mu,
                                                        long samples, Seed seed) {
  if (samples < 10'000) throw ContractViolation("smoothed_value_monte_carlo: needs at least 1e4 samples");
  require_size(x.size(), oracle.dimension, "smoothed_value_monte_carlo");
  Rng rng(seed);
  double mean = 0.0, m2 = 0.0;
  for (long k = 0; k < samples; ++k) {
    const Vector p = x + mu * sample_in_ball(rng, oracle.dimension);
    const double val = oracle.exact_value ? oracle.exact_value(p) : oracle.query(p, rng());
    const double delta = val - mean;
    mean += delta / static_cast<double>(k + 1);
    m2 += delta * (val - mean);
  }
  const double sd = std::sqrt(m2 / static_cast<double>(samples - 1));
  return {mean, 4.0 * sd / std::sqrt(static_cast<double>(samples)), samples};
}

}  // namespace pzo
