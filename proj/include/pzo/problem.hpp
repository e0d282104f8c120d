#pragma once

// Problem abstraction shared by every solver:
//
//   min_{x in X}  f(x) + h(x)   s.t.  A x = b
//
// f is reachable only through a noisy zeroth-order oracle, h is a convex
// nonsmooth term with a cheap proximity operator, and X is a closed convex
// set whose composite prox with h is supplied by the set itself.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <utility>

#include "pzo/errors.hpp"
#include "pzo/linalg.hpp"

namespace pzo {

using Seed = std::uint64_t;

// ---------------------------------------------------------------------------
// Nonsmooth term: h(x) = w * ||x||_1 with w >= 0. w == 0 is the zero function.
// ---------------------------------------------------------------------------
class NonsmoothTerm {
 public:
  static NonsmoothTerm zero() { return NonsmoothTerm(0.0); }
  static NonsmoothTerm l1(double weight) {
    if (!(weight >= 0.0) || !std::isfinite(weight)) {
      throw ContractViolation("NonsmoothTerm::l1: weight must be finite and >= 0");
    }
    return NonsmoothTerm(weight);
  }

  double weight() const noexcept { return weight_; }
  bool is_zero() const noexcept { return weight_ == 0.0; }

  double evaluate(const Vector& x) const { return weight_ == 0.0 ? 0.0 : weight_ * x.lpNorm<1>(); }

  // argmin_z (alpha/2)||v - z||^2 + h(z)
  Vector prox(double alpha, const Vector& v) const {
    if (!(alpha > 0.0)) throw ContractViolation("NonsmoothTerm::prox: scale must be > 0");
    if (weight_ == 0.0) return v;
    const double t = weight_ / alpha;
    return v.unaryExpr([t](double e) { return std::copysign(std::max(std::abs(e) - t, 0.0), e); });
  }

 private:
  explicit NonsmoothTerm(double w) : weight_(w) {}
  double weight_;
};

// Result of a composite prox together with the element of dh(point) that the
// prox optimality condition singles out. The remainder
// alpha * (v - point) - h_subgradient lies in the normal cone of X at point.
struct ProxResult {
  Vector point;
  Vector h_subgradient;
};

// ---------------------------------------------------------------------------
// Feasible set: either all of R^N or a product of Euclidean balls over
// consecutive coordinate blocks, optionally intersected with the nonnegative
// orthant.
// ---------------------------------------------------------------------------
class FeasibleSet {
 public:
  enum class Kind { whole_space, block_balls };

  static FeasibleSet whole_space(Index dim, bool nonnegative = false) {
    return FeasibleSet(Kind::whole_space, dim, dim, 0.0, nonnegative);
  }
  static FeasibleSet ball(Index dim, double radius = 1.0) {
    return block_balls(1, dim, radius, false);
  }
  static FeasibleSet block_balls(Index n_blocks, Index block_size, double radius = 1.0,
                                 bool nonnegative = false) {
    if (n_blocks < 1 || block_size < 1) throw ContractViolation("FeasibleSet: empty block structure");
    if (!(radius > 0.0)) throw ContractViolation("FeasibleSet: radius must be > 0");
    return FeasibleSet(Kind::block_balls, n_blocks * block_size, block_size, radius, nonnegative);
  }

  Kind kind() const noexcept { return kind_; }
  Index dimension() const noexcept { return dim_; }
  Index block_size() const noexcept { return block_; }
  double radius() const noexcept { return radius_; }
  bool nonnegative() const noexcept { return nonneg_; }

  bool contains(const Vector& x, double tol = 1e-12) const {
    require_size(x.size(), dim_, "FeasibleSet::contains");
    if (nonneg_ && x.size() > 0 && x.minCoeff() < -tol) return false;
    if (kind_ == Kind::whole_space) return true;
    for (Index s = 0; s < dim_; s += block_) {
      if (x.segment(s, block_).norm() > radius_ + tol) return false;
    }
    return true;
  }

  // Euclidean projection onto X.
  Vector project(const Vector& v) const {
    require_size(v.size(), dim_, "FeasibleSet::project");
    Vector out = nonneg_ ? Vector(v.cwiseMax(0.0)) : v;
    if (kind_ == Kind::block_balls) shrink_blocks(out);
    return out;
  }

  // prox of h + indicator(X) at scale alpha:
  //   argmin_z (alpha/2)||v - z||^2 + h(z) + i_X(z)
  // For the weighted l1 norm (optionally restricted to z >= 0) followed by a
  // radial ball projection the composition is exact; the brute-force oracle in
  // the test suite checks it.
  ProxResult composite_prox_split(double alpha, const Vector& v, const NonsmoothTerm& h) const {
    require_size(v.size(), dim_, "FeasibleSet::composite_prox");
    if (!(alpha > 0.0)) throw ContractViolation("FeasibleSet::composite_prox: scale must be > 0");
    const double w = h.weight();
    const double t = w / alpha;
    ProxResult res{Vector(v.size()), Vector(v.size())};
    for (Index j = 0; j < v.size(); ++j) {
      double z = nonneg_ ? std::max(v[j] - t, 0.0) : std::copysign(std::max(std::abs(v[j]) - t, 0.0), v[j]);
      res.point[j] = z;
      if (z != 0.0) {
        res.h_subgradient[j] = std::copysign(w, z);
      } else {
        res.h_subgradient[j] = std::clamp(alpha * v[j], -w, w);
      }
    }
    if (kind_ == Kind::block_balls) shrink_blocks(res.point);
    return res;
  }

  Vector composite_prox(double alpha, const Vector& v, const NonsmoothTerm& h) const {
    return composite_prox_split(alpha, v, h).point;
  }

 private:
  FeasibleSet(Kind k, Index dim, Index block, double radius, bool nonneg)
      : kind_(k), dim_(dim), block_(block), radius_(radius), nonneg_(nonneg) {}

  void shrink_blocks(Vector& x) const {
    for (Index s = 0; s < dim_; s += block_) {
      auto seg = x.segment(s, block_);
      const double n = seg.norm();
      if (n > radius_) seg *= radius_ / n;
    }
  }

  Kind kind_;
  Index dim_;
  Index block_;
  double radius_;
  bool nonneg_;
};

// ---------------------------------------------------------------------------
// Linear equality constraint A x = b.
// ---------------------------------------------------------------------------
struct LinearConstraint {
  Matrix A;
  Vector b;

  Index rows() const noexcept { return A.rows(); }
  Index cols() const noexcept { return A.cols(); }

  void check(Index n) const {
    require_size(A.cols(), n, "LinearConstraint: columns of A");
    require_size(b.size(), A.rows(), "LinearConstraint: size of b");
    if (!A.allFinite() || !b.allFinite()) throw ContractViolation("LinearConstraint: non-finite entries");
  }
};

inline Vector constraint_residual(const LinearConstraint& c, const Vector& x) {
  require_size(x.size(), c.A.cols(), "constraint_residual");
  require_size(c.b.size(), c.A.rows(), "constraint_residual: size of b");
  return c.A * x - c.b;
}

// ---------------------------------------------------------------------------
// Stochastic zeroth-order oracle for the smooth part f.
// ---------------------------------------------------------------------------
struct SmoothOracle {
  using ValueFn = std::function<double(const Vector&)>;
  using GradientFn = std::function<Vector(const Vector&)>;
  using SmoothedValueFn = std::function<double(const Vector&, double)>;
  using SmoothedGradientFn = std::function<Vector(const Vector&, double)>;

  Index dimension = 0;
  // F(x, xi): noisy value; must be a pure function of (x, seed).
  std::function<double(const Vector&, Seed)> query;

  double smoothness = 0.0;       // L
  double gradient_bound = 0.0;   // K
  double noise_variance = 0.0;   // sigma^2 of grad F - grad f

  ValueFn exact_value;                    // optional
  GradientFn exact_gradient;              // optional
  SmoothedValueFn smoothed_value;         // optional: f_mu(x) for radius mu
  SmoothedGradientFn smoothed_gradient;   // optional: grad f_mu(x)
  std::optional<double> value_lower_bound;  // inf of f over X, when known

  double operator()(const Vector& x, Seed seed) const { return query(x, seed); }
};

// Additive Gaussian noise xi ~ N(0, sd^2) keyed on the oracle seed.
inline double gaussian_noise(Seed seed, double sd) {
  if (sd == 0.0) return 0.0;
  std::mt19937_64 eng(seed);
  std::normal_distribution<double> dist(0.0, sd);
  return dist(eng);
}

// f(x) = x'Qx with F(x, xi) = f(x) + xi. gradient_bound is valid on the ball
// of radius `region_radius`.
inline SmoothOracle make_quadratic_oracle(const Matrix& Q, double noise_sd = 0.0, double region_radius = 1.0) {
  if (!is_symmetric(Q)) throw ContractViolation("make_quadratic_oracle: Q must be symmetric");
  SmoothOracle o;
  o.dimension = Q.rows();
  const double n = static_cast<double>(Q.rows());
  const double lip = 2.0 * spectral_norm_symmetric(Q);
  const double trace = Q.trace();
  o.smoothness = lip;
  o.gradient_bound = lip * region_radius;
  o.noise_variance = 0.0;
  o.exact_value = [Q](const Vector& x) { return x.dot(Q * x); };
  o.exact_gradient = [Q](const Vector& x) -> Vector { return 2.0 * (Q * x); };
  o.smoothed_value = [Q, trace, n](const Vector& x, double mu) { return x.dot(Q * x) + mu * mu * trace / (n + 2.0); };
  o.smoothed_gradient = [Q](const Vector& x, double) -> Vector { return 2.0 * (Q * x); };
  o.query = [Q, noise_sd](const Vector& x, Seed s) { return x.dot(Q * x) + gaussian_noise(s, noise_sd); };
  return o;
}

// ---------------------------------------------------------------------------
// Problem instance. Immutable after construction; safe to share across threads
// provided the oracle callbacks are pure.
// ---------------------------------------------------------------------------
struct ProblemInstance {
  SmoothOracle oracle;
  NonsmoothTerm h = NonsmoothTerm::zero();
  FeasibleSet X = FeasibleSet::whole_space(0);
  LinearConstraint constraint;
  std::optional<Vector> initial_point;

  Index dimension() const noexcept { return oracle.dimension; }
  Index constraint_rows() const noexcept { return constraint.rows(); }

  void check() const {
    const Index n = oracle.dimension;
    if (n < 1) throw ContractViolation("ProblemInstance: dimension must be >= 1");
    if (!oracle.query) throw ContractViolation("ProblemInstance: oracle has no query function");
    require_size(X.dimension(), n, "ProblemInstance: feasible set dimension");
    constraint.check(n);
    if (initial_point) require_size(initial_point->size(), n, "ProblemInstance: initial point");
  }
};

// Problem with no linear coupling: A is the 0 x N matrix.
inline LinearConstraint no_constraint(Index n) { return LinearConstraint{Matrix::Zero(0, n), Vector::Zero(0)}; }

// f + (rho/2)||Ax - b||^2 as a new zeroth-order problem (the penalty is added to
// every oracle value). Used to give constraint-agnostic baselines a penalty.
inline ProblemInstance with_quadratic_penalty(const ProblemInstance& p, double rho) {
  if (!(rho >= 0.0)) throw ContractViolation("with_quadratic_penalty: rho must be >= 0");
  ProblemInstance out = p;
  const LinearConstraint c = p.constraint;
  const SmoothOracle base = p.oracle;
  const Matrix AtA = c.A.transpose() * c.A;
  const double n = static_cast<double>(p.dimension());
  const double tr = AtA.trace();
  auto penalty = [c, rho](const Vector& x) { return 0.5 * rho * (c.A * x - c.b).squaredNorm(); };
  auto penalty_grad = [c, rho](const Vector& x) -> Vector { return rho * (c.A.transpose() * (c.A * x - c.b)); };
  out.oracle.query = [base, penalty](const Vector& x, Seed s) { return base.query(x, s) + penalty(x); };
  out.oracle.smoothness = base.smoothness + rho * max_eigenvalue(AtA);
  if (base.exact_value) out.oracle.exact_value = [base, penalty](const Vector& x) { return base.exact_value(x) + penalty(x); };
  if (base.exact_gradient) {
    out.oracle.exact_gradient = [base, penalty_grad](const Vector& x) -> Vector {
      return base.exact_gradient(x) + penalty_grad(x);
    };
  }
  if (base.smoothed_value) {
    out.oracle.smoothed_value = [base, penalty, rho, tr, n](const Vector& x, double mu) {
      return base.smoothed_value(x, mu) + penalty(x) + 0.5 * rho * mu * mu * tr / (n + 2.0);
    };
  }
  if (base.smoothed_gradient) {
    out.oracle.smoothed_gradient = [base, penalty_grad](const Vector& x, double mu) -> Vector {
      return base.smoothed_gradient(x, mu) + penalty_grad(x);
    };
  }
  return out;
}

// ---------------------------------------------------------------------------
// Verification oracle for FeasibleSet::composite_prox on small instances.
// Splits h and X (z = y) and runs scaled ADMM; only h.prox and X.project are
// used, so the prox-composition rule is not assumed.
// ---------------------------------------------------------------------------
struct BruteForceOptions {
  double tolerance = 1e-12;
  long max_iterations = 2'000'000;
};

inline Vector composite_prox_bruteforce(const NonsmoothTerm& h, const FeasibleSet& X, double alpha, const Vector& v,
                                        BruteForceOptions opts = {}) {
  if (v.size() > 4) throw ContractViolation("composite_prox_bruteforce: only for N <= 4");
  require_size(v.size(), X.dimension(), "composite_prox_bruteforce");
  if (!(alpha > 0.0)) throw ContractViolation("composite_prox_bruteforce: scale must be > 0");

  const double tau = alpha;
  Vector y = X.project(v);
  Vector u = Vector::Zero(v.size());
  Vector z = y;
  for (long it = 0; it < opts.max_iterations; ++it) {
    z = h.prox(alpha + tau, (alpha * v + tau * (y - u)) / (alpha + tau));
    const Vector y_old = y;
    y = X.project(z + u);
    u += z - y;
    const double primal = (z - y).norm();
    const double dual = tau * (y - y_old).norm();
    if (primal <= opts.tolerance && dual <= opts.tolerance) return y;
  }
  throw OracleFailure("composite_prox_bruteforce: ADMM did not reach tolerance");
}

}  // namespace pzo
