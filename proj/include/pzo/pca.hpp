#pragma once

// Networked sparse PCA benchmark. Agents i = 1..n hold local copies x_i in R^d
// and measurement matrices M_i (p x d, entries U(0,1)); with Z_i = M_i' M_i:
//
//   min  sum_i -<x_i, Z_i x_i> + alpha ||x_i||_1   s.t.  x_i = x_j on every edge,
//                                                      ||x_i|| <= 1.
//
// The consensus constraint is A x = 0 with one (+I, -I) row block per edge.

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>
#include <random>
#include <set>
#include <utility>
#include <vector>

#include "json.hpp"
#include "pzo/errors.hpp"
#include "pzo/estimator.hpp"
#include "pzo/linalg.hpp"
#include "pzo/problem.hpp"

namespace pzo::pca {

struct NetworkTopology {
  int n_agents = 0;
  std::vector<std::pair<int, int>> edges;  // i < j, sorted

  bool connected() const {
    if (n_agents <= 0) return false;
    std::vector<int> parent(static_cast<std::size_t>(n_agents));
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](int a) {
      while (parent[a] != a) a = parent[a] = parent[parent[a]];
      return a;
    };
    int components = n_agents;
    for (auto [i, j] : edges) {
      const int a = find(i), b = find(j);
      if (a != b) {
        parent[a] = b;
        --components;
      }
    }
    return components == 1;
  }

  void check() const {
    std::set<std::pair<int, int>> seen;
    for (auto [i, j] : edges) {
      if (i < 0 || j < 0 || i >= n_agents || j >= n_agents) throw ContractViolation("topology: agent out of range");
      if (i == j) throw ContractViolation("topology: self-loop");
      if (!seen.insert({std::min(i, j), std::max(i, j)}).second) throw ContractViolation("topology: duplicate edge");
    }
    if (!connected()) throw ContractViolation("topology: graph is not connected");
  }
};

// Random spanning tree (each new vertex attaches to a uniformly chosen earlier
// one, in a random vertex order) plus uniformly chosen extra edges.
inline NetworkTopology random_connected_topology(int n_agents, int n_edges, Rng& rng) {
  const long max_edges = static_cast<long>(n_agents) * (n_agents - 1) / 2;
  if (n_agents < 1 || n_edges < n_agents - 1 || n_edges > max_edges) {
    throw ParameterError("random_connected_topology: need n-1 <= edges <= n(n-1)/2");
  }
  std::vector<int> order(static_cast<std::size_t>(n_agents));
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  std::set<std::pair<int, int>> edges;
  for (int k = 1; k < n_agents; ++k) {
    const int prev = order[std::uniform_int_distribution<int>(0, k - 1)(rng)];
    edges.insert({std::min(prev, order[k]), std::max(prev, order[k])});
  }
  std::vector<std::pair<int, int>> rest;
  for (int i = 0; i < n_agents; ++i)
    for (int j = i + 1; j < n_agents; ++j)
      if (!edges.count({i, j})) rest.push_back({i, j});
  std::shuffle(rest.begin(), rest.end(), rng);
  for (int k = 0; k < n_edges - (n_agents - 1); ++k) edges.insert(rest[static_cast<std::size_t>(k)]);
  return NetworkTopology{n_agents, {edges.begin(), edges.end()}};
}

// (edges * d) x (agents * d); row block e holds +I at agent i and -I at agent j.
inline Matrix consensus_matrix(const NetworkTopology& t, Index d) {
  Matrix A = Matrix::Zero(static_cast<Index>(t.edges.size()) * d, t.n_agents * d);
  for (std::size_t e = 0; e < t.edges.size(); ++e) {
    const auto [i, j] = t.edges[e];
    for (Index k = 0; k < d; ++k) {
      A(static_cast<Index>(e) * d + k, i * d + k) = 1.0;
      A(static_cast<Index>(e) * d + k, j * d + k) = -1.0;
    }
  }
  return A;
}

struct PcaInstance {
  Seed seed = 0;
  NetworkTopology topology;
  Index d = 0;
  Index p = 0;
  double alpha = 0.0;
  double noise_sd = 0.0;
  bool nonnegative = false;
  std::vector<Matrix> M;
  std::vector<Matrix> Z;
  ProblemInstance problem;

  Index dimension() const { return topology.n_agents * d; }
};

// argmin_z (eta/2)||v - z||^2 + alpha_reg ||z||_1 over the unit ball:
// soft-threshold at alpha_reg / eta, then project onto the ball.
inline Vector composite_prox_l1_ball(double alpha_reg, double eta, const Vector& v) {
  if (!(eta > 0.0)) throw ContractViolation("composite_prox_l1_ball: eta must be > 0");
  const double t = alpha_reg / eta;
  Vector z = v.unaryExpr([t](double e) { return std::copysign(std::max(std::abs(e) - t, 0.0), e); });
  const double n = z.norm();
  if (n > 1.0) z /= n;
  return z;
}

inline std::pair<double, Vector> exact_objective_and_gradient(const PcaInstance& inst, const Vector& x) {
  require_size(x.size(), inst.dimension(), "exact_objective_and_gradient");
  double f = 0.0;
  Vector g(x.size());
  for (int i = 0; i < inst.topology.n_agents; ++i) {
    const auto xi = x.segment(i * inst.d, inst.d);
    const Vector zx = inst.Z[static_cast<std::size_t>(i)] * xi;
    f -= xi.dot(zx);
    g.segment(i * inst.d, inst.d) = -2.0 * zx;
  }
  return {f, g};
}

namespace detail {

inline double block_objective(const std::vector<Matrix>& Z, Index d, const Vector& x) {
  double f = 0.0;
  for (std::size_t i = 0; i < Z.size(); ++i) {
    const auto xi = x.segment(static_cast<Index>(i) * d, d);
    f -= xi.dot(Z[i] * xi);
  }
  return f;
}

inline Vector block_gradient(const std::vector<Matrix>& Z, Index d, const Vector& x) {
  Vector g(x.size());
  for (std::size_t i = 0; i < Z.size(); ++i) {
    const Index s = static_cast<Index>(i) * d;
    g.segment(s, d) = -2.0 * (Z[i] * x.segment(s, d));
  }
  return g;
}

}  // namespace detail

// Assembles Z_i and the ProblemInstance from topology and measurements.
inline void assemble(PcaInstance& inst) {
  inst.topology.check();
  if (inst.M.size() != static_cast<std::size_t>(inst.topology.n_agents))
    throw ContractViolation("PcaInstance: one measurement matrix per agent required");
  inst.Z.clear();
  double smax = 0.0, ssum = 0.0, trace = 0.0;
  for (const Matrix& m : inst.M) {
    if (m.rows() != inst.p || m.cols() != inst.d) throw ContractViolation("PcaInstance: measurement matrix shape");
    Matrix z = m.transpose() * m;
    z = 0.5 * (z + z.transpose());
    const double s = max_eigenvalue(z);
    smax = std::max(smax, s);
    ssum += s;
    trace += z.trace();
    inst.Z.push_back(std::move(z));
  }
  const Index n = inst.dimension();
  const double nn = static_cast<double>(n);
  auto Z = std::make_shared<const std::vector<Matrix>>(inst.Z);
  const Index d = inst.d;
  const double sd = inst.noise_sd;

  SmoothOracle o;
  o.dimension = n;
  o.smoothness = 2.0 * smax;
  o.gradient_bound = 2.0 * smax * std::sqrt(static_cast<double>(inst.topology.n_agents));
  o.noise_variance = 0.0;  // additive noise: grad F = grad f
  o.value_lower_bound = -ssum;
  o.query = [Z, d, sd](const Vector& x, Seed s) { return detail::block_objective(*Z, d, x) + gaussian_noise(s, sd); };
  o.exact_value = [Z, d](const Vector& x) { return detail::block_objective(*Z, d, x); };
  o.exact_gradient = [Z, d](const Vector& x) { return detail::block_gradient(*Z, d, x); };
  // The smoothing of a quadratic only adds mu^2 tr(H/2)/(N+2); here H/2 = blockdiag(-Z_i).
  o.smoothed_value = [Z, d, trace, nn](const Vector& x, double mu) {
    return detail::block_objective(*Z, d, x) - mu * mu * trace / (nn + 2.0);
  };
  o.smoothed_gradient = [Z, d](const Vector& x, double) { return detail::block_gradient(*Z, d, x); };

  const Vector x0 = inst.problem.initial_point ? *inst.problem.initial_point : Vector::Zero(n);
  inst.problem = ProblemInstance{};
  inst.problem.oracle = std::move(o);
  inst.problem.h = NonsmoothTerm::l1(inst.alpha);
  inst.problem.X = FeasibleSet::block_balls(inst.topology.n_agents, d, 1.0, inst.nonnegative);
  const Matrix A = consensus_matrix(inst.topology, d);
  inst.problem.constraint = LinearConstraint{A, Vector::Zero(A.rows())};
  inst.problem.initial_point = x0;
  inst.problem.check();
}

inline PcaInstance generate_instance(int n_agents, int n_edges, Index d, Index p, double alpha, double noise_sd,
                                     Seed seed, bool nonnegative = false) {
  if (d < 1 || p < 1) throw ParameterError("generate_instance: d and p must be >= 1");
  if (!(alpha >= 0.0) || !(noise_sd >= 0.0)) throw ParameterError("generate_instance: alpha, noise_sd must be >= 0");
  Rng rng(seed);
  PcaInstance inst;
  inst.seed = seed;
  inst.topology = random_connected_topology(n_agents, n_edges, rng);
  inst.d = d;
  inst.p = p;
  inst.alpha = alpha;
  inst.noise_sd = noise_sd;
  inst.nonnegative = nonnegative;
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int i = 0; i < n_agents; ++i) {
    Matrix m(p, d);
    for (Index r = 0; r < p; ++r)
      for (Index c = 0; c < d; ++c) m(r, c) = unif(rng);
    inst.M.push_back(std::move(m));
  }
  Vector x0(n_agents * d);
  for (Index k = 0; k < x0.size(); ++k) x0[k] = unif(rng);
  inst.problem.initial_point = x0;
  assemble(inst);
  return inst;
}

// Entrywise U(0,1) starting point.
inline Vector uniform_initial_point(Index n, Rng& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Vector x(n);
  for (Index k = 0; k < n; ++k) x[k] = unif(rng);
  return x;
}

// ---------------------------------------------------------------------------
// Serialization: seed, edge list and every M_i (row-major), enough to rebuild
// the instance bit-for-bit.
// ---------------------------------------------------------------------------

inline nlohmann::json to_json(const PcaInstance& inst) {
  nlohmann::json j;
  j["benchmark"] = "pca";
  j["seed"] = inst.seed;
  j["n_agents"] = inst.topology.n_agents;
  j["d"] = inst.d;
  j["p"] = inst.p;
  j["alpha"] = inst.alpha;
  j["noise_sd"] = inst.noise_sd;
  j["nonnegative"] = inst.nonnegative;
  j["edges"] = nlohmann::json::array();
  for (auto [a, b] : inst.topology.edges) j["edges"].push_back({a, b});
  j["M"] = nlohmann::json::array();
  for (const Matrix& m : inst.M) {
    std::vector<double> flat;
    flat.reserve(static_cast<std::size_t>(m.size()));
    for (Index r = 0; r < m.rows(); ++r)
      for (Index c = 0; c < m.cols(); ++c) flat.push_back(m(r, c));
    j["M"].push_back(flat);
  }
  const Vector& x0 = *inst.problem.initial_point;
  j["x0"] = std::vector<double>(x0.data(), x0.data() + x0.size());
  return j;
}

inline PcaInstance from_json(const nlohmann::json& j) {
  try {
    PcaInstance inst;
    inst.seed = j.at("seed").get<Seed>();
    inst.topology.n_agents = j.at("n_agents").get<int>();
    inst.d = j.at("d").get<Index>();
    inst.p = j.at("p").get<Index>();
    inst.alpha = j.at("alpha").get<double>();
    inst.noise_sd = j.at("noise_sd").get<double>();
    inst.nonnegative = j.value("nonnegative", false);
    for (const auto& e : j.at("edges")) inst.topology.edges.push_back({e.at(0).get<int>(), e.at(1).get<int>()});
    for (const auto& flat : j.at("M")) {
      const auto vals = flat.get<std::vector<double>>();
      if (static_cast<Index>(vals.size()) != inst.p * inst.d) throw FormatError("instance: M block has wrong size");
      Matrix m(inst.p, inst.d);
      for (Index r = 0; r < inst.p; ++r)
        for (Index c = 0; c < inst.d; ++c) m(r, c) = vals[static_cast<std::size_t>(r * inst.d + c)];
      inst.M.push_back(std::move(m));
    }
    const auto x0 = j.at("x0").get<std::vector<double>>();
    inst.problem.initial_point = Eigen::Map<const Vector>(x0.data(), static_cast<Index>(x0.size()));
    assemble(inst);
    return inst;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("instance: ") + e.what());
  }
}

}  // namespace pzo::pca
