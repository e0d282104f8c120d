#pragma once

// Randomized cross-check of the closed-form composite prox against the ADMM
// brute-force oracle.

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "pzo/estimator.hpp"
#include "pzo/pca.hpp"
#include "pzo/problem.hpp"

namespace pzo::selftest {

struct FamilyResult {
  std::string name;
  long cases = 0;
  long failures = 0;
  double max_error = 0.0;
};

struct ProxSelftestReport {
  std::vector<FamilyResult> families;
  double tolerance = 1e-6;

  bool passed() const {
    return std::all_of(families.begin(), families.end(), [](const FamilyResult& f) { return f.failures == 0; });
  }
};

struct ProxTriple {
  double alpha_reg;
  double eta;
  Vector v;
};

// alpha_reg in [0, 2) (exactly 0 one time in ten), eta log-uniform on [0.1, 10],
// v Gaussian with a random scale so that both the inside and outside of the
// ball and the dead zone of the soft threshold are exercised.
inline ProxTriple random_triple(Rng& rng, Index max_dim = 4) {
  std::uniform_int_distribution<Index> dim(1, max_dim);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> g(0.0, 1.0);
  ProxTriple t;
  t.alpha_reg = u(rng) < 0.1 ? 0.0 : 2.0 * u(rng);
  t.eta = std::pow(10.0, -1.0 + 2.0 * u(rng));
  const double scale = std::pow(10.0, -1.0 + 1.5 * u(rng));
  t.v = Vector(dim(rng));
  for (Index k = 0; k < t.v.size(); ++k) t.v[k] = scale * g(rng);
  return t;
}

inline ProxSelftestReport run_prox_selftest(long cases = 500, Seed seed = 20190101, double tolerance = 1e-6) {
  ProxSelftestReport rep;
  rep.tolerance = tolerance;
  Rng rng(seed);
  auto record = [&](FamilyResult& f, const Vector& a, const Vector& b) {
    const double err = (a - b).norm();
    ++f.cases;
    f.max_error = std::max(f.max_error, err);
    if (!(err <= tolerance)) ++f.failures;
  };

  FamilyResult ball{"l1 + unit ball (pca closed form)"};
  for (long k = 0; k < cases; ++k) {
    const ProxTriple t = random_triple(rng);
    const Vector fast = pca::composite_prox_l1_ball(t.alpha_reg, t.eta, t.v);
    const Vector slow = composite_prox_bruteforce(NonsmoothTerm::l1(t.alpha_reg),
                                                  FeasibleSet::ball(t.v.size(), 1.0), t.eta, t.v);
    record(ball, fast, slow);
  }
  rep.families.push_back(ball);

  struct SetFamily {
    std::string name;
    bool nonneg;
    bool blocks;
  };
  for (const SetFamily& sf : {SetFamily{"l1 + nonnegative unit ball", true, false},
                              SetFamily{"l1 + two 2-d balls", false, true},
                              SetFamily{"l1 + nonnegative orthant", true, false}}) {
    FamilyResult fr{sf.name};
    const bool orthant = sf.name.find("orthant") != std::string::npos;
    for (long k = 0; k < cases / 5; ++k) {
      ProxTriple t = random_triple(rng);
      if (sf.blocks) {
        Vector v(4);
        std::normal_distribution<double> g(0.0, 1.5);
        for (Index i = 0; i < 4; ++i) v[i] = g(rng);
        t.v = v;
      }
      const Index n = t.v.size();
      const FeasibleSet X = orthant      ? FeasibleSet::whole_space(n, true)
                            : sf.blocks ? FeasibleSet::block_balls(2, 2, 1.0, false)
                                        : FeasibleSet::block_balls(1, n, 1.0, true);
      const NonsmoothTerm h = NonsmoothTerm::l1(t.alpha_reg);
      record(fr, X.composite_prox(t.eta, t.v, h), composite_prox_bruteforce(h, X, t.eta, t.v));
    }
    rep.families.push_back(fr);
  }
  return rep;
}

}  // namespace pzo::selftest
