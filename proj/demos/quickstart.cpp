// Solves a small networked sparse-PCA instance with PZO-PDA and prints the
// constraint violation and optimality gap every few iterations.

#include <cmath>
#include <iostream>

#include "pzo/pca.hpp"
#include "pzo/pzo_pda.hpp"

int main() {
  const auto inst = pzo::pca::generate_instance(/*agents*/ 5, /*edges*/ 8, /*d*/ 4, /*p*/ 40, /*alpha*/ 1e-4,
                                                /*noise*/ 0.01, /*seed*/ 42);
  const double L = inst.problem.oracle.smoothness;
  const auto preset = pzo::derive_params(L);

  pzo::SolverParams par;
  par.rho = preset.rho;
  par.gamma = preset.gamma;
  par.beta = preset.beta;
  par.R = 200;
  par.J = par.R;
  par.mu = 1.0 / std::sqrt(static_cast<double>(par.R));

  std::cout << "L = " << L << ", rho = " << par.rho << ", gamma = " << par.gamma << ", beta = " << par.beta << '\n';
  pzo::RunOptions opts;
  opts.on_row = [](const pzo::MetricRow& row) {
    if (row.r % 25 == 0)
      std::cout << "r = " << row.r << "  ||Ax-b||^2 = " << row.constraint_violation << "  psi = " << *row.psi << '\n';
  };
  const auto out = pzo::run(inst.problem, par, /*seed*/ 1, opts);
  std::cout << "sampled output index a = " << out.sample_index << ", oracle calls = " << out.oracle_calls << '\n';
}
