#pragma once

#include <chrono>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "pzo/diagnostics.hpp"
#include "pzo/errors.hpp"
#include "pzo/estimator.hpp"
#include "pzo/linalg.hpp"

namespace pzo {

enum class DiagnosticsLevel { basic, full };

// (x^r, x^{r-1}, lambda^r, lambda^{r-1}) plus the estimate used for the last step.
struct IterateState {
  Vector x_curr;
  Vector x_prev;
  Vector lambda_curr;
  Vector lambda_prev;
  GradientEstimate last_estimate;
  Vector last_h_subgradient;
  long r = 0;
};

struct RunOutput {
  std::vector<MetricRow> trajectory;
  IterateState final_state;
  std::vector<Vector> iterates;  // x^0 .. x^R
  long sample_index = 0;         // a, uniform on {0, ..., R}
  Vector x_a;
  long long oracle_calls = 0;
  std::vector<std::string> warnings;
  long dual_bound_violations = 0;
  double potential_band = 0.0;  // largest Monte-Carlo half-width folded into Q
};

// Thrown when an iteration fails; carries everything computed up to that point.
class RunAborted : public SolverError {
 public:
  RunAborted(const std::string& what, RunOutput partial, double last_residual = 0.0)
      : SolverError(what, last_residual), partial_(std::move(partial)) {}
  const RunOutput& partial() const noexcept { return partial_; }

 private:
  RunOutput partial_;
};

using RowCallback = std::function<void(const MetricRow&)>;

// Independent streams derived from one master seed.
enum class Stream : std::uint32_t { estimation = 1, output_index = 2, monte_carlo = 3, initial_point = 4 };

inline Rng make_stream(Seed master, Stream s) {
  std::seed_seq seq{static_cast<std::uint32_t>(master & 0xffffffffu), static_cast<std::uint32_t>(master >> 32),
                    static_cast<std::uint32_t>(s)};
  return Rng(seq);
}

inline long sample_output_index(Seed master, long R) {
  Rng rng = make_stream(master, Stream::output_index);
  return std::uniform_int_distribution<long>(0, R)(rng);
}

namespace detail {

inline Vector resolve_initial_point(const ProblemInstance& p, const std::optional<Vector>& x0) {
  if (x0) {
    require_size(x0->size(), p.dimension(), "run: x0");
    return *x0;
  }
  if (p.initial_point) return *p.initial_point;
  throw ContractViolation("run: no initial point supplied and the problem has none");
}

inline double elapsed_ms(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace detail

}  // namespace pzo
