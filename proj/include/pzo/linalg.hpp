#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <string>

#include "pzo/errors.hpp"

namespace pzo {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

inline bool is_symmetric(const Matrix& m, double tol = 1e-12) {
  if (m.rows() != m.cols()) return false;
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  return (m - m.transpose()).cwiseAbs().maxCoeff() <= tol * scale;
}

// Eigenvalues of a symmetric matrix in ascending order.
inline Vector symmetric_eigenvalues(const Matrix& m) {
  if (m.rows() == 0) return Vector();
  Eigen::SelfAdjointEigenSolver<Matrix> solver(m, Eigen::EigenvaluesOnly);
  return solver.eigenvalues();
}

inline double max_eigenvalue(const Matrix& m) {
  if (m.rows() == 0) return 0.0;
  return symmetric_eigenvalues(m).maxCoeff();
}

inline double min_eigenvalue(const Matrix& m) {
  if (m.rows() == 0) return 0.0;
  return symmetric_eigenvalues(m).minCoeff();
}

// Largest absolute eigenvalue, i.e. the spectral norm for symmetric input.
inline double spectral_norm_symmetric(const Matrix& m) {
  if (m.rows() == 0) return 0.0;
  return symmetric_eigenvalues(m).cwiseAbs().maxCoeff();
}

inline bool all_finite(const Matrix& m) { return m.allFinite(); }

inline void require_size(Index actual, Index expected, const char* what) {
  if (actual != expected) {
    throw ContractViolation(std::string(what) + ": expected dimension " + std::to_string(expected) +
                            ", got " + std::to_string(actual));
  }
}

}  // namespace pzo
