#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include "qembound/error.hpp"

namespace qembound {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

namespace scalar {

// Hyperbolic counterparts of the symmetric functions evaluated on ±iθ:
// cos(iθ) = cosh θ, sinc(iθ) = sinhc θ, tanc(iθ) = tanhc θ.

inline double sinhc(double x) {
  const double ax = std::abs(x);
  if (ax < 1e-4) return 1.0 + x * x / 6.0;
  return std::sinh(x) / x;
}

inline double tanhc(double x) {
  const double ax = std::abs(x);
  if (ax < 1e-4) return 1.0 - x * x / 3.0;
  return std::tanh(x) / x;
}

/// ln cosh x without overflow for large |x|.
inline double log_cosh(double x) {
  const double ax = std::abs(x);
  return ax + std::log1p(std::exp(-2.0 * ax)) - std::log(2.0);
}

/// ln(sinh x / x) without overflow for large |x|.
inline double log_sinhc(double x) {
  const double ax = std::abs(x);
  if (ax < 1e-4) return ax * ax / 6.0;
  if (ax < 20.0) return std::log(std::sinh(ax) / ax);
  return ax + std::log1p(-std::exp(-2.0 * ax)) - std::log(2.0 * ax);
}

inline double log_sum_exp(std::span<const double> values) {
  double top = -kInf;
  for (double v : values) top = std::max(top, v);
  if (!std::isfinite(top)) return top;
  double sum = 0.0;
  for (double v : values) sum += std::exp(v - top);
  return top + std::log(sum);
}

}  // namespace scalar

inline Matrix symmetrized(const Matrix& m) { return 0.5 * (m + m.transpose()); }

inline double max_abs_entry(const Matrix& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

inline Vector symmetric_eigenvalues(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(symmetrized(m), Eigen::EigenvaluesOnly);
  require(solver.info() == Eigen::Success, ErrorKind::eigen_solver_failure,
          "symmetric eigenvalue solver did not converge");
  return solver.eigenvalues();
}

inline double min_eigenvalue(const Matrix& m) { return symmetric_eigenvalues(m).minCoeff(); }
inline double max_eigenvalue(const Matrix& m) { return symmetric_eigenvalues(m).maxCoeff(); }

/// ln det of a symmetric positive definite matrix via Cholesky.
inline double log_det_spd(const Matrix& m, const std::string& what = "matrix") {
  Eigen::LLT<Matrix> llt(symmetrized(m));
  require(llt.info() == Eigen::Success, ErrorKind::not_positive_definite, what + " is not positive definite");
  const Matrix& l = llt.matrixLLT();
  double sum = 0.0;
  for (Eigen::Index i = 0; i < l.rows(); ++i) {
    const double d = l(i, i);
    require(d > 0.0, ErrorKind::not_positive_definite, what + " is not positive definite");
    sum += std::log(d);
  }
  return 2.0 * sum;
}

/// Positive definiteness with an eigenvalue floor relative to the matrix scale.
inline bool is_positive_definite(const Matrix& m, double relative_floor = 0.0) {
  const double scale = std::max(1.0, max_abs_entry(m));
  return min_eigenvalue(m) > relative_floor * scale;
}

/// e^M by scaling-and-squaring with Padé approximants.
inline Matrix expm(const Matrix& m) {
  require(m.rows() == m.cols(), ErrorKind::dimension_mismatch, "expm needs a square matrix");
  require(m.allFinite(), ErrorKind::expm_failure, "expm input has non-finite entries");
  Matrix result = m.exp();
  require(result.allFinite(), ErrorKind::expm_failure, "expm produced non-finite entries");
  return result;
}

inline void require_square(const Matrix& m, const std::string& what) {
  require(m.rows() == m.cols(), ErrorKind::dimension_mismatch, what + " must be square");
}

inline void require_size(Eigen::Index actual, Eigen::Index expected, const std::string& what) {
  require(actual == expected, ErrorKind::dimension_mismatch,
          what + " has dimension " + std::to_string(actual) + ", expected " + std::to_string(expected));
}

}  // namespace qembound
