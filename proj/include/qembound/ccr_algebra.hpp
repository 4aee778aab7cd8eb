#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "qembound/error.hpp"
#include "qembound/linalg.hpp"

namespace qembound {

/// The fixed generator [[0, 1], [-1, 0]] of 2x2 antisymmetric matrices.
inline Matrix canonical_j() {
  Matrix j(2, 2);
  j << 0.0, 1.0, -1.0, 0.0;
  return j;
}

/// Real antisymmetric nonsingular matrix Θ of even order n = 2ν describing
/// the commutation structure [X, X^T] = 2iΘ. Only constructible through
/// validate_ccr, so every instance satisfies the invariants.
class CcrMatrix {
 public:
  const Matrix& theta() const noexcept { return theta_; }
  Eigen::Index n() const noexcept { return theta_.rows(); }
  Eigen::Index nu() const noexcept { return theta_.rows() / 2; }

  /// Block-diagonal ⊕ θ_k·bJ.
  static CcrMatrix from_eigenfrequencies(const std::vector<double>& frequencies);

  friend CcrMatrix validate_ccr(const Matrix& theta);

  bool operator==(const CcrMatrix& other) const {
    return theta_.rows() == other.theta_.rows() && theta_ == other.theta_;
  }

 private:
  explicit CcrMatrix(Matrix theta) : theta_(std::move(theta)) {}
  Matrix theta_;
};

inline CcrMatrix validate_ccr(const Matrix& theta) {
  require(theta.rows() == theta.cols(), ErrorKind::dimension_mismatch, "CCR matrix must be square");
  require(theta.rows() > 0 && theta.rows() % 2 == 0, ErrorKind::odd_dimension,
          "CCR matrix order " + std::to_string(theta.rows()) + " is not a positive even number");
  require(theta.allFinite(), ErrorKind::invalid_argument, "CCR matrix has non-finite entries");

  const double scale = max_abs_entry(theta);
  require(scale > 0.0, ErrorKind::singular_ccr, "CCR matrix is zero");
  const double asym = max_abs_entry(theta + theta.transpose());
  require(asym <= 1e-12 * scale, ErrorKind::not_antisymmetric,
          "max |Θ + Θ^T| = " + std::to_string(asym) + " exceeds tolerance");

  Matrix projected = 0.5 * (theta - theta.transpose());
  Eigen::JacobiSVD<Matrix> svd(projected);
  const Vector& sv = svd.singularValues();
  require(sv.minCoeff() > 1e-10 * sv.maxCoeff(), ErrorKind::singular_ccr,
          "smallest singular value " + std::to_string(sv.minCoeff()) + " is numerically zero");
  return CcrMatrix(std::move(projected));
}

inline CcrMatrix CcrMatrix::from_eigenfrequencies(const std::vector<double>& frequencies) {
  require(!frequencies.empty(), ErrorKind::invalid_argument, "need at least one eigenfrequency");
  const auto nu = static_cast<Eigen::Index>(frequencies.size());
  Matrix theta = Matrix::Zero(2 * nu, 2 * nu);
  for (Eigen::Index k = 0; k < nu; ++k) {
    require(frequencies[k] > 0.0 && std::isfinite(frequencies[k]), ErrorKind::singular_ccr,
            "eigenfrequencies must be positive and finite");
    theta.block(2 * k, 2 * k, 2, 2) = frequencies[k] * canonical_j();
  }
  return validate_ccr(theta);
}

/// Orthonormal real eigenbasis of Θ: Θ H = H (Γ ⊗ bJ), H^T H = I/2, with the
/// eigenfrequencies Γ sorted in descending order.
class SymplecticBasis {
 public:
  SymplecticBasis(CcrMatrix ccr, Matrix h, Vector gamma)
      : ccr_(std::move(ccr)), h_(std::move(h)), gamma_(std::move(gamma)) {}

  const CcrMatrix& ccr() const noexcept { return ccr_; }
  const Matrix& h() const noexcept { return h_; }
  const Vector& gamma() const noexcept { return gamma_; }
  Eigen::Index n() const noexcept { return h_.rows(); }
  Eigen::Index nu() const noexcept { return gamma_.size(); }
  double theta_min() const { return gamma_.minCoeff(); }
  double theta_max() const { return gamma_.maxCoeff(); }

  /// Γ ⊗ bJ.
  Matrix block_generator() const {
    Matrix g = Matrix::Zero(n(), n());
    for (Eigen::Index k = 0; k < nu(); ++k) g.block(2 * k, 2 * k, 2, 2) = gamma_(k) * canonical_j();
    return g;
  }

  /// 2 H (diag(values) ⊗ I_2) H^T for one value per mode.
  Matrix from_mode_values(const Vector& values) const {
    require_size(values.size(), nu(), "mode value vector");
    Matrix scaled = h_;
    for (Eigen::Index k = 0; k < nu(); ++k) {
      scaled.col(2 * k) *= values(k);
      scaled.col(2 * k + 1) *= values(k);
    }
    return symmetrized(2.0 * scaled * h_.transpose());
  }

 private:
  CcrMatrix ccr_;
  Matrix h_;
  Vector gamma_;
};

inline SymplecticBasis symplectic_eigenbasis(const CcrMatrix& ccr) {
  const Matrix& theta = ccr.theta();
  const Eigen::Index n = ccr.n();
  const Eigen::Index nu = ccr.nu();

  Eigen::RealSchur<Matrix> schur(theta);
  require(schur.info() == Eigen::Success, ErrorKind::eigen_solver_failure, "real Schur decomposition failed");
  const Matrix& t = schur.matrixT();
  const Matrix& u = schur.matrixU();

  struct Mode {
    double frequency;
    Vector re;
    Vector im;
  };
  std::vector<Mode> modes;
  modes.reserve(static_cast<std::size_t>(nu));
  const double scale = max_abs_entry(theta);
  for (Eigen::Index i = 0; i < n;) {
    require(i + 1 < n && std::abs(t(i + 1, i)) > 1e-12 * scale, ErrorKind::eigen_solver_failure,
            "Schur form has a real eigenvalue block");
    // The 2x2 block is [[a, b], [-b, a]] with a ≈ 0 for antisymmetric input.
    const double b = 0.5 * (t(i, i + 1) - t(i + 1, i));
    if (b > 0.0) {
      modes.push_back({b, u.col(i), u.col(i + 1)});
    } else {
      modes.push_back({-b, u.col(i + 1), u.col(i)});
    }
    i += 2;
  }

  std::stable_sort(modes.begin(), modes.end(),
                   [](const Mode& x, const Mode& y) { return x.frequency > y.frequency; });

  Matrix h(n, n);
  Vector gamma(nu);
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  for (Eigen::Index k = 0; k < nu; ++k) {
    Mode& mode = modes[static_cast<std::size_t>(k)];
    for (Eigen::Index r = 0; r < n; ++r) {
      if (std::abs(mode.re(r)) > 1e-12) {
        if (mode.re(r) < 0.0) {
          mode.re = -mode.re;
          mode.im = -mode.im;
        }
        break;
      }
    }
    gamma(k) = mode.frequency;
    h.col(2 * k) = inv_sqrt2 * mode.re;
    h.col(2 * k + 1) = inv_sqrt2 * mode.im;
  }

  SymplecticBasis basis(ccr, std::move(h), std::move(gamma));
  const double residual = max_abs_entry(theta * basis.h() - basis.h() * basis.block_generator());
  require(residual <= 1e-10 * std::max(1.0, scale), ErrorKind::eigen_solver_failure,
          "eigenbasis residual " + std::to_string(residual) + " above tolerance");
  return basis;
}

enum class SymmetricFunction { one, cos, sinc, tanc };

namespace detail {

inline void require_positive_mu(double mu) {
  require(mu > 0.0 && std::isfinite(mu), ErrorKind::invalid_argument,
          "risk sensitivity must be positive and finite, got " + std::to_string(mu));
}

inline double evaluate_on_imaginary_axis(SymmetricFunction f, double x) {
  switch (f) {
    case SymmetricFunction::one: return 1.0;
    case SymmetricFunction::cos: return std::cosh(x);
    case SymmetricFunction::sinc: return scalar::sinhc(x);
    case SymmetricFunction::tanc: return scalar::tanhc(x);
  }
  fail(ErrorKind::unsupported_function, "unknown symmetric function");
}

}  // namespace detail

/// f(μΘ) = 2H(f(iμΓ) ⊗ I_2)H^T for a symmetric f.
inline Matrix matrix_function(const SymplecticBasis& basis, SymmetricFunction f, double mu) {
  detail::require_positive_mu(mu);
  Vector values(basis.nu());
  for (Eigen::Index k = 0; k < basis.nu(); ++k)
    values(k) = detail::evaluate_on_imaginary_axis(f, mu * basis.gamma()(k));
  return basis.from_mode_values(values);
}

/// K(μ) = tanc(μΘ), a positive definite contraction.
inline Matrix k_of_mu(const SymplecticBasis& basis, double mu) {
  return matrix_function(basis, SymmetricFunction::tanc, mu);
}

/// ln det cos(μΘ) = 2 Σ ln cosh(μθ_k), from the eigenfrequencies only.
inline double log_det_cos(const SymplecticBasis& basis, double mu) {
  detail::require_positive_mu(mu);
  double sum = 0.0;
  for (Eigen::Index k = 0; k < basis.nu(); ++k) sum += scalar::log_cosh(mu * basis.gamma()(k));
  return 2.0 * sum;
}

/// ln det(μ sinc(μΘ)).
inline double log_det_scaled_sinc(const SymplecticBasis& basis, double mu) {
  detail::require_positive_mu(mu);
  double sum = 0.0;
  for (Eigen::Index k = 0; k < basis.nu(); ++k) sum += scalar::log_sinhc(mu * basis.gamma()(k));
  return static_cast<double>(basis.n()) * std::log(mu) + 2.0 * sum;
}

/// Eigenvalues θ_k / tanh(μθ_k) of (μK(μ))^{-1}, one per mode.
inline Vector inverse_scaled_k_modes(const SymplecticBasis& basis, double mu) {
  detail::require_positive_mu(mu);
  Vector values(basis.nu());
  for (Eigen::Index k = 0; k < basis.nu(); ++k) values(k) = 1.0 / (mu * scalar::tanhc(mu * basis.gamma()(k)));
  return values;
}

/// (μK(μ))^{1/2}.
inline Matrix sqrt_scaled_k(const SymplecticBasis& basis, double mu) {
  detail::require_positive_mu(mu);
  Vector values(basis.nu());
  for (Eigen::Index k = 0; k < basis.nu(); ++k) values(k) = std::sqrt(mu * scalar::tanhc(mu * basis.gamma()(k)));
  return basis.from_mode_values(values);
}

}  // namespace qembound
