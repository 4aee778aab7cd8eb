#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <string>
#include <vector>

#include "qembound/ccr_algebra.hpp"
#include "qembound/error.hpp"
#include "qembound/linalg.hpp"

namespace qembound {

inline constexpr double kAdmissibilityFloor = -1e-10;

/// Smallest eigenvalue of the Hermitian matrix C + iΘ.
inline double admissibility_margin(const Matrix& cov, const CcrMatrix& ccr) {
  require_size(cov.rows(), ccr.n(), "covariance");
  const Eigen::MatrixXcd quantum_cov =
      symmetrized(cov).cast<std::complex<double>>() + std::complex<double>(0.0, 1.0) * ccr.theta().cast<std::complex<double>>();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(quantum_cov, Eigen::EigenvaluesOnly);
  require(solver.info() == Eigen::Success, ErrorKind::eigen_solver_failure, "Hermitian eigensolver failed");
  return solver.eigenvalues().minCoeff();
}

/// Gaussian quantum state with mean M and real covariance C, C + iΘ ⪰ 0.
class GaussianState {
 public:
  GaussianState(Vector mean, const Matrix& cov, CcrMatrix ccr) : mean_(std::move(mean)), ccr_(std::move(ccr)) {
    require_size(mean_.size(), ccr_.n(), "mean");
    require_square(cov, "covariance");
    require_size(cov.rows(), ccr_.n(), "covariance");
    require(mean_.allFinite() && cov.allFinite(), ErrorKind::invalid_argument, "state has non-finite entries");
    const double asym = max_abs_entry(cov - cov.transpose());
    require(asym <= 1e-12 * std::max(1.0, max_abs_entry(cov)), ErrorKind::invalid_argument,
            "covariance is not symmetric");
    cov_ = symmetrized(cov);
    const double margin = admissibility_margin(cov_, ccr_);
    require(margin >= kAdmissibilityFloor, ErrorKind::not_admissible,
            "min eigenvalue of C + iΘ is " + std::to_string(margin));
  }

  const Vector& mean() const noexcept { return mean_; }
  const Matrix& cov() const noexcept { return cov_; }
  const CcrMatrix& ccr() const noexcept { return ccr_; }
  Eigen::Index n() const noexcept { return mean_.size(); }

 private:
  Vector mean_;
  Matrix cov_;
  CcrMatrix ccr_;
};

/// Convex combination of Gaussian MGFs sharing one CCR matrix.
class MixtureMgf {
 public:
  MixtureMgf(std::vector<double> weights, std::vector<GaussianState> components)
      : weights_(std::move(weights)), components_(std::move(components)) {
    require(!components_.empty(), ErrorKind::invalid_argument, "mixture needs at least one component");
    require(weights_.size() == components_.size(), ErrorKind::dimension_mismatch,
            "mixture has " + std::to_string(weights_.size()) + " weights for " +
                std::to_string(components_.size()) + " components");
    double total = 0.0;
    for (double w : weights_) {
      require(w > 0.0 && std::isfinite(w), ErrorKind::invalid_argument, "mixture weights must be positive");
      total += w;
    }
    require(std::abs(total - 1.0) <= 1e-12, ErrorKind::invalid_argument,
            "mixture weights sum to " + std::to_string(total));
    const CcrMatrix& ccr = components_.front().ccr();
    for (const auto& c : components_) {
      require(c.n() == ccr.n(), ErrorKind::dimension_mismatch, "mixture components differ in dimension");
      require(max_abs_entry(c.ccr().theta() - ccr.theta()) <= 1e-12, ErrorKind::invalid_argument,
              "mixture components must share one CCR matrix");
    }
  }

  // Implicit: a Gaussian state is a one-component mixture.
  MixtureMgf(const GaussianState& state) : MixtureMgf({1.0}, {state}) {}  // NOLINT

  const std::vector<double>& weights() const noexcept { return weights_; }
  const std::vector<GaussianState>& components() const noexcept { return components_; }
  std::size_t size() const noexcept { return components_.size(); }
  const CcrMatrix& ccr() const { return components_.front().ccr(); }
  Eigen::Index n() const { return components_.front().n(); }

  double max_cov_eigenvalue() const {
    double top = -kInf;
    for (const auto& c : components_) top = std::max(top, max_eigenvalue(c.cov()));
    return top;
  }

 private:
  std::vector<double> weights_;
  std::vector<GaussianState> components_;
};

/// Symmetric positive definite weight P of the L2-norm ∫ e^{-|u|_P^2} Ψ(u)^2 du.
class WeightMatrix {
 public:
  explicit WeightMatrix(const Matrix& p) {
    require_square(p, "weight matrix");
    require(p.allFinite(), ErrorKind::invalid_argument, "weight matrix has non-finite entries");
    require(max_abs_entry(p - p.transpose()) <= 1e-12 * std::max(1.0, max_abs_entry(p)),
            ErrorKind::invalid_argument, "weight matrix is not symmetric");
    p_ = symmetrized(p);
    Eigen::LLT<Matrix> llt(p_);
    require(llt.info() == Eigen::Success && min_eigenvalue(p_) > 0.0, ErrorKind::not_positive_definite,
            "weight matrix is not positive definite");
  }

  static WeightMatrix scalar(double lambda, Eigen::Index n) {
    require(lambda > 0.0 && std::isfinite(lambda), ErrorKind::invalid_argument,
            "scalar weight must be positive, got " + std::to_string(lambda));
    return WeightMatrix(lambda * Matrix::Identity(n, n));
  }

  const Matrix& matrix() const noexcept { return p_; }
  Eigen::Index n() const noexcept { return p_.rows(); }

 private:
  Matrix p_;
};

/// ln Ψ(u) = ln Σ_i w_i exp(M_i·u + u^T C_i u / 2).
inline double log_mgf(const MixtureMgf& state, const Vector& u) {
  require_size(u.size(), state.n(), "MGF argument");
  std::vector<double> terms;
  terms.reserve(state.size());
  for (std::size_t i = 0; i < state.size(); ++i) {
    const auto& c = state.components()[i];
    terms.push_back(std::log(state.weights()[i]) + c.mean().dot(u) + 0.5 * u.dot(c.cov() * u));
  }
  return scalar::log_sum_exp(terms);
}

inline double mgf_eval(const MixtureMgf& state, const Vector& u) { return std::exp(log_mgf(state, u)); }

/// ln of (2π)^{-m/2} √det N ∫ e^{a·u - |u|_N^2/2} du, i.e. |a|^2_{N^{-1}} / 2.
inline double gaussian_moment_integral(const Vector& a, const Matrix& precision) {
  require_square(precision, "precision matrix");
  require_size(a.size(), precision.rows(), "moment vector");
  Eigen::LLT<Matrix> llt(symmetrized(precision));
  require(llt.info() == Eigen::Success && min_eigenvalue(precision) > 0.0, ErrorKind::not_positive_definite,
          "precision matrix is not positive definite");
  return 0.5 * a.dot(llt.solve(a));
}

namespace detail {

/// ln ∫ exp(a·u - u^T N u / 2) du for N ≻ 0; NormDivergent otherwise.
inline double log_gaussian_integral(const Vector& a, const Matrix& n_matrix) {
  const Matrix sym = symmetrized(n_matrix);
  const Vector eig = symmetric_eigenvalues(sym);
  require(eig.minCoeff() > 1e-14 * std::max(1.0, eig.cwiseAbs().maxCoeff()), ErrorKind::norm_divergent,
          "weight does not dominate the covariance; norm integral diverges");
  const double log_det = eig.array().log().sum();
  const double dim = static_cast<double>(a.size());
  return 0.5 * dim * std::log(2.0 * std::numbers::pi) - 0.5 * log_det + gaussian_moment_integral(a, sym);
}

}  // namespace detail

/// ln ⫴Ψ⫴_P, evaluated pairwise over the mixture components.
inline double log_weighted_norm(const MixtureMgf& state, const WeightMatrix& weight) {
  require_size(weight.n(), state.n(), "weight matrix");
  const Matrix& p = weight.matrix();
  const auto& comps = state.components();
  std::vector<double> terms;
  terms.reserve(state.size() * state.size());
  for (std::size_t i = 0; i < state.size(); ++i) {
    for (std::size_t j = 0; j < state.size(); ++j) {
      const Matrix precision = 2.0 * p - comps[i].cov() - comps[j].cov();
      const Vector a = comps[i].mean() + comps[j].mean();
      terms.push_back(std::log(state.weights()[i]) + std::log(state.weights()[j]) +
                      detail::log_gaussian_integral(a, precision));
    }
  }
  return 0.5 * scalar::log_sum_exp(terms);
}

inline double weighted_norm(const MixtureMgf& state, const WeightMatrix& weight) {
  return std::exp(log_weighted_norm(state, weight));
}

/// ln ⫴Ψ⫴_λ for the scalar weight λ I_n.
inline double log_scalar_norm(const MixtureMgf& state, double lambda) {
  return log_weighted_norm(state, WeightMatrix::scalar(lambda, state.n()));
}

inline double scalar_norm(const MixtureMgf& state, double lambda) { return std::exp(log_scalar_norm(state, lambda)); }

}  // namespace qembound
