#pragma once

#include <cmath>
#include <cstdint>
#include <string>

#include "qembound/error.hpp"
#include "qembound/linalg.hpp"
#include "qembound/monte_carlo.hpp"
#include "qembound/qem.hpp"

namespace qembound {

/// Classical Gaussian random vector: the commutative limit Θ = 0.
class ClassicalGaussian {
 public:
  ClassicalGaussian(Vector mean, const Matrix& cov) : mean_(std::move(mean)) {
    require_square(cov, "covariance");
    require_size(cov.rows(), mean_.size(), "covariance");
    require(mean_.size() > 0, ErrorKind::invalid_argument, "empty classical Gaussian");
    require(max_abs_entry(cov - cov.transpose()) <= 1e-12 * std::max(1.0, max_abs_entry(cov)),
            ErrorKind::invalid_argument, "covariance is not symmetric");
    cov_ = symmetrized(cov);
    Eigen::SelfAdjointEigenSolver<Matrix> solver(cov_);
    require(solver.info() == Eigen::Success, ErrorKind::eigen_solver_failure, "eigensolver failed");
    require(solver.eigenvalues().minCoeff() >= -1e-12, ErrorKind::not_positive_definite,
            "covariance is not positive semidefinite");
    eigenvalues_ = solver.eigenvalues().cwiseMax(0.0);
    eigenvectors_ = solver.eigenvectors();
  }

  const Vector& mean() const noexcept { return mean_; }
  const Matrix& cov() const noexcept { return cov_; }
  Eigen::Index n() const noexcept { return mean_.size(); }
  double max_eigenvalue() const { return eigenvalues_.maxCoeff(); }

  /// Square root factor S with S S^T = C.
  Matrix factor() const { return eigenvectors_ * eigenvalues_.cwiseSqrt().asDiagonal(); }

  const Vector& eigenvalues() const noexcept { return eigenvalues_; }
  const Matrix& eigenvectors() const noexcept { return eigenvectors_; }

 private:
  Vector mean_;
  Matrix cov_;
  Vector eigenvalues_;
  Matrix eigenvectors_;
};

/// Υ(μ) = (|M|²_{μ(I-μC)^{-1}} - ln det(I - μC)) / 2 for μ < 1/λ_max(C).
inline double classical_gaussian_qem(const ClassicalGaussian& g, double mu) {
  require(mu >= 0.0 && std::isfinite(mu), ErrorKind::invalid_argument, "μ must be nonnegative");
  const double top = g.max_eigenvalue();
  if (mu * top >= 1.0) throw RiskParameterTooLarge(mu, 1.0 / top);
  const Vector rotated = g.eigenvectors().transpose() * g.mean();
  double mean_term = 0.0;
  double log_det = 0.0;
  for (Eigen::Index i = 0; i < g.n(); ++i) {
    const double lambda = g.eigenvalues()(i);
    mean_term += mu * rotated(i) * rotated(i) / (1.0 - mu * lambda);
    log_det += std::log1p(-mu * lambda);
  }
  return 0.5 * (mean_term - log_det);
}

/// Classical CGF truncated at 0.999/λ_max(C).
inline Cgf classical_cgf(const ClassicalGaussian& g, double truncation = kExactCgfTruncation) {
  const double top = g.max_eigenvalue();
  const double mu_max = top > 0.0 ? truncation / top : kDefaultCgfHorizon;
  return {[g](double mu) { return classical_gaussian_qem(g, mu); }, mu_max};
}

/// Top 0.1% of summands carrying more than half of the total weight.
inline constexpr double kDivergenceShare = 0.5;

inline void check_divergence(const LogMeanEstimate& est, const std::string& what) {
  require(est.top_weight_share <= kDivergenceShare, ErrorKind::suspected_divergence,
          what + ": top 0.1% of summands carry " + std::to_string(100.0 * est.top_weight_share) +
              "% of the weight");
}

/// Monte-Carlo estimate of E exp(μ|X|²/2).
inline LogMeanEstimate classical_qem_mc(const ClassicalGaussian& g, double mu, std::size_t samples,
                                        std::uint64_t seed, unsigned threads = 0) {
  require(mu >= 0.0 && std::isfinite(mu), ErrorKind::invalid_argument, "μ must be nonnegative");
  require(samples >= 2, ErrorKind::invalid_argument, "need at least two samples");
  if (mu == 0.0) return {0.0, 0.0, samples, 0.0};
  const Matrix factor = g.factor();
  const Eigen::Index n = g.n();
  auto draw = [&](std::mt19937_64& engine, std::normal_distribution<double>& normal) {
    Vector gamma(n);
    for (Eigen::Index i = 0; i < n; ++i) gamma(i) = normal(engine);
    const Vector x = g.mean() + factor * gamma;
    return 0.5 * mu * x.squaredNorm();
  };
  const LogMeanEstimate est = estimate_log_mean(samples, seed, threads, draw);
  check_divergence(est, "quadratic-exponential moment");
  return est;
}

struct IdentityCheck {
  LogMeanEstimate lhs;
  LogMeanEstimate rhs;
  double combined_se = 0.0;
  bool pass = false;
};

/// Checks E exp(μ|X|²/2) = E Λ(√μ Z), Z standard normal, by two
/// independent Monte-Carlo estimates compared at 3 combined standard errors.
inline IdentityCheck mmm_identity_check(const ClassicalGaussian& g, double mu, std::size_t samples,
                                        std::uint64_t seed, unsigned threads = 0) {
  require(g.n() % 2 == 0, ErrorKind::odd_dimension, "identity check needs an even dimension");
  IdentityCheck out;
  out.lhs = classical_qem_mc(g, mu, samples, substream_seed(seed, 0), threads);
  if (mu == 0.0) {
    out.rhs = out.lhs;
    out.pass = true;
    return out;
  }
  const double sqrt_mu = std::sqrt(mu);
  const Eigen::Index n = g.n();
  auto draw = [&](std::mt19937_64& engine, std::normal_distribution<double>& normal) {
    Vector z(n);
    for (Eigen::Index i = 0; i < n; ++i) z(i) = normal(engine);
    const Vector u = sqrt_mu * z;
    return g.mean().dot(u) + 0.5 * u.dot(g.cov() * u);
  };
  out.rhs = estimate_log_mean(samples, substream_seed(seed, 1), threads, draw);
  check_divergence(out.rhs, "averaged MGF");
  out.combined_se = std::hypot(out.lhs.relative_std_error, out.rhs.relative_std_error);
  out.pass = std::abs(out.lhs.log_mean - out.rhs.log_mean) <= 3.0 * out.combined_se;
  return out;
}

struct EmpiricalTail {
  double probability = 0.0;
  double std_error = 0.0;
  std::size_t samples = 0;
};

/// Fraction of draws with |X|² >= 2ε and its Wald standard error.
inline EmpiricalTail empirical_tail(const ClassicalGaussian& g, double eps, std::size_t samples, std::uint64_t seed,
                                   unsigned threads = 0) {
  require(eps >= 0.0, ErrorKind::invalid_argument, "ε must be nonnegative");
  require(samples >= 1, ErrorKind::invalid_argument, "need at least one sample");
  const Matrix factor = g.factor();
  const Eigen::Index n = g.n();
  auto draw = [&](std::mt19937_64& engine, std::normal_distribution<double>& normal) {
    Vector gamma(n);
    for (Eigen::Index i = 0; i < n; ++i) gamma(i) = normal(engine);
    const Vector x = g.mean() + factor * gamma;
    return x.squaredNorm() >= 2.0 * eps ? 1.0 : 0.0;
  };
  const auto hits = draw_samples(samples, seed, threads, draw);
  double count = 0.0;
  for (double h : hits) count += h;
  const double p = count / static_cast<double>(samples);
  return {p, std::sqrt(p * (1.0 - p) / static_cast<double>(samples)), samples};
}

}  // namespace qembound
