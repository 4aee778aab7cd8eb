#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "qembound/ccr_algebra.hpp"
#include "qembound/states.hpp"

namespace qembound::testing {

inline Matrix random_orthogonal(Eigen::Index n, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  Matrix g(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) g(i, j) = normal(rng);
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ();
  // Fix column signs so the distribution is Haar.
  const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Eigen::Index j = 0; j < n; ++j)
    if (r(j, j) < 0.0) q.col(j) *= -1.0;
  return q;
}

/// Θ = Q (Γ ⊗ bJ) Q^T with Q orthogonal.
inline Matrix theta_from(const Matrix& q, const std::vector<double>& gamma) {
  const Eigen::Index n = q.rows();
  Matrix block = Matrix::Zero(n, n);
  for (std::size_t k = 0; k < gamma.size(); ++k) {
    block(2 * k, 2 * k + 1) = gamma[k];
    block(2 * k + 1, 2 * k) = -gamma[k];
  }
  return q * block * q.transpose();
}

inline std::vector<double> random_frequencies(Eigen::Index nu, double lo, double hi, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> uni(lo, hi);
  std::vector<double> g(static_cast<std::size_t>(nu));
  for (auto& x : g) x = uni(rng);
  return g;
}

inline CcrMatrix random_ccr(Eigen::Index n, std::mt19937_64& rng, double lo = 0.3, double hi = 2.0) {
  return validate_ccr(theta_from(random_orthogonal(n, rng), random_frequencies(n / 2, lo, hi, rng)));
}

/// |Θ|: the minimal covariance with C + iΘ ⪰ 0 sharing the eigenbasis of Θ.
inline Matrix abs_theta(const SymplecticBasis& basis) { return basis.from_mode_values(basis.gamma()); }

inline Matrix random_psd(Eigen::Index n, double scale, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  Matrix g(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) g(i, j) = normal(rng);
  return scale * g * g.transpose() / static_cast<double>(n);
}

inline Vector random_vector(Eigen::Index n, double scale, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = scale * normal(rng);
  return v;
}

/// Admissible Gaussian state C = |Θ| + W, W ⪰ 0 random.
inline GaussianState random_state(const SymplecticBasis& basis, std::mt19937_64& rng, double noise = 0.5,
                                  double mean_scale = 0.5) {
  const Eigen::Index n = basis.n();
  return GaussianState(random_vector(n, mean_scale, rng), abs_theta(basis) + random_psd(n, noise, rng), basis.ccr());
}

inline Matrix block_j(double theta = 1.0) {
  Matrix j(2, 2);
  j << 0.0, theta, -theta, 0.0;
  return j;
}

}  // namespace qembound::testing
