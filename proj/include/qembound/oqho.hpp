#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "qembound/ccr_algebra.hpp"
#include "qembound/error.hpp"
#include "qembound/linalg.hpp"
#include "qembound/qem.hpp"
#include "qembound/states.hpp"

namespace qembound {

/// Linear QSDE dX = AX dt + B dW driven by vacuum fields, parameterised by
/// an energy matrix R (n×n) and a coupling matrix N (m×n, m even).
class OqhoModel {
 public:
  OqhoModel(const Matrix& energy, Matrix coupling, CcrMatrix ccr) : coupling_(std::move(coupling)), ccr_(std::move(ccr)) {
    require_square(energy, "energy matrix");
    require_size(energy.rows(), ccr_.n(), "energy matrix");
    require(max_abs_entry(energy - energy.transpose()) <= 1e-12 * std::max(1.0, max_abs_entry(energy)),
            ErrorKind::invalid_argument, "energy matrix is not symmetric");
    energy_ = symmetrized(energy);
    require(coupling_.rows() % 2 == 0, ErrorKind::odd_dimension,
            "coupling matrix has an odd number of rows (" + std::to_string(coupling_.rows()) + ")");
    if (coupling_.rows() > 0) require_size(coupling_.cols(), ccr_.n(), "coupling matrix columns");
    else coupling_.resize(0, ccr_.n());
  }

  const Matrix& energy() const noexcept { return energy_; }
  const Matrix& coupling() const noexcept { return coupling_; }
  const CcrMatrix& ccr() const noexcept { return ccr_; }
  Eigen::Index n() const noexcept { return ccr_.n(); }
  Eigen::Index m() const noexcept { return coupling_.rows(); }

  /// I_{m/2} ⊗ bJ.
  Matrix field_j() const {
    Matrix j = Matrix::Zero(m(), m());
    for (Eigen::Index k = 0; k < m() / 2; ++k) j.block(2 * k, 2 * k, 2, 2) = canonical_j();
    return j;
  }

 private:
  Matrix energy_;
  Matrix coupling_;
  CcrMatrix ccr_;
};

struct DynamicsMatrices {
  Matrix a;
  Matrix b;
};

/// A = 2Θ(R + N^T J N), B = 2Θ N^T.
inline DynamicsMatrices dynamics_matrices(const OqhoModel& model) {
  const Matrix& theta = model.ccr().theta();
  const Matrix& n = model.coupling();
  return {2.0 * theta * (model.energy() + n.transpose() * model.field_j() * n), 2.0 * theta * n.transpose()};
}

struct GramianResult {
  Matrix sigma;
  /// Horizon t; +∞ for the infinite-horizon Gramian.
  double horizon = 0.0;
  bool hurwitz = false;
};

inline bool is_hurwitz(const Matrix& a, double threshold = -1e-10) {
  Eigen::EigenSolver<Matrix> solver(a, false);
  require(solver.info() == Eigen::Success, ErrorKind::eigen_solver_failure, "eigenvalue solver failed");
  return solver.eigenvalues().real().maxCoeff() < threshold;
}

namespace detail {

inline void require_dynamics(const Matrix& a, const Matrix& b) {
  require_square(a, "A");
  require_size(b.rows(), a.rows(), "B rows");
}

inline void require_psd(const Matrix& sigma, const std::string& what) {
  if (sigma.size() == 0) return;
  const double floor = -1e-10 * std::max(1.0, max_abs_entry(sigma));
  require(min_eigenvalue(sigma) >= floor, ErrorKind::expm_failure, what + " is not positive semidefinite");
}

}  // namespace detail

/// Σ_t = ∫_0^t e^{sA} BB^T e^{sA^T} ds by the block-exponential method. Long
/// horizons are split into 2^k steps and recombined with
/// Σ_{2h} = Σ_h + e^{hA} Σ_h e^{hA^T}, which keeps e^{-hA} well scaled.
inline GramianResult gramian_finite(const Matrix& a, const Matrix& b, double t) {
  detail::require_dynamics(a, b);
  require(t >= 0.0 && std::isfinite(t), ErrorKind::invalid_argument, "horizon must be nonnegative and finite");
  const Eigen::Index n = a.rows();
  GramianResult out{Matrix::Zero(n, n), t, is_hurwitz(a)};
  if (t == 0.0) return out;

  const double norm = a.cwiseAbs().colwise().sum().maxCoeff();
  int doublings = 0;
  double h = t;
  while (norm * h > 1.0 && doublings < 60) {
    h *= 0.5;
    ++doublings;
  }

  Matrix block = Matrix::Zero(2 * n, 2 * n);
  block.topLeftCorner(n, n) = -a * h;
  block.topRightCorner(n, n) = b * b.transpose() * h;
  block.bottomRightCorner(n, n) = a.transpose() * h;
  const Matrix f = expm(block);
  Matrix sigma = symmetrized(f.bottomRightCorner(n, n).transpose() * f.topRightCorner(n, n));
  Matrix step = f.bottomRightCorner(n, n).transpose();  // e^{hA}

  for (int i = 0; i < doublings; ++i) {
    sigma = symmetrized(sigma + step * sigma * step.transpose());
    step = step * step;
  }
  require(sigma.allFinite(), ErrorKind::expm_failure, "Gramian has non-finite entries");
  detail::require_psd(sigma, "finite-horizon Gramian");
  out.sigma = std::move(sigma);
  return out;
}

/// Σ_∞ from the Lyapunov equation AΣ + ΣA^T + BB^T = 0 for Hurwitz A.
inline GramianResult gramian_infinite(const Matrix& a, const Matrix& b) {
  detail::require_dynamics(a, b);
  require(is_hurwitz(a), ErrorKind::not_hurwitz, "A has an eigenvalue with real part >= -1e-10");
  const Eigen::Index n = a.rows();
  const Matrix q = b * b.transpose();
  const Matrix identity = Matrix::Identity(n, n);

  // Column-major vec: vec(AΣ + ΣA^T) = (I ⊗ A + A ⊗ I) vec Σ.
  Matrix lyapunov = Matrix::Zero(n * n, n * n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      lyapunov.block(i * n, j * n, n, n) += identity(i, j) * a;
      lyapunov.block(i * n, j * n, n, n) += a(i, j) * identity;
    }
  }
  const Vector rhs = -Eigen::Map<const Vector>(q.data(), n * n);
  Eigen::PartialPivLU<Matrix> lu(lyapunov);
  Vector vec_sigma = lu.solve(rhs);
  vec_sigma += lu.solve(rhs - lyapunov * vec_sigma);  // one refinement step

  Matrix sigma = symmetrized(Eigen::Map<const Matrix>(vec_sigma.data(), n, n));
  const double residual = max_abs_entry(a * sigma + sigma * a.transpose() + q);
  require(residual <= 1e-9 * std::max(max_abs_entry(q), 1e-300) || max_abs_entry(q) == 0.0,
          ErrorKind::eigen_solver_failure, "Lyapunov residual " + std::to_string(residual) + " above tolerance");
  detail::require_psd(sigma, "infinite-horizon Gramian");
  return {std::move(sigma), kInf, true};
}

namespace detail {

inline void require_model_ccr(const MixtureMgf& state, const OqhoModel& model) {
  require_size(state.n(), model.n(), "initial state");
  require(max_abs_entry(state.ccr().theta() - model.ccr().theta()) <= 1e-12, ErrorKind::invalid_argument,
          "initial state and model refer to different CCR matrices");
}

}  // namespace detail

/// Ψ_t(u) = Ψ_0(e^{tA^T}u) e^{|u|²_{Σ_t}/2}: each component (M, C) maps to
/// (e^{tA}M, e^{tA}C e^{tA^T} + Σ_t).
inline MixtureMgf propagate_mgf(const MixtureMgf& initial, const OqhoModel& model, double t) {
  detail::require_model_ccr(initial, model);
  require(t >= 0.0 && std::isfinite(t), ErrorKind::invalid_argument, "time must be nonnegative and finite");
  if (t == 0.0) return initial;
  const DynamicsMatrices dyn = dynamics_matrices(model);
  const Matrix sigma = gramian_finite(dyn.a, dyn.b, t).sigma;
  const Matrix flow = expm(t * dyn.a);

  std::vector<GaussianState> components;
  components.reserve(initial.size());
  for (const auto& c : initial.components()) {
    try {
      components.emplace_back(flow * c.mean(), symmetrized(flow * c.cov() * flow.transpose() + sigma), model.ccr());
    } catch (const Error& e) {
      fail(ErrorKind::internal_admissibility_violation, std::string("propagated state rejected: ") + e.what());
    }
  }
  return MixtureMgf(initial.weights(), std::move(components));
}

namespace detail {

/// Precomputed pieces of the norm relation ⫴Ψ_t⫴_λ = e^{-t Tr A/2} ⫴Ψ_0⫴_{Π_{t,λ}}.
struct PropagatedNormContext {
  Matrix sigma;
  Matrix flow;          // e^{tA}
  Matrix inverse_flow;  // e^{-tA}
  double log_jacobian = 0.0;  // -(t/2) Tr A
  double sigma_max = 0.0;

  PropagatedNormContext(const OqhoModel& model, double t) {
    require(t >= 0.0 && std::isfinite(t), ErrorKind::invalid_argument, "time must be nonnegative and finite");
    const DynamicsMatrices dyn = dynamics_matrices(model);
    sigma = gramian_finite(dyn.a, dyn.b, t).sigma;
    const Matrix identity = Matrix::Identity(model.n(), model.n());
    flow = t == 0.0 ? identity : expm(t * dyn.a);
    inverse_flow = t == 0.0 ? identity : expm(-t * dyn.a);
    log_jacobian = -0.5 * t * dyn.a.trace();
    sigma_max = max_eigenvalue(sigma);
  }

  double log_norm(const MixtureMgf& initial, double lambda) const {
    require(lambda > sigma_max, ErrorKind::lambda_too_small,
            "λ = " + std::to_string(lambda) + " must exceed λ_max(Σ_t) = " + std::to_string(sigma_max));
    const Eigen::Index n = sigma.rows();
    const Matrix pi = symmetrized(inverse_flow * (lambda * Matrix::Identity(n, n) - sigma) * inverse_flow.transpose());
    return log_jacobian + log_weighted_norm(initial, WeightMatrix(pi));
  }
};

}  // namespace detail

/// ln ⫴Ψ_t⫴_λ evaluated from the initial MGF with the weight Π_{t,λ} =
/// e^{-tA}(λI - Σ_t)e^{-tA^T}.
inline double log_propagated_norm(const MixtureMgf& initial, const OqhoModel& model, double t, double lambda) {
  detail::require_model_ccr(initial, model);
  return detail::PropagatedNormContext(model, t).log_norm(initial, lambda);
}

inline double propagated_norm(const MixtureMgf& initial, const OqhoModel& model, double t, double lambda) {
  return std::exp(log_propagated_norm(initial, model, t, lambda));
}

/// Time-t QEM bound: the scalar-family bound with the MGF norm expressed
/// through the initial state, minimised over λ ∈ (λ_max(Σ_t), λ*(μ)).
inline OptimizedBound qem_bound_time(const MixtureMgf& initial, const OqhoModel& model, double mu, double t) {
  detail::require_positive_mu(mu);
  detail::require_model_ccr(initial, model);
  const SymplecticBasis basis = symplectic_eigenbasis(model.ccr());
  const detail::PropagatedNormContext ctx(model, t);
  const double upper = lambda_star(basis, mu);
  require(upper > ctx.sigma_max, ErrorKind::empty_interval,
          "λ*(μ) = " + std::to_string(upper) + " does not exceed λ_max(Σ_t) = " + std::to_string(ctx.sigma_max));

  // The norm is finite iff λ exceeds λ_max of every propagated covariance.
  double lower = ctx.sigma_max;
  for (const auto& c : initial.components())
    lower = std::max(lower, max_eigenvalue(ctx.flow * c.cov() * ctx.flow.transpose() + ctx.sigma));
  require(upper > lower, ErrorKind::norm_divergent,
          "λ*(μ) = " + std::to_string(upper) + " does not exceed the propagated covariance bound " +
              std::to_string(lower));

  const Vector modes = inverse_scaled_k_modes(basis, mu);
  const double prefactor = log_bound_prefactor(basis, mu);
  return detail::minimize_over_window(
      [&](double lambda) { return prefactor + ctx.log_norm(initial, lambda) + scalar_gap_log_term(modes, lambda); },
      mu, lower, upper);
}

}  // namespace qembound
