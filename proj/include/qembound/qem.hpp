#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "qembound/ccr_algebra.hpp"
#include "qembound/error.hpp"
#include "qembound/golden_section.hpp"
#include "qembound/linalg.hpp"
#include "qembound/monte_carlo.hpp"
#include "qembound/states.hpp"

namespace qembound {

enum class QemMethod { exact_gaussian, monte_carlo, upper_bound };

/// Quadratic-exponential moment Ξ(μ) = E exp(μ X^T X / 2), stored as its
/// logarithm Υ(μ).
struct QemValue {
  double mu = 0.0;
  double log_xi = 0.0;
  QemMethod method = QemMethod::exact_gaussian;
  /// Monte-Carlo only: relative standard error of Ξ, equivalently the
  /// standard error of log_xi.
  std::optional<double> std_error;

  double xi() const { return std::exp(log_xi); }
};

/// Upper bound on P(Q >= 2ε) on the log scale.
struct TailBound {
  double eps = 0.0;
  double log_prob_bound = 0.0;
  std::optional<double> argmax_mu;
  bool at_boundary = false;

  double prob_bound() const { return std::exp(log_prob_bound); }
};

namespace detail {

inline void require_same_ccr(const MixtureMgf& state, const SymplecticBasis& basis) {
  require_size(state.n(), basis.n(), "state");
  require(max_abs_entry(state.ccr().theta() - basis.ccr().theta()) <= 1e-12, ErrorKind::invalid_argument,
          "state and eigenbasis refer to different CCR matrices");
}

/// λ_max((μK)^{1/2} C (μK)^{1/2}) = μ ρ(C K(μ)).
inline double scaled_spectral_radius(const Matrix& cov, const SymplecticBasis& basis, double mu) {
  const Matrix g = sqrt_scaled_k(basis, mu);
  return max_eigenvalue(g * cov * g);
}

inline double critical_mu_of_cov(const Matrix& cov, const SymplecticBasis& basis) {
  // μK(μ) increases monotonically to 2H(Γ^{-1} ⊗ I_2)H^T.
  const Matrix limit_sqrt = basis.from_mode_values(basis.gamma().cwiseInverse().cwiseSqrt());
  if (max_eigenvalue(limit_sqrt * cov * limit_sqrt) <= 1.0 + 1e-12) return kInf;

  double lo = 0.0;
  double hi = 1.0 / std::max(1e-300, max_eigenvalue(cov));
  for (int i = 0; i < 2000 && scaled_spectral_radius(cov, basis, hi) < 1.0; ++i) {
    lo = hi;
    hi *= 2.0;
  }
  for (int i = 0; i < 400 && hi - lo > 1e-10 * hi; ++i) {
    const double mid = 0.5 * (lo + hi);
    (scaled_spectral_radius(cov, basis, mid) < 1.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

/// ln(1 - tanh x) = ln 2 - 2x - ln(1 + e^{-2x}) for x >= 0, exact where
/// 1 - tanh x would cancel.
inline double log_one_minus_tanh(double x) { return std::log(2.0) - 2.0 * x - std::log1p(std::exp(-2.0 * x)); }

inline double log_gaussian_qem(const GaussianState& state, const SymplecticBasis& basis, double mu) {
  // Work in the orthonormal eigenbasis Q = √2 H, where μK(μ) = diag(t) with
  // t = tanh(μθ)/θ per coordinate pair. Splitting C' = Q^T C Q into its
  // vacuum part diag(θ) and the excess W gives
  //   I - t^{1/2} C' t^{1/2} = E^{1/2} (I - V) E^{1/2},  E = diag(1 - tanh μθ),
  //   V = E^{-1/2} t^{1/2} W t^{1/2} E^{-1/2},
  // which keeps det(I - μCK) accurate when it is exponentially small.
  const Eigen::Index n = basis.n();
  const Matrix q = std::sqrt(2.0) * basis.h();
  const Matrix c = symmetrized(q.transpose() * state.cov() * q);
  const Vector m = q.transpose() * state.mean();

  Vector log_e(n);
  Vector log_t(n);
  Matrix w = c;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double theta = basis.gamma()(i / 2);
    const double x = mu * theta;
    log_e(i) = log_one_minus_tanh(x);
    log_t(i) = std::log(std::tanh(x) / theta);
    w(i, i) -= theta;
  }
  // Scale factor s_i = (t_i / e_i)^{1/2}.
  const Vector log_s = 0.5 * (log_t - log_e);
  Matrix v(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      v(i, j) = w(i, j) == 0.0 ? 0.0 : w(i, j) * std::exp(log_s(i) + log_s(j));
  const Matrix resolvent = Matrix::Identity(n, n) - v;
  require(resolvent.allFinite(), ErrorKind::numerical_overflow, "contraction overflowed at μ = " + std::to_string(mu));
  const Vector eig = symmetric_eigenvalues(resolvent);
  if (eig.minCoeff() <= 0.0) throw RiskParameterTooLarge(mu, critical_mu_of_cov(state.cov(), basis));

  // ln det(cos(μΘ) - μC sinc(μΘ)) = ln det(I - μCK(μ)) + ln det cos(μΘ).
  const double log_det = log_e.sum() + eig.array().log().sum() + log_det_cos(basis, mu);

  Vector y(n);
  for (Eigen::Index i = 0; i < n; ++i) y(i) = m(i) == 0.0 ? 0.0 : m(i) * std::exp(log_s(i));
  const double mean_term = y.dot(resolvent.llt().solve(y));
  return 0.5 * (mean_term - log_det);
}

}  // namespace detail

/// Risk sensitivity μ* at which μ ρ(C K(μ)) reaches 1; infinity if it never
/// does. For a mixture, the smallest component value.
inline double critical_mu(const MixtureMgf& state, const SymplecticBasis& basis) {
  detail::require_same_ccr(state, basis);
  double result = kInf;
  for (const auto& c : state.components()) result = std::min(result, detail::critical_mu_of_cov(c.cov(), basis));
  return result;
}

/// Closed-form Υ(μ) for a Gaussian state. A mixture's QEM is the weighted
/// sum of its components' QEMs, since the QEM is linear in the state.
inline QemValue qem_gaussian_exact(const MixtureMgf& state, const SymplecticBasis& basis, double mu) {
  detail::require_positive_mu(mu);
  detail::require_same_ccr(state, basis);
  std::vector<double> terms;
  terms.reserve(state.size());
  for (std::size_t i = 0; i < state.size(); ++i) {
    terms.push_back(std::log(state.weights()[i]) + detail::log_gaussian_qem(state.components()[i], basis, mu));
  }
  return {mu, scalar::log_sum_exp(terms), QemMethod::exact_gaussian, std::nullopt};
}

/// Monte-Carlo estimate of Ξ(μ) = E Ψ(√μ Z) / √det cos(μΘ), Z ~ N(0, K(μ)).
inline QemValue qem_randomized_mc(const MixtureMgf& state, const SymplecticBasis& basis, double mu,
                                  std::size_t samples, std::uint64_t seed, unsigned threads = 0) {
  detail::require_positive_mu(mu);
  detail::require_same_ccr(state, basis);
  require(samples >= 2, ErrorKind::invalid_argument, "need at least two samples");

  const Eigen::Index n = basis.n();
  const Matrix chol = k_of_mu(basis, mu).llt().matrixL();
  const double sqrt_mu = std::sqrt(mu);

  struct Component {
    double log_weight;
    Vector mean;
    Matrix cov;
  };
  std::vector<Component> comps;
  for (std::size_t i = 0; i < state.size(); ++i)
    comps.push_back({std::log(state.weights()[i]), state.components()[i].mean(), state.components()[i].cov()});

  auto draw = [&](std::mt19937_64& engine, std::normal_distribution<double>& normal) {
    Vector gamma(n);
    for (Eigen::Index i = 0; i < n; ++i) gamma(i) = normal(engine);
    const Vector u = sqrt_mu * (chol * gamma);
    double top = -kInf;
    double terms[16];
    std::vector<double> spill;
    double* out = terms;
    if (comps.size() > 16) {
      spill.resize(comps.size());
      out = spill.data();
    }
    for (std::size_t c = 0; c < comps.size(); ++c) {
      out[c] = comps[c].log_weight + comps[c].mean.dot(u) + 0.5 * u.dot(comps[c].cov * u);
      top = std::max(top, out[c]);
    }
    double sum = 0.0;
    for (std::size_t c = 0; c < comps.size(); ++c) sum += std::exp(out[c] - top);
    return top + std::log(sum);
  };

  const LogMeanEstimate est = estimate_log_mean(samples, seed, threads, draw);
  const double log_xi = est.log_mean - 0.5 * log_det_cos(basis, mu);
  require(std::isfinite(log_xi), ErrorKind::numerical_overflow, "Monte-Carlo QEM is not finite");
  return {mu, log_xi, QemMethod::monte_carlo, est.relative_std_error};
}

/// λ*(μ) = 1 / (μ tanhc(μ θ_min)): the supremum of admissible scalar weights.
inline double lambda_star(const SymplecticBasis& basis, double mu) {
  detail::require_positive_mu(mu);
  return 1.0 / (mu * scalar::tanhc(mu * basis.theta_min()));
}

/// ln of the μ-dependent factor (4π)^{-ν/2} / √det(μ sinc(μΘ)).
inline double log_bound_prefactor(const SymplecticBasis& basis, double mu) {
  return -0.5 * static_cast<double>(basis.nu()) * std::log(4.0 * std::numbers::pi) -
         0.5 * log_det_scaled_sinc(basis, mu);
}

/// Cauchy-Schwarz bound on Υ(μ) for a weight 0 ≺ P ≺ (μK(μ))^{-1}.
inline QemValue qem_upper_bound(const MixtureMgf& state, const SymplecticBasis& basis, double mu,
                                const WeightMatrix& weight) {
  detail::require_positive_mu(mu);
  detail::require_same_ccr(state, basis);
  require_size(weight.n(), basis.n(), "weight matrix");
  const Matrix gap = basis.from_mode_values(inverse_scaled_k_modes(basis, mu)) - weight.matrix();
  const Vector gap_eig = symmetric_eigenvalues(gap);
  require(gap_eig.minCoeff() > 1e-14 * std::max(1.0, gap_eig.cwiseAbs().maxCoeff()),
          ErrorKind::weight_out_of_interval, "weight matrix does not satisfy P < (μK(μ))^{-1}");
  const double log_norm = log_weighted_norm(state, weight);
  const double log_bound =
      log_bound_prefactor(basis, mu) + log_norm - 0.25 * gap_eig.array().log().sum();
  return {mu, log_bound, QemMethod::upper_bound, std::nullopt};
}

/// -ln ⁴√det((μK(μ))^{-1} - λI_n) from the per-mode eigenvalues of (μK(μ))^{-1}.
inline double scalar_gap_log_term(const Vector& inverse_k_modes, double lambda) {
  double log_gap = 0.0;
  for (Eigen::Index k = 0; k < inverse_k_modes.size(); ++k) {
    require(inverse_k_modes(k) > lambda, ErrorKind::weight_out_of_interval, "λ is not below λ*(μ)");
    log_gap += 2.0 * std::log(inverse_k_modes(k) - lambda);
  }
  return -0.25 * log_gap;
}

/// Bound of the scalar family P = λ I_n at a given λ, on the log scale.
inline double scalar_bound_objective(const MixtureMgf& state, const SymplecticBasis& basis, double mu,
                                     double lambda) {
  return log_bound_prefactor(basis, mu) + log_scalar_norm(state, lambda) +
         scalar_gap_log_term(inverse_scaled_k_modes(basis, mu), lambda);
}

struct OptimizedBound {
  QemValue value;
  double lambda = 0.0;
  double window_lo = 0.0;
  double window_hi = 0.0;
  LineSearchResult search;
  /// Minimiser within 1e-6 (relative to the window) of either end.
  bool near_boundary = false;
};

namespace detail {

inline constexpr double kWindowMargin = 1e-9;

template <typename Objective>
OptimizedBound minimize_over_window(Objective&& objective, double mu, double lo, double hi) {
  const double margin = kWindowMargin * (hi - lo);
  OptimizedBound out;
  out.window_lo = lo;
  out.window_hi = hi;
  out.search = golden_section_minimize(objective, lo + margin, hi - margin);
  out.lambda = out.search.x;
  out.value = {mu, out.search.value, QemMethod::upper_bound, std::nullopt};
  const double width = hi - lo;
  out.near_boundary = (out.lambda - lo) < 1e-6 * width || (hi - out.lambda) < 1e-6 * width;
  return out;
}

}  // namespace detail

/// Minimises the scalar-family bound over λ in the window where both the MGF
/// norm and the Gaussian normaliser are finite.
inline OptimizedBound qem_upper_bound_scalar_opt(const MixtureMgf& state, const SymplecticBasis& basis, double mu) {
  detail::require_positive_mu(mu);
  detail::require_same_ccr(state, basis);
  const double lo = state.max_cov_eigenvalue();
  const double hi = lambda_star(basis, mu);
  require(hi > lo, ErrorKind::empty_feasible_window,
          "λ*(μ) = " + std::to_string(hi) + " does not exceed λ_max(C) = " + std::to_string(lo));
  return detail::minimize_over_window(
      [&](double lambda) { return scalar_bound_objective(state, basis, mu, lambda); }, mu, lo, hi);
}

struct EigenbasisBound {
  QemValue value;
  /// Diagonal D of P = 2H(D ⊗ I_2)H^T, one entry per mode.
  Vector mode_weights;
  int sweeps = 0;
};

/// Coordinatewise refinement of the scalar optimum over weights that are
/// diagonal in the symplectic eigenbasis. Never worse than the scalar bound.
inline EigenbasisBound qem_upper_bound_eigenbasis_opt(const MixtureMgf& state, const SymplecticBasis& basis,
                                                      double mu, int max_sweeps = 20) {
  const OptimizedBound start = qem_upper_bound_scalar_opt(state, basis, mu);
  const Vector upper = inverse_scaled_k_modes(basis, mu);
  Vector d = Vector::Constant(basis.nu(), start.lambda);

  auto feasible = [&](const Vector& weights) {
    const Matrix p = basis.from_mode_values(weights);
    for (const auto& c : state.components())
      if (min_eigenvalue(p - c.cov()) <= 1e-14 * std::max(1.0, max_abs_entry(p))) return false;
    return true;
  };
  auto objective = [&](const Vector& weights) {
    try {
      return qem_upper_bound(state, basis, mu, WeightMatrix(basis.from_mode_values(weights))).log_xi;
    } catch (const Error&) {
      return kInf;
    }
  };

  EigenbasisBound out{start.value, d, 0};
  double current = start.value.log_xi;
  for (; out.sweeps < max_sweeps; ++out.sweeps) {
    const double before = current;
    for (Eigen::Index k = 0; k < basis.nu(); ++k) {
      // Feasibility in d_k is an interval (lo_k, ∞) because P grows with d_k.
      double infeasible = 0.0;
      double ok = d(k);
      for (int i = 0; i < 80; ++i) {
        Vector probe = d;
        probe(k) = 0.5 * (infeasible + ok);
        (feasible(probe) ? ok : infeasible) = probe(k);
      }
      const double lo = ok;
      const double hi = upper(k);
      if (!(hi > lo)) continue;
      const double margin = detail::kWindowMargin * (hi - lo);
      auto line = [&](double x) {
        Vector probe = d;
        probe(k) = x;
        return objective(probe);
      };
      const LineSearchResult r = golden_section_minimize(line, lo + margin, hi - margin);
      if (r.value < current) {
        d(k) = r.x;
        current = r.value;
      }
    }
    if (before - current <= 1e-12 * std::max(1.0, std::abs(current))) {
      ++out.sweeps;
      break;
    }
  }
  out.value = {mu, current, QemMethod::upper_bound, std::nullopt};
  out.mode_weights = d;
  return out;
}

/// A CGF Υ (or an upper bound on it) valid on (0, mu_max].
struct Cgf {
  std::function<double(double)> value;
  double mu_max = 0.0;
};

inline constexpr double kExactCgfTruncation = 0.999;
inline constexpr double kDefaultCgfHorizon = 50.0;

/// Exact CGF of a Gaussian mixture, truncated at 0.999 μ* (or 50/θ_min when
/// μ* is infinite).
inline Cgf exact_gaussian_cgf(const MixtureMgf& state, const SymplecticBasis& basis,
                              double truncation = kExactCgfTruncation) {
  const double mu_star = critical_mu(state, basis);
  const double mu_max = std::isfinite(mu_star) ? truncation * mu_star : kDefaultCgfHorizon / basis.theta_min();
  return {[state, basis](double mu) { return qem_gaussian_exact(state, basis, mu).log_xi; }, mu_max};
}

/// Scalar-optimised upper bound as a CGF surrogate. Points with an empty
/// weight window evaluate to +∞ (and therefore never attain the supremum).
inline Cgf upper_bound_cgf(const MixtureMgf& state, const SymplecticBasis& basis, double mu_max = 0.0) {
  if (mu_max <= 0.0) mu_max = kDefaultCgfHorizon / basis.theta_min();
  return {[state, basis](double mu) {
            try {
              return qem_upper_bound_scalar_opt(state, basis, mu).value.log_xi;
            } catch (const Error&) {
              return kInf;
            }
          },
          mu_max};
}

/// ln P(Q >= 2ε) <= -sup_{0<μ<=mu_max} (εμ - Υ(μ)), clamped at 0.
inline TailBound tail_bound(const Cgf& cgf, double eps) {
  require(cgf.value != nullptr, ErrorKind::invalid_range, "CGF callable is empty");
  require(cgf.mu_max > 0.0 && std::isfinite(cgf.mu_max), ErrorKind::invalid_range,
          "CGF validity range must be a finite positive interval");
  require(eps >= 0.0 && std::isfinite(eps), ErrorKind::invalid_range, "ε must be nonnegative");

  auto neg_gain = [&](double mu) {
    const double ups = cgf.value(mu);
    if (!std::isfinite(ups)) return kInf;
    return ups - eps * mu;
  };
  const double lo = cgf.mu_max * 1e-9;
  const LineSearchResult r = scanned_minimize(neg_gain, lo, cgf.mu_max, 128);

  TailBound out;
  out.eps = eps;
  const double sup_gain = -r.value;
  if (!(sup_gain > 0.0)) {
    out.log_prob_bound = 0.0;
    return out;
  }
  out.log_prob_bound = -sup_gain;
  out.argmax_mu = r.x;
  if (cgf.mu_max - r.x <= 1e-6 * cgf.mu_max) {
    out.at_boundary = true;
    out.argmax_mu = cgf.mu_max;
    const double edge = neg_gain(cgf.mu_max);
    if (std::isfinite(edge) && -edge > sup_gain) out.log_prob_bound = edge;
  }
  return out;
}

struct BregmanBound {
  /// Level 2Υ'(μ) of the event Q >= 2Υ'(μ).
  double threshold = 0.0;
  /// Υ(μ) - μΥ'(μ) <= 0.
  double log_prob_bound = 0.0;
};

/// Tail bound at the level where μ attains the Legendre supremum.
inline BregmanBound tail_bound_bregman(const Cgf& cgf, double mu, double derivative_step) {
  require(cgf.value != nullptr, ErrorKind::invalid_range, "CGF callable is empty");
  require(derivative_step > 0.0, ErrorKind::invalid_argument, "derivative step must be positive");
  require(mu - derivative_step > 0.0 && mu + derivative_step <= cgf.mu_max,
          ErrorKind::step_too_large_near_boundary,
          "central difference at μ = " + std::to_string(mu) + " leaves the validity range");
  const double ups = cgf.value(mu);
  const double slope = (cgf.value(mu + derivative_step) - cgf.value(mu - derivative_step)) / (2.0 * derivative_step);
  return {2.0 * slope, std::min(0.0, ups - mu * slope)};
}

}  // namespace qembound
