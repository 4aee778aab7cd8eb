#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

#include "qembound/classical_oracle.hpp"
#include "qembound/qem.hpp"

namespace qembound::cli {

struct VerifyOptions {
  bool quick = false;
  std::uint64_t seed = 42;
  std::uint64_t samples = 100000;
};

struct VerifyCheck {
  std::string name;
  bool pass = false;
  std::string detail;
};

namespace detail {

inline std::string fmt(const char* format, double a, double b = 0.0, double c = 0.0) {
  char buffer[160];
  std::snprintf(buffer, sizeof buffer, format, a, b, c);
  return buffer;
}

inline Matrix diag2(double a, double b) {
  Matrix m = Matrix::Zero(2, 2);
  m(0, 0) = a;
  m(1, 1) = b;
  return m;
}

}  // namespace detail

/// Classical-limit cross-checks of the QEM machinery: closed forms against
/// Monte Carlo, the randomised MGF identity, the divergence diagnostic,
/// Chernoff dominance and the Θ → 0 limit of the quantum closed form.
inline std::vector<VerifyCheck> verify_suite(const VerifyOptions& options) {
  using detail::fmt;
  const std::size_t samples = options.quick ? std::max<std::size_t>(options.samples / 5, 1000) : options.samples;
  const std::size_t tail_samples = 10 * samples;
  const std::uint64_t seed = options.seed;
  std::vector<VerifyCheck> checks;

  const ClassicalGaussian standard1(Vector::Zero(1), Matrix::Identity(1, 1));
  const ClassicalGaussian standard2(Vector::Zero(2), Matrix::Identity(2, 2));

  {
    const double value = classical_gaussian_qem(standard1, 0.5);
    const double target = 0.5 * std::log(2.0);
    checks.push_back({"chi_square_closed_form", std::abs(value - target) <= 1e-12,
                      fmt("%.12f vs -ln(0.5)/2 = %.12f", value, target)});
  }
  {
    const LogMeanEstimate est = classical_qem_mc(standard2, 0.3, samples, substream_seed(seed, 0));
    const double target = classical_gaussian_qem(standard2, 0.3);
    checks.push_back({"monte_carlo_vs_closed_form", std::abs(est.log_mean - target) <= 3.0 * est.relative_std_error,
                      fmt("%.6f vs %.6f (se %.2g)", est.log_mean, target, est.relative_std_error)});
  }

  Vector shifted_mean(2);
  shifted_mean << 1.0, 1.0;
  const struct {
    const char* name;
    ClassicalGaussian g;
    double mu;
  } identity_cases[] = {
      {"mgf_identity_standard", standard2, 0.3},
      {"mgf_identity_shifted", ClassicalGaussian(shifted_mean, detail::diag2(1.0, 0.5)), 0.4},
      {"mgf_identity_zero_mu", standard2, 0.0},
  };
  std::uint64_t stream = 1;
  for (const auto& c : identity_cases) {
    const IdentityCheck check = mmm_identity_check(c.g, c.mu, samples, substream_seed(seed, stream++));
    checks.push_back({c.name, check.pass,
                      fmt("lhs %.6f rhs %.6f (se %.2g)", check.lhs.log_mean, check.rhs.log_mean, check.combined_se)});
  }

  {
    int flagged = 0;
    for (std::uint64_t s = 0; s < 10; ++s) {
      try {
        classical_qem_mc(standard1, 1.5, samples, substream_seed(seed, 100 + s));
      } catch (const Error& e) {
        if (e.kind() == ErrorKind::suspected_divergence) ++flagged;
      }
    }
    checks.push_back({"divergence_detected_above_threshold", flagged >= 9,
                      fmt("flagged in %.0f of 10 seeds at mu = 1.5", flagged)});
  }

  const Cgf cgf = classical_cgf(standard1);
  for (double eps : {0.5, 1.0, 2.0, 4.0}) {
    const EmpiricalTail tail = empirical_tail(standard1, eps, tail_samples, substream_seed(seed, stream++));
    const double bound = tail_bound(cgf, eps).prob_bound();
    checks.push_back({"chernoff_dominance_eps_" + fmt("%g", eps), tail.probability <= bound + 3.0 * tail.std_error,
                      fmt("empirical %.5f <= bound %.5f (se %.2g)", tail.probability, bound, tail.std_error)});
  }
  {
    const double bound = tail_bound(cgf, 2.0).prob_bound();
    checks.push_back({"chernoff_golden_value", std::abs(bound - 0.44626032029685966) <= 1e-4,
                      fmt("bound %.8f vs exp(-0.806853) = 0.44626032", bound)});
  }

  {
    Matrix c(2, 2);
    c << 1.2, 0.3, 0.3, 0.8;
    Vector m(2);
    m << 0.4, -0.7;
    const double mu = 0.5;
    const double classical = classical_gaussian_qem(ClassicalGaussian(m, c), mu);
    double errors[3];
    const double etas[3] = {1e-1, 1e-2, 1e-3};
    for (int i = 0; i < 3; ++i) {
      const SymplecticBasis basis = symplectic_eigenbasis(CcrMatrix::from_eigenfrequencies({etas[i]}));
      errors[i] = std::abs(qem_gaussian_exact(GaussianState(m, c, basis.ccr()), basis, mu).log_xi - classical);
    }
    const double r1 = errors[0] / errors[1];
    const double r2 = errors[1] / errors[2];
    checks.push_back({"classical_limit_quadratic", r1 >= 80.0 && r1 <= 120.0 && r2 >= 80.0 && r2 <= 120.0,
                      fmt("error ratios per decade %.2f, %.2f", r1, r2)});
  }
  return checks;
}

inline bool all_passed(const std::vector<VerifyCheck>& checks) {
  for (const auto& c : checks)
    if (!c.pass) return false;
  return true;
}

inline void print_checks(std::ostream& out, const std::vector<VerifyCheck>& checks) {
  std::size_t passed = 0;
  for (const auto& c : checks) {
    out << (c.pass ? "PASS " : "FAIL ") << c.name << ": " << c.detail << '\n';
    if (c.pass) ++passed;
  }
  out << passed << "/" << checks.size() << " checks passed\n";
}

}  // namespace qembound::cli
