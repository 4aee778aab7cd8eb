#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "qembound/cli/config.hpp"
#include "qembound/cli/report.hpp"
#include "qembound/monte_carlo.hpp"
#include "qembound/oqho.hpp"
#include "qembound/qem.hpp"

namespace qembound::cli {

enum ExitCode : int { kExitOk = 0, kExitError = 1, kExitInfeasible = 2 };

inline int exit_code(const BoundReport& report) { return report.all_ok() ? kExitOk : kExitInfeasible; }

namespace detail {

struct GridPoint {
  std::optional<double> t;
  double value = 0.0;  // μ, or ε for tail scenarios
};

struct RowContext {
  const ScenarioConfig& config;
  const SymplecticBasis& basis;
  std::uint64_t seed;
  unsigned mc_threads;
};

inline std::optional<double> exact_or_none(const MixtureMgf& state, const SymplecticBasis& basis, double mu) {
  try {
    return qem_gaussian_exact(state, basis, mu).log_xi;
  } catch (const RiskParameterTooLarge&) {
    return std::nullopt;
  }
}

inline void fill_mc(ReportRow& row, const MixtureMgf& state, const RowContext& ctx, double mu) {
  const QemValue mc = qem_randomized_mc(state, ctx.basis, mu, ctx.config.samples, ctx.seed, ctx.mc_threads);
  row.upsilon_mc = mc.log_xi;
  row.mc_se = mc.std_error;
}

inline ReportRow fixed_time_row(const RowContext& ctx, double mu) {
  const MixtureMgf& state = *ctx.config.state;
  ReportRow row;
  row.mu = mu;
  row.upsilon_exact = exact_or_none(state, ctx.basis, mu);
  if (!row.upsilon_exact) row.status = RowStatus::infeasible_mu;

  switch (ctx.config.kind) {
    case ScenarioKind::randomized_mc:
      // Beyond μ* the expectation is infinite; sampling it is meaningless.
      if (row.upsilon_exact) fill_mc(row, state, ctx, mu);
      break;
    case ScenarioKind::upper_bound:
      try {
        const OptimizedBound b = qem_upper_bound_scalar_opt(state, ctx.basis, mu);
        row.upsilon_bound = b.value.log_xi;
        row.lambda_opt = b.lambda;
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::empty_feasible_window) throw;
        if (row.status == RowStatus::ok) row.status = RowStatus::divergent_norm;
      }
      break;
    default: break;
  }
  return row;
}

inline ReportRow tail_row(const RowContext& ctx, const Cgf& cgf, double eps) {
  const TailBound tb = tail_bound(cgf, eps);
  ReportRow row;
  row.tail_eps = eps;
  row.tail_log_bound = tb.log_prob_bound;
  if (tb.argmax_mu) {
    row.mu = *tb.argmax_mu;
    const double ups = cgf.value(*tb.argmax_mu);
    if (ctx.config.cgf == CgfSource::exact) row.upsilon_exact = ups;
    else row.upsilon_bound = ups;
  }
  return row;
}

inline ReportRow sweep_row(const RowContext& ctx, double t, double mu) {
  const MixtureMgf& initial = *ctx.config.state;
  const OqhoModel& model = *ctx.config.model;
  ReportRow row;
  row.t = t;
  row.mu = mu;
  const MixtureMgf later = propagate_mgf(initial, model, t);
  row.upsilon_exact = exact_or_none(later, ctx.basis, mu);

  std::optional<RowStatus> bound_status;
  try {
    const OptimizedBound b = qem_bound_time(initial, model, mu, t);
    row.upsilon_bound = b.value.log_xi;
    row.lambda_opt = b.lambda;
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::empty_interval) bound_status = RowStatus::empty_interval;
    else if (e.kind() == ErrorKind::norm_divergent) bound_status = RowStatus::divergent_norm;
    else throw;
  }
  // Status follows the pipeline order: Δ_t window, finiteness of the
  // moment, then finiteness of the MGF norm.
  if (bound_status == RowStatus::empty_interval) row.status = RowStatus::empty_interval;
  else if (!row.upsilon_exact) row.status = RowStatus::infeasible_mu;
  else if (bound_status) row.status = *bound_status;

  if (row.upsilon_exact) fill_mc(row, later, ctx, mu);
  return row;
}

}  // namespace detail

/// Evaluates every grid point of a scenario. Points are dispatched to a pool
/// capped by QEMBOUND_THREADS; row i draws its Monte-Carlo samples from
/// substream i of the seed, so the report does not depend on the pool size.
inline BoundReport run_scenario(const ScenarioConfig& config) {
  require(config.kind != ScenarioKind::verify, ErrorKind::invalid_argument,
          "verify scenarios produce a check listing, not a bound report");
  require(config.state.has_value() && config.ccr.has_value(), ErrorKind::invalid_argument, "scenario has no state");
  const SymplecticBasis basis = symplectic_eigenbasis(*config.ccr);

  std::vector<detail::GridPoint> points;
  if (config.kind == ScenarioKind::tail) {
    for (double eps : config.eps_grid) points.push_back({std::nullopt, eps});
  } else if (config.kind == ScenarioKind::oqho_sweep) {
    require(config.model.has_value(), ErrorKind::invalid_argument, "oqho_sweep needs a model");
    for (double t : config.t_grid)
      for (double mu : config.mu_grid) points.push_back({t, mu});
  } else {
    for (double mu : config.mu_grid) points.push_back({std::nullopt, mu});
  }

  std::optional<Cgf> cgf;
  if (config.kind == ScenarioKind::tail)
    cgf = config.cgf == CgfSource::exact ? exact_gaussian_cgf(*config.state, basis)
                                         : upper_bound_cgf(*config.state, basis);

  const unsigned threads = resolve_thread_count();
  // With several rows the pool works across rows; a single row samples in parallel instead.
  const unsigned mc_threads = points.size() > 1 ? 1u : threads;
  BoundReport report;
  report.rows.resize(points.size());
  parallel_for(points.size(), threads, [&](std::size_t i) {
    const detail::RowContext ctx{config, basis, substream_seed(config.seed, i), mc_threads};
    const auto& p = points[i];
    switch (config.kind) {
      case ScenarioKind::tail: report.rows[i] = detail::tail_row(ctx, *cgf, p.value); break;
      case ScenarioKind::oqho_sweep: report.rows[i] = detail::sweep_row(ctx, *p.t, p.value); break;
      default: report.rows[i] = detail::fixed_time_row(ctx, p.value); break;
    }
  });
  return report;
}

}  // namespace qembound::cli
