#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>

namespace qembound {

struct LineSearchResult {
  double x = 0.0;
  double value = 0.0;
  int iterations = 0;
  double bracket_width = 0.0;
  bool converged = false;
};

struct GoldenSectionOptions {
  double relative_tolerance = 1e-10;
  int max_iterations = 200;
};

/// Golden-section minimisation of a unimodal f on [lo, hi]. Terminates when
/// the bracket is narrower than relative_tolerance·max(1, |lo| + |hi|).
template <typename F>
LineSearchResult golden_section_minimize(F&& f, double lo, double hi, const GoldenSectionOptions& options = {}) {
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = std::min(lo, hi);
  double b = std::max(lo, hi);
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c);
  double fd = f(d);

  LineSearchResult result;
  for (; result.iterations < options.max_iterations; ++result.iterations) {
    if (b - a <= options.relative_tolerance * std::max(1.0, std::abs(a) + std::abs(b))) {
      result.converged = true;
      break;
    }
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
  }
  if (fc < fd) {
    result.x = c;
    result.value = fc;
  } else {
    result.x = d;
    result.value = fd;
  }
  result.bracket_width = b - a;
  if (!result.converged)
    result.converged = b - a <= options.relative_tolerance * std::max(1.0, std::abs(a) + std::abs(b));
  return result;
}

/// Grid scan followed by golden-section refinement around the best grid
/// point. Guards against non-unimodal objectives; for unimodal ones it
/// returns the same minimiser as plain golden section.
template <typename F>
LineSearchResult scanned_minimize(F&& f, double lo, double hi, std::size_t grid_points = 64,
                                  const GoldenSectionOptions& options = {}) {
  grid_points = std::max<std::size_t>(grid_points, 3);
  const double step = (hi - lo) / static_cast<double>(grid_points - 1);
  std::size_t best = 0;
  double best_value = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < grid_points; ++i) {
    const double x = i + 1 == grid_points ? hi : lo + step * static_cast<double>(i);
    const double v = f(x);
    if (v < best_value) {
      best_value = v;
      best = i;
    }
  }
  const double a = best == 0 ? lo : lo + step * static_cast<double>(best - 1);
  const double b = best + 1 >= grid_points ? hi : lo + step * static_cast<double>(best + 1);
  LineSearchResult refined = golden_section_minimize(f, a, b, options);
  const double grid_x = best + 1 == grid_points ? hi : lo + step * static_cast<double>(best);
  if (best_value < refined.value) {
    refined.x = grid_x;
    refined.value = best_value;
  }
  return refined;
}

}  // namespace qembound
