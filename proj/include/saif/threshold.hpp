#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "saif/box.hpp"
#include "saif/config.hpp"
#include "saif/errors.hpp"
#include "saif/grid.hpp"

namespace saif {

/// Linear interpolation between closest ranks: rank = p/100 * (n-1).
/// Takes its input by value since it partially reorders it.
inline double percentile(std::vector<double> values, double p) {
  if (values.empty()) throw invalid_argument("percentile: empty input");
  if (!(p >= 0.0 && p <= 100.0)) {
    throw invalid_argument("percentile: p must be in [0,100], got " + std::to_string(p));
  }
  const double rank = p / 100.0 * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(rank));
  const double frac = rank - static_cast<double>(lo);
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(lo), values.end());
  const double v_lo = values[lo];
  if (lo + 1 >= values.size() || frac == 0.0) return v_lo;
  const double v_hi =
      *std::min_element(values.begin() + static_cast<std::ptrdiff_t>(lo) + 1, values.end());
  return v_lo + frac * (v_hi - v_lo);
}

enum class threshold_provenance { grid, fallback_median };

inline const char* to_string(threshold_provenance p) noexcept {
  return p == threshold_provenance::grid ? "grid" : "fallback-median";
}

/// Image-adaptive candidate thresholds, ascending.
struct threshold_set {
  std::vector<double> taus;
  threshold_provenance provenance = threshold_provenance::grid;
  double tau_lo = 0.0;
  double tau_hi = 0.0;

  std::size_t size() const noexcept { return taus.size(); }
};

/// Values of `p` at pixels whose centers lie inside `box`.
inline std::vector<double> crop_values(const probability_map& p, const box_prompt& box) {
  const auto r = rasterize(box, p.width(), p.height());
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(r.area()));
  for (int y = r.y0; y < r.y1; ++y) {
    for (int x = r.x0; x < r.x1; ++x) out.push_back(p(x, y));
  }
  return out;
}

/// M evenly spaced thresholds over [lo, hi]; the midpoint when M == 1.
inline std::vector<double> uniform_grid(double lo, double hi, int m) {
  if (m == 1) return {0.5 * (lo + hi)};
  std::vector<double> taus(static_cast<std::size_t>(m));
  for (int j = 0; j < m; ++j) {
    taus[static_cast<std::size_t>(j)] =
        lo + static_cast<double>(j) / static_cast<double>(m - 1) * (hi - lo);
  }
  taus.back() = hi;
  return taus;
}

/// Builds the shared threshold set from the reference map P0 restricted to
/// the clamped original box. The interval is [q10 + margin, q90 - margin]
/// intersected with [tau_min, tau_max]; when it collapses the set is the
/// single clipped median.
inline threshold_set build_threshold_set(const probability_map& p0, const box_prompt& box,
                                         const saif_config& cfg) {
  auto values = crop_values(p0, box);
  if (values.empty()) {
    throw degenerate_family("threshold set: box " + to_string(box) + " covers no pixel centers");
  }
  const double q10 = percentile(values, 10.0);
  const double q90 = percentile(values, 90.0);

  threshold_set out;
  out.tau_lo = std::max(cfg.tau_min, q10 + cfg.margin);
  out.tau_hi = std::min(cfg.tau_max, q90 - cfg.margin);
  if (out.tau_lo < out.tau_hi) {
    out.taus = uniform_grid(out.tau_lo, out.tau_hi, cfg.m);
    out.provenance = threshold_provenance::grid;
  } else {
    const double median = percentile(std::move(values), 50.0);
    out.taus = {std::clamp(median, cfg.tau_min, cfg.tau_max)};
    out.provenance = threshold_provenance::fallback_median;
  }
  return out;
}

}  // namespace saif
