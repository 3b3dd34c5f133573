#pragma once

#include <algorithm>
#include <numeric>
#include <span>
#include <vector>

#include "saif/errors.hpp"
#include "saif/grid.hpp"
#include "saif/stability.hpp"

namespace saif {

struct fusion_result {
  std::vector<int> selected;  // 1-based candidate indices, best first
  std::vector<double> weights;
  probability_map fused;
  binary_mask final_mask;
  double tau_star = 0.5;
  bool fallback_used = false;
};

/// Rows of `table` with the n highest scores at threshold column `tau_index`,
/// best first. Exact ties keep the smaller candidate index first.
inline std::vector<std::size_t> select_top_n(const score_table& table, std::size_t tau_index,
                                             int n) {
  if (table.candidates.empty()) throw degenerate_family("select_top_n: no valid candidates");
  if (n < 1) throw invalid_argument("select_top_n: n must be >= 1");
  if (tau_index >= table.tau_count()) throw invalid_argument("select_top_n: bad threshold index");
  std::vector<std::size_t> rows(table.candidate_count());
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  std::stable_sort(rows.begin(), rows.end(), [&](std::size_t a, std::size_t b) {
    const double sa = table.at(a, tau_index).score;
    const double sb = table.at(b, tau_index).score;
    if (sa != sb) return sa > sb;
    return table.candidates[a] < table.candidates[b];
  });
  rows.resize(std::min(rows.size(), static_cast<std::size_t>(n)));
  return rows;
}

/// Per-pixel arithmetic mean, accumulated in double in input order.
inline probability_map inner_average(std::span<const probability_map> maps) {
  if (maps.empty()) throw invalid_argument("inner_average: need at least one map");
  const auto& first = maps.front();
  std::vector<double> acc(first.size(), 0.0);
  for (const auto& p : maps) {
    require_same_shape(p, first, "inner_average");
    for (std::size_t i = 0; i < p.size(); ++i) acc[i] += static_cast<double>(p[i]);
  }
  probability_map out(first.width(), first.height());
  const double k = static_cast<double>(maps.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = static_cast<float>(acc[i] / k);
  return out;
}

/// Score-normalized weights. Falls back to uniform weights (and reports it)
/// when the scores do not form a convex combination: a non-positive sum or
/// any negative member.
inline std::vector<double> fusion_weights(std::span<const double> scores, bool& fallback) {
  if (scores.empty()) throw invalid_argument("fusion_weights: empty selection");
  double sum = 0.0;
  bool negative = false;
  for (double s : scores) {
    sum += s;
    negative = negative || s < 0.0;
  }
  std::vector<double> w(scores.size());
  fallback = !(sum > 0.0) || negative;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    w[i] = fallback ? 1.0 / static_cast<double>(scores.size()) : scores[i] / sum;
  }
  return w;
}

/// Weighted combination of the selected candidates' averaged maps, binarized
/// at tau_star. The fused map is stored as float and the mask is derived from
/// the stored values, so final_mask == binarize(fused, tau_star) exactly.
inline fusion_result fuse(std::span<const int> selected, std::span<const double> scores,
                          std::span<const probability_map> averaged, double tau_star) {
  if (selected.empty()) throw invalid_argument("fuse: empty selection");
  if (scores.size() != selected.size() || averaged.size() != selected.size()) {
    throw invalid_argument("fuse: selection, scores and maps must have equal length");
  }
  fusion_result r;
  r.selected.assign(selected.begin(), selected.end());
  r.tau_star = tau_star;
  r.weights = fusion_weights(scores, r.fallback_used);

  const auto& first = averaged.front();
  std::vector<double> acc(first.size(), 0.0);
  for (std::size_t s = 0; s < averaged.size(); ++s) {
    require_same_shape(averaged[s], first, "fuse");
    const double w = r.weights[s];
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += w * static_cast<double>(averaged[s][i]);
  }
  r.fused = probability_map(first.width(), first.height());
  for (std::size_t i = 0; i < acc.size(); ++i) {
    r.fused[i] = std::clamp(static_cast<float>(acc[i]), 0.0f, 1.0f);
  }
  r.final_mask = binarize(r.fused, tau_star);
  return r;
}

}  // namespace saif
