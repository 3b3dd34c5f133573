#pragma once

#include <cmath>
#include <cstdint>
#include <iomanip>
#include <ostream>
#include <span>
#include <vector>

#include "saif/box.hpp"
#include "saif/config.hpp"
#include "saif/errors.hpp"
#include "saif/grid.hpp"
#include "saif/parallel.hpp"
#include "saif/prompt_family.hpp"
#include "saif/threshold.hpp"

namespace saif {

/// Per-pixel fraction of inner masks that mark the pixel as foreground.
using consensus_map = grid<double>;

/// Cached maps aligned with a prompt_family: maps[j][k] belongs to
/// family.outer[j].inner[k].
using family_maps = std::vector<std::vector<probability_map>>;

/// Strict comparison: a pixel equal to tau is background.
inline binary_mask binarize(const probability_map& p, double tau) {
  binary_mask m(p.width(), p.height());
  for (std::size_t i = 0; i < p.size(); ++i) m[i] = static_cast<double>(p[i]) > tau ? 1 : 0;
  return m;
}

inline consensus_map consensus(std::span<const binary_mask> masks) {
  if (masks.empty()) throw invalid_argument("consensus: need at least one mask");
  consensus_map out(masks[0].width(), masks[0].height(), 0.0);
  std::vector<int> counts(out.size(), 0);
  for (const auto& m : masks) {
    require_same_shape(m, masks[0], "consensus");
    for (std::size_t i = 0; i < m.size(); ++i) counts[i] += m[i];
  }
  const double k = static_cast<double>(masks.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = counts[i] / k;
  return out;
}

/// sum(min(m, c)) / (sum(max(m, c)) + eps), with m read as 0.0 / 1.0.
inline double soft_iou(const binary_mask& m, const consensus_map& c, double eps) {
  require_same_shape(m, c, "soft_iou");
  if (!(eps > 0.0)) throw invalid_argument("soft_iou: eps must be > 0");
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i) {
    const double mv = m[i] ? 1.0 : 0.0;
    num += std::min(mv, c[i]);
    den += std::max(mv, c[i]);
  }
  return num / (den + eps);
}

/// One (candidate, threshold) cell of the score table.
struct candidate_score {
  double mu = 0.0;
  double sigma = 0.0;
  double sc = 0.0;
  double occupancy = 0.0;
  double gate = 1.0;
  double score = 0.0;
  std::vector<double> siou;  // per inner jitter, kept for diagnostics
};

/// Mean / population standard deviation of the soft-IoU values, the
/// variance-penalized SC value, and the area-gated score.
inline candidate_score score_candidate(std::span<const double> siou, double occupancy,
                                       const saif_config& cfg) {
  if (siou.empty()) throw invalid_argument("score_candidate: need at least one soft-IoU value");
  candidate_score s;
  s.siou.assign(siou.begin(), siou.end());
  const double k = static_cast<double>(siou.size());
  double sum = 0.0;
  for (double v : siou) sum += v;
  s.mu = sum / k;
  double sq = 0.0;
  for (double v : siou) sq += (v - s.mu) * (v - s.mu);
  s.sigma = std::sqrt(sq / k);
  s.sc = s.mu - cfg.lambda * s.sigma;
  s.occupancy = occupancy;
  s.gate = (cfg.a_min < occupancy && occupancy < cfg.a_max) ? 1.0 : cfg.gamma;
  s.score = s.sc * s.gate;
  return s;
}

/// Scores for every retained candidate at every threshold.
struct score_table {
  std::vector<int> candidates;  // 1-based candidate indices, family order
  std::vector<double> taus;
  std::vector<candidate_score> cells;  // row-major [candidate][tau]

  std::size_t candidate_count() const noexcept { return candidates.size(); }
  std::size_t tau_count() const noexcept { return taus.size(); }

  candidate_score& at(std::size_t cand, std::size_t tau) { return cells[cand * taus.size() + tau]; }
  const candidate_score& at(std::size_t cand, std::size_t tau) const {
    return cells[cand * taus.size() + tau];
  }

  /// Mean score over candidates at each threshold, summed in candidate order.
  std::vector<double> mean_scores() const {
    std::vector<double> out(taus.size(), 0.0);
    for (std::size_t t = 0; t < taus.size(); ++t) {
      double sum = 0.0;
      for (std::size_t c = 0; c < candidates.size(); ++c) sum += at(c, t).score;
      out[t] = sum / static_cast<double>(candidates.size());
    }
    return out;
  }
};

namespace detail {

// Soft-IoU of each inner mask against the consensus, from integer counts.
// With c = cnt/K: sum(min) = S_k / K and sum(max) = (K*|m_k| + C - S_k) / K,
// where S_k sums cnt over the foreground of mask k and C sums cnt overall.
inline candidate_score score_cell(std::span<const probability_map> maps, const box_prompt& box,
                                  double tau, const saif_config& cfg) {
  const auto& first = maps.front();
  const std::size_t npix = first.size();
  const auto kk = maps.size();
  std::vector<std::uint32_t> counts(npix, 0);
  for (const auto& p : maps) {
    require_same_shape(p, first, "score table");
    const float* v = p.values().data();
    for (std::size_t i = 0; i < npix; ++i) counts[i] += static_cast<double>(v[i]) > tau;
  }
  std::uint64_t total = 0;
  for (auto c : counts) total += c;

  const auto rect = rasterize(box, first.width(), first.height());
  const double rect_area = static_cast<double>(rect.area());
  const auto width = static_cast<std::size_t>(first.width());

  std::vector<double> siou(kk);
  double occupancy_sum = 0.0;
  const double k = static_cast<double>(kk);
  for (std::size_t m = 0; m < kk; ++m) {
    const float* v = maps[m].values().data();
    std::uint64_t fg = 0;
    std::uint64_t agree = 0;
    for (std::size_t i = 0; i < npix; ++i) {
      if (static_cast<double>(v[i]) > tau) {
        ++fg;
        agree += counts[i];
      }
    }
    std::uint64_t in_box = 0;
    for (int y = rect.y0; y < rect.y1; ++y) {
      const float* row = v + static_cast<std::size_t>(y) * width;
      for (int x = rect.x0; x < rect.x1; ++x) in_box += static_cast<double>(row[x]) > tau;
    }
    const double num = static_cast<double>(agree) / k;
    const double den = static_cast<double>(kk * fg + total - agree) / k;
    siou[m] = num / (den + cfg.epsilon);
    occupancy_sum += rect_area > 0.0 ? static_cast<double>(in_box) / rect_area : 0.0;
  }
  return score_candidate(siou, occupancy_sum / k, cfg);
}

}  // namespace detail

/// Scores every (candidate, threshold) pair. Occupancy is measured inside the
/// candidate's own clamped box; consensus and soft IoU use the full grid.
/// Cells are independent, so `workers` only changes wall time.
inline score_table build_score_table(const prompt_family& family, const family_maps& maps,
                                     const threshold_set& thresholds, const saif_config& cfg,
                                     int workers = 1) {
  if (family.outer.empty()) throw degenerate_family("score table: no valid outer candidates");
  if (maps.size() != family.outer.size()) {
    throw input_incomplete("score table: expected maps for " +
                           std::to_string(family.outer.size()) + " candidates, got " +
                           std::to_string(maps.size()));
  }
  score_table table;
  table.taus = thresholds.taus;
  for (std::size_t j = 0; j < family.outer.size(); ++j) {
    if (maps[j].size() != family.outer[j].inner.size() || maps[j].empty()) {
      throw input_incomplete("score table: candidate " + std::to_string(family.outer[j].index) +
                             " has " + std::to_string(maps[j].size()) + " maps, expected " +
                             std::to_string(family.outer[j].inner.size()));
    }
    table.candidates.push_back(family.outer[j].index);
  }
  table.cells.resize(table.candidates.size() * table.taus.size());
  const std::size_t ntau = table.taus.size();
  parallel_for(table.cells.size(), workers, [&](std::size_t cell) {
    const std::size_t j = cell / ntau;
    const std::size_t t = cell % ntau;
    table.cells[cell] = detail::score_cell(maps[j], family.outer[j].box, table.taus[t], cfg);
  });
  return table;
}

struct threshold_choice {
  std::size_t index = 0;
  double tau = 0.0;
  double mean_score = 0.0;
};

/// Threshold maximizing the mean candidate score; exact ties go to the
/// smaller threshold.
inline threshold_choice select_threshold(const score_table& table) {
  if (table.candidates.empty()) throw degenerate_family("select_threshold: no valid candidates");
  if (table.taus.empty()) throw invalid_argument("select_threshold: empty threshold set");
  const auto means = table.mean_scores();
  threshold_choice best{0, table.taus[0], means[0]};
  for (std::size_t t = 1; t < means.size(); ++t) {
    const bool better = means[t] > best.mean_score ||
                        (means[t] == best.mean_score && table.taus[t] < best.tau);
    if (better) best = {t, table.taus[t], means[t]};
  }
  return best;
}

/// Tab-separated diagnostic dump: one row per (candidate, threshold).
inline void write_score_report(std::ostream& os, const score_table& table) {
  const auto flags = os.flags();
  const auto prec = os.precision();
  os << "i\ttau\tmu\tsigma\tsc\ta\tr\tscore\n";
  os << std::setprecision(17);
  for (std::size_t c = 0; c < table.candidates.size(); ++c) {
    for (std::size_t t = 0; t < table.taus.size(); ++t) {
      const auto& s = table.at(c, t);
      os << table.candidates[c] << '\t' << table.taus[t] << '\t' << s.mu << '\t' << s.sigma
         << '\t' << s.sc << '\t' << s.occupancy << '\t' << s.gate << '\t' << s.score << '\n';
    }
  }
  os.flags(flags);
  os.precision(prec);
}

}  // namespace saif
