#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "saif/box.hpp"
#include "saif/config.hpp"
#include "saif/errors.hpp"
#include "saif/fusion.hpp"
#include "saif/parallel.hpp"
#include "saif/prompt_family.hpp"
#include "saif/segmenter.hpp"
#include "saif/stability.hpp"
#include "saif/threshold.hpp"

namespace saif {

/// Ablation ladder: each mode adds one component to the previous one.
enum class run_mode {
  vanilla,          // I: original box, fixed threshold 0.5
  candidates_only,  // II: prompt family, uniform average of all candidates, threshold 0.5
  candidates_sc,    // III: adds stability scoring and the shared threshold, keeps the best candidate
  full,             // IV: adds top-n score-weighted fusion
};

inline const char* to_string(run_mode m) noexcept {
  switch (m) {
    case run_mode::vanilla: return "vanilla";
    case run_mode::candidates_only: return "candidates-only";
    case run_mode::candidates_sc: return "candidates+sc";
    case run_mode::full: return "full-saif";
  }
  return "?";
}

inline run_mode parse_run_mode(std::string_view s) {
  if (s == "vanilla" || s == "I" || s == "1") return run_mode::vanilla;
  if (s == "candidates-only" || s == "II" || s == "2") return run_mode::candidates_only;
  if (s == "candidates+sc" || s == "III" || s == "3") return run_mode::candidates_sc;
  if (s == "full-saif" || s == "full" || s == "IV" || s == "4") return run_mode::full;
  throw invalid_argument("unknown mode '" + std::string(s) + "'");
}

inline constexpr double vanilla_threshold = 0.5;

struct saif_outcome {
  fusion_result result;
  std::optional<threshold_set> thresholds;
  std::optional<score_table> scores;
  std::size_t family_boxes = 0;
  bool degenerate_family = false;
};

/// Scores and fuses a family from its cached maps, keeping the top `top_n`
/// candidates. The reference map P0 is maps[0][0], which requires the
/// identity candidate to have survived.
inline saif_outcome score_and_fuse(const prompt_family& family, const family_maps& maps,
                                   const saif_config& cfg, int top_n, int workers = 1) {
  if (family.outer.empty() || family.outer.front().index != 1) {
    throw degenerate_family("identity candidate missing from family");
  }
  if (maps.empty() || maps.front().empty()) throw input_incomplete("reference map P0 missing");

  saif_outcome out;
  out.family_boxes = family.box_count();
  out.thresholds = build_threshold_set(maps.front().front(), family.original, cfg);
  out.scores = build_score_table(family, maps, *out.thresholds, cfg, workers);
  const auto choice = select_threshold(*out.scores);
  const auto rows = select_top_n(*out.scores, choice.index, top_n);

  std::vector<int> ids;
  std::vector<double> scores;
  std::vector<probability_map> averaged;
  for (auto row : rows) {
    ids.push_back(out.scores->candidates[row]);
    scores.push_back(out.scores->at(row, choice.index).score);
    averaged.push_back(inner_average(maps[row]));
  }
  out.result = fuse(ids, scores, averaged, choice.tau);
  return out;
}

/// Clipped box for the single-prompt baseline. No minimum-size rule applies.
inline std::optional<box_prompt> vanilla_box(const box_prompt& box, int width, int height) {
  const auto clipped = clamp_and_validate(box, width, height, 0);
  if (clipped && clipped->well_formed()) return clipped;
  return std::nullopt;
}

/// Single forward pass on the original box, thresholded at 0.5.
inline fusion_result run_vanilla(const segmenter& seg, const box_prompt& box) {
  fusion_result r;
  r.tau_star = vanilla_threshold;
  r.selected = {1};
  r.weights = {1.0};
  if (auto b = vanilla_box(box, seg.width(), seg.height())) {
    r.fused = seg.predict(*b);
  } else {
    r.fused = probability_map(seg.width(), seg.height(), 0.0f);
  }
  r.final_mask = binarize(r.fused, r.tau_star);
  return r;
}

/// Queries the segmenter once per family box, in family order.
inline family_maps predict_family(const segmenter& seg, const prompt_family& family,
                                  int workers = 1) {
  family_maps maps(family.outer.size());
  std::vector<std::pair<std::size_t, std::size_t>> jobs;
  for (std::size_t j = 0; j < family.outer.size(); ++j) {
    maps[j].resize(family.outer[j].inner.size());
    for (std::size_t k = 0; k < family.outer[j].inner.size(); ++k) jobs.emplace_back(j, k);
  }
  parallel_for(jobs.size(), workers, [&](std::size_t n) {
    const auto [j, k] = jobs[n];
    maps[j][k] = seg.predict(family.outer[j].inner[k]);
  });
  return maps;
}

/// End-to-end inference for one image in the requested mode. A degenerate
/// family falls back to the vanilla result with fallback_used set.
inline saif_outcome run_saif(const segmenter& seg, const box_prompt& box, const saif_config& cfg,
                             run_mode mode = run_mode::full, std::uint64_t image_key = 0,
                             int workers = 1) {
  cfg.validate();
  saif_outcome out;
  if (mode == run_mode::vanilla) {
    out.result = run_vanilla(seg, box);
    out.family_boxes = 1;
    return out;
  }

  prompt_family family;
  try {
    family = build_family(box, cfg, seg.width(), seg.height(), image_key);
  } catch (const degenerate_family&) {
    out.result = run_vanilla(seg, box);
    out.result.fallback_used = true;
    out.degenerate_family = true;
    return out;
  }
  const auto maps = predict_family(seg, family, workers);

  if (mode == run_mode::candidates_only) {
    std::vector<int> ids;
    std::vector<probability_map> averaged;
    for (std::size_t j = 0; j < family.outer.size(); ++j) {
      ids.push_back(family.outer[j].index);
      averaged.push_back(inner_average(maps[j]));
    }
    const std::vector<double> equal(ids.size(), 1.0);
    out.result = fuse(ids, equal, averaged, vanilla_threshold);
    out.family_boxes = family.box_count();
    return out;
  }

  const int top_n = mode == run_mode::candidates_sc ? 1 : cfg.top_n;
  return score_and_fuse(family, maps, cfg, top_n, workers);
}

}  // namespace saif
