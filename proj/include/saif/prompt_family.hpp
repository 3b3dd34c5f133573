#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "saif/box.hpp"
#include "saif/config.hpp"
#include "saif/errors.hpp"
#include "saif/rng.hpp"

namespace saif {

/// One coarse hypothesis B_i and its inner jitters; inner[0] is B_i itself.
struct outer_candidate {
  int index = 0;  // 1-based position in the unfiltered family
  double alpha = 1.0;
  box_prompt box;
  std::vector<box_prompt> inner;

  friend bool operator==(const outer_candidate&, const outer_candidate&) = default;
};

/// Two-level coarse-to-fine family of box prompts. Only valid, clamped boxes
/// are stored; rejected outer candidates are dropped with their inner lists.
struct prompt_family {
  box_prompt original;  // clamped user box
  std::vector<outer_candidate> outer;

  std::size_t box_count() const noexcept {
    std::size_t n = 0;
    for (const auto& c : outer) n += c.inner.size();
    return n;
  }

  friend bool operator==(const prompt_family&, const prompt_family&) = default;
};

/// Scale assigned to candidate i (1-based). Candidate 1 is the identity;
/// the rest cycle through cfg.scales in order.
inline double candidate_scale(const saif_config& cfg, int index) {
  if (index == 1) return 1.0;
  return cfg.scales[static_cast<std::size_t>(index - 2) % cfg.scales.size()];
}

/// Builds the family around `box` for a W x H image. `image_key` selects the
/// random streams, so families for different images are independent.
///
/// Candidate 1 is the clamped box without outer jitter, which makes P0 = P_{1,1}
/// and keeps the forward-pass count at most N*K. Throws degenerate_family when
/// the clamped input box itself is rejected.
inline prompt_family build_family(const box_prompt& box, const saif_config& cfg, int width,
                                  int height, std::uint64_t image_key = 0) {
  cfg.validate();
  const auto base = clamp_and_validate(box, width, height, cfg.min_box_px);
  if (!base) {
    throw degenerate_family("input box " + to_string(box) + " is invalid after clamping");
  }

  prompt_family family;
  family.original = *base;
  family.outer.reserve(static_cast<std::size_t>(cfg.n));

  for (int i = 1; i <= cfg.n; ++i) {
    const double alpha = candidate_scale(cfg, i);
    box_prompt outer_box = *base;
    if (i > 1) {
      random_stream rng(cfg.seed, image_key, static_cast<std::uint64_t>(i), stream_level::outer);
      const auto clamped =
          clamp_and_validate(jitter_box(scale_box(*base, alpha), cfg.delta_out, rng), width,
                             height, cfg.min_box_px);
      if (!clamped) continue;
      outer_box = *clamped;
    }

    outer_candidate cand{i, alpha, outer_box, {outer_box}};
    cand.inner.reserve(static_cast<std::size_t>(cfg.k));
    random_stream rng(cfg.seed, image_key, static_cast<std::uint64_t>(i), stream_level::inner);
    for (int k = 2; k <= cfg.k; ++k) {
      if (auto b = clamp_and_validate(jitter_box(outer_box, cfg.delta_in, rng), width, height,
                                      cfg.min_box_px)) {
        cand.inner.push_back(*b);
      }
    }
    family.outer.push_back(std::move(cand));
  }
  return family;
}

}  // namespace saif
