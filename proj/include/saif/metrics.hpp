#pragma once

#include <cmath>
#include <cstddef>
#include <iomanip>
#include <ostream>
#include <string>
#include <vector>

#include "saif/edt.hpp"
#include "saif/errors.hpp"
#include "saif/grid.hpp"
#include "saif/threshold.hpp"

namespace saif {

struct overlap_counts {
  std::size_t a = 0;
  std::size_t b = 0;
  std::size_t both = 0;
};

inline overlap_counts count_overlap(const binary_mask& a, const binary_mask& b) {
  require_same_shape(a, b, "overlap");
  overlap_counts c;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const bool x = a[i] != 0;
    const bool y = b[i] != 0;
    c.a += x;
    c.b += y;
    c.both += (x && y);
  }
  return c;
}

/// 2|a∩b| / (|a|+|b|); 1.0 when both masks are empty.
inline double dice(const binary_mask& a, const binary_mask& b) {
  const auto c = count_overlap(a, b);
  if (c.a + c.b == 0) return 1.0;
  return 2.0 * static_cast<double>(c.both) / static_cast<double>(c.a + c.b);
}

/// |a∩b| / |a∪b|; 1.0 when both masks are empty.
inline double iou(const binary_mask& a, const binary_mask& b) {
  const auto c = count_overlap(a, b);
  const std::size_t uni = c.a + c.b - c.both;
  if (uni == 0) return 1.0;
  return static_cast<double>(c.both) / static_cast<double>(uni);
}

struct pixel_spacing {
  double x = 1.0;  // mm per pixel along x
  double y = 1.0;
};

/// Foreground pixels with at least one background 4-neighbor; pixels outside
/// the image count as background.
inline binary_mask boundary(const binary_mask& m) {
  binary_mask out(m.width(), m.height(), 0);
  const int w = m.width();
  const int h = m.height();
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!m(x, y)) continue;
      const bool edge = x == 0 || y == 0 || x == w - 1 || y == h - 1 || !m(x - 1, y) ||
                        !m(x + 1, y) || !m(x, y - 1) || !m(x, y + 1);
      out(x, y) = edge ? 1 : 0;
    }
  }
  return out;
}

enum class hd95_convention { none, both_empty, one_empty };

struct hd95_result {
  double value = 0.0;
  hd95_convention convention = hd95_convention::none;
};

/// Distances from each boundary pixel of `from` to the nearest boundary pixel
/// of `to`, appended to `out`.
inline void directed_boundary_distances(const binary_mask& from, const binary_mask& to,
                                        pixel_spacing sp, std::vector<double>& out) {
  const auto target = squared_distance_transform(boundary(to), sp.x, sp.y);
  const auto source = boundary(from);
  for (std::size_t i = 0; i < source.size(); ++i) {
    if (source[i]) out.push_back(std::sqrt(target[i]));
  }
}

/// 95th percentile of the pooled symmetric boundary-to-boundary distances.
/// Both empty: 0. Exactly one empty: the image diagonal in physical units.
inline hd95_result hd95_detailed(const binary_mask& a, const binary_mask& b,
                                 pixel_spacing sp = {}) {
  require_same_shape(a, b, "hd95");
  if (!(sp.x > 0.0 && sp.y > 0.0)) throw invalid_argument("hd95: spacing must be positive");
  const auto na = count_foreground(a);
  const auto nb = count_foreground(b);
  if (na == 0 && nb == 0) return {0.0, hd95_convention::both_empty};
  if (na == 0 || nb == 0) {
    return {std::hypot(a.width() * sp.x, a.height() * sp.y), hd95_convention::one_empty};
  }
  std::vector<double> distances;
  directed_boundary_distances(a, b, sp, distances);
  directed_boundary_distances(b, a, sp, distances);
  return {percentile(std::move(distances), 95.0), hd95_convention::none};
}

inline double hd95(const binary_mask& a, const binary_mask& b, pixel_spacing sp = {}) {
  return hd95_detailed(a, b, sp).value;
}

struct image_metrics {
  std::string image_id;
  double dice = 0.0;
  double iou = 0.0;
  double hd95 = 0.0;
  bool empty_overlap_convention = false;  // both masks empty
  hd95_convention hd95_rule = hd95_convention::none;
};

inline image_metrics evaluate_pair(std::string image_id, const binary_mask& pred,
                                   const binary_mask& gt, pixel_spacing sp = {}) {
  image_metrics m;
  m.image_id = std::move(image_id);
  m.dice = dice(pred, gt);
  m.iou = iou(pred, gt);
  const auto h = hd95_detailed(pred, gt, sp);
  m.hd95 = h.value;
  m.hd95_rule = h.convention;
  m.empty_overlap_convention = count_foreground(pred) == 0 && count_foreground(gt) == 0;
  return m;
}

/// Per-image metrics plus corpus means (Dice and IoU as percentages).
struct eval_report {
  std::vector<image_metrics> images;
  std::vector<std::string> missing;  // ground truth present, prediction absent
  double mean_dice = 0.0;
  double mean_iou = 0.0;
  double mean_hd95 = 0.0;
  std::size_t empty_overlap_count = 0;
  std::size_t hd95_empty_count = 0;
  std::size_t hd95_diagonal_count = 0;

  /// Recomputes the corpus means in image order.
  void aggregate() {
    mean_dice = mean_iou = mean_hd95 = 0.0;
    empty_overlap_count = hd95_empty_count = hd95_diagonal_count = 0;
    for (const auto& m : images) {
      mean_dice += m.dice;
      mean_iou += m.iou;
      mean_hd95 += m.hd95;
      empty_overlap_count += m.empty_overlap_convention;
      hd95_empty_count += m.hd95_rule == hd95_convention::both_empty;
      hd95_diagonal_count += m.hd95_rule == hd95_convention::one_empty;
    }
    if (!images.empty()) {
      const double n = static_cast<double>(images.size());
      mean_dice = 100.0 * mean_dice / n;
      mean_iou = 100.0 * mean_iou / n;
      mean_hd95 /= n;
    }
  }
};

inline void write_eval_table(std::ostream& os, const eval_report& r) {
  os << "image_id,dice,iou,hd95,empty_convention,hd95_convention\n" << std::setprecision(17);
  for (const auto& m : r.images) {
    os << m.image_id << ',' << m.dice << ',' << m.iou << ',' << m.hd95 << ','
       << (m.empty_overlap_convention ? 1 : 0) << ','
       << (m.hd95_rule == hd95_convention::one_empty    ? "diagonal"
           : m.hd95_rule == hd95_convention::both_empty ? "both-empty"
                                                        : "none")
       << '\n';
  }
}

inline void write_eval_summary(std::ostream& os, const eval_report& r) {
  os << std::setprecision(17) << "images=" << r.images.size() << "\nmissing=" << r.missing.size()
     << "\nmdice=" << r.mean_dice << "\nmiou=" << r.mean_iou << "\nmean_hd95=" << r.mean_hd95
     << "\nempty_overlap_convention=" << r.empty_overlap_count
     << "\nhd95_both_empty=" << r.hd95_empty_count
     << "\nhd95_diagonal_convention=" << r.hd95_diagonal_count << '\n';
  for (const auto& id : r.missing) os << "missing_prediction=" << id << '\n';
}

}  // namespace saif
