#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>

#include "saif/errors.hpp"
#include "saif/rng.hpp"

namespace saif {

/// Axis-aligned box prompt in continuous pixel coordinates.
struct box_prompt {
  double x1 = 0.0;
  double y1 = 0.0;
  double x2 = 0.0;
  double y2 = 0.0;

  double width() const noexcept { return x2 - x1; }
  double height() const noexcept { return y2 - y1; }
  double center_x() const noexcept { return 0.5 * (x1 + x2); }
  double center_y() const noexcept { return 0.5 * (y1 + y2); }

  /// Strictly ordered corners with finite coordinates.
  bool well_formed() const noexcept {
    return std::isfinite(x1) && std::isfinite(y1) && std::isfinite(x2) && std::isfinite(y2) &&
           x1 < x2 && y1 < y2;
  }

  friend bool operator==(const box_prompt&, const box_prompt&) = default;
};

inline std::string to_string(const box_prompt& b) {
  return "(" + std::to_string(b.x1) + "," + std::to_string(b.y1) + "," + std::to_string(b.x2) +
         "," + std::to_string(b.y2) + ")";
}

/// Half-open integer pixel range [x0, x1) x [y0, y1).
struct pixel_rect {
  int x0 = 0;
  int y0 = 0;
  int x1 = 0;
  int y1 = 0;

  bool empty() const noexcept { return x1 <= x0 || y1 <= y0; }
  long long area() const noexcept {
    return empty() ? 0LL : static_cast<long long>(x1 - x0) * static_cast<long long>(y1 - y0);
  }
};

/// Pixels whose centers fall inside the box: x1 <= x + 0.5 < x2 (same for y),
/// clipped to a W x H image.
inline pixel_rect rasterize(const box_prompt& b, int width, int height) noexcept {
  auto lo = [](double c, int limit) {
    return std::clamp(static_cast<int>(std::ceil(c - 0.5)), 0, limit);
  };
  return {lo(b.x1, width), lo(b.y1, height), lo(b.x2, width), lo(b.y2, height)};
}

/// Center-preserving scaling of both extents by alpha.
inline box_prompt scale_box(const box_prompt& b, double alpha) {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) {
    throw invalid_argument("scale_box: alpha must be positive, got " + std::to_string(alpha));
  }
  const double cx = b.center_x();
  const double cy = b.center_y();
  const double hw = 0.5 * b.width() * alpha;
  const double hh = 0.5 * b.height() * alpha;
  return {cx - hw, cy - hh, cx + hw, cy + hh};
}

/// Shifts each boundary independently by u * extent, u ~ U[-delta, delta].
/// Draw order is x1, y1, x2, y2; extents are taken from the input box.
inline box_prompt jitter_box(const box_prompt& b, double delta, random_stream& rng) {
  if (delta == 0.0) return b;
  const double w = b.width();
  const double h = b.height();
  box_prompt out = b;
  out.x1 += rng.uniform(-delta, delta) * w;
  out.y1 += rng.uniform(-delta, delta) * h;
  out.x2 += rng.uniform(-delta, delta) * w;
  out.y2 += rng.uniform(-delta, delta) * h;
  return out;
}

/// Clips to [0,W] x [0,H]. Rejected (nullopt) when the clipped box is not
/// ordered or either side is shorter than min_box_px.
inline std::optional<box_prompt> clamp_and_validate(const box_prompt& b, int width, int height,
                                                    int min_box_px) {
  if (width < 1 || height < 1) {
    throw invalid_argument("clamp_and_validate: image dimensions must be >= 1");
  }
  if (!std::isfinite(b.x1) || !std::isfinite(b.y1) || !std::isfinite(b.x2) ||
      !std::isfinite(b.y2)) {
    return std::nullopt;
  }
  const box_prompt c{std::clamp(b.x1, 0.0, double(width)), std::clamp(b.y1, 0.0, double(height)),
                     std::clamp(b.x2, 0.0, double(width)), std::clamp(b.y2, 0.0, double(height))};
  if (!(c.width() >= min_box_px) || !(c.height() >= min_box_px) || !c.well_formed()) {
    return std::nullopt;
  }
  return c;
}

}  // namespace saif
