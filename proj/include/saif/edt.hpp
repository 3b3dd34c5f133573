#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include "saif/grid.hpp"

namespace saif {

namespace detail {

// Lower envelope of parabolas (Felzenszwalb & Huttenlocher) along one line
// with sample spacing `s`. f holds squared distances, +inf where unknown.
inline void edt_1d(const std::vector<double>& f, std::vector<double>& d, double s,
                   std::vector<int>& v, std::vector<double>& z) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  const int n = static_cast<int>(f.size());
  int k = -1;
  for (int q = 0; q < n; ++q) {
    if (f[q] == inf) continue;
    const double fq = f[q] + (q * s) * (q * s);
    while (k >= 0) {
      const int p = v[k];
      const double fp = f[p] + (p * s) * (p * s);
      const double cross = (fq - fp) / (2.0 * s * s * (q - p));
      if (cross <= z[k]) {
        --k;
      } else {
        ++k;
        v[k] = q;
        z[k] = cross;
        break;
      }
    }
    if (k < 0) {
      k = 0;
      v[0] = q;
      z[0] = -inf;
    }
  }
  if (k < 0) {
    d.assign(n, inf);
    return;
  }
  int j = 0;
  for (int q = 0; q < n; ++q) {
    while (j < k && z[j + 1] < q) ++j;
    const double dx = (q - v[j]) * s;
    d[q] = dx * dx + f[v[j]];
  }
}

}  // namespace detail

/// Squared Euclidean distance (in physical units) from every pixel center to
/// the nearest pixel where `features` is nonzero; +inf if there is none.
inline grid<double> squared_distance_transform(const binary_mask& features, double spacing_x = 1.0,
                                               double spacing_y = 1.0) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  const int w = features.width();
  const int h = features.height();
  grid<double> out(w, h, inf);
  std::vector<double> f, d;
  std::vector<int> v(static_cast<std::size_t>(std::max(w, h)));
  std::vector<double> z(static_cast<std::size_t>(std::max(w, h)) + 1);

  f.resize(static_cast<std::size_t>(h));
  d.resize(static_cast<std::size_t>(h));
  for (int x = 0; x < w; ++x) {
    for (int y = 0; y < h; ++y) f[y] = features(x, y) ? 0.0 : inf;
    detail::edt_1d(f, d, spacing_y, v, z);
    for (int y = 0; y < h; ++y) out(x, y) = d[y];
  }
  f.resize(static_cast<std::size_t>(w));
  d.resize(static_cast<std::size_t>(w));
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) f[x] = out(x, y);
    detail::edt_1d(f, d, spacing_x, v, z);
    for (int x = 0; x < w; ++x) out(x, y) = d[x];
  }
  return out;
}

}  // namespace saif
