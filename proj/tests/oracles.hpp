#pragma once

// Brute-force reference implementations used only by tests. They share no
// code with the library beyond the plain data types.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <vector>

#include "saif/box.hpp"
#include "saif/config.hpp"
#include "saif/grid.hpp"
#include "saif/prompt_family.hpp"

namespace oracle {

using saif::binary_mask;
using saif::box_prompt;
using saif::probability_map;

/// Full sort, then linear interpolation between closest ranks.
inline double percentile(std::vector<double> v, double p) {
  std::sort(v.begin(), v.end());
  const double rank = p / 100.0 * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(rank));
  const auto hi = std::min(lo + 1, v.size() - 1);
  const double frac = rank - static_cast<double>(lo);
  if (frac == 0.0) return v[lo];
  return v[lo] + frac * (v[hi] - v[lo]);
}

inline binary_mask binarize(const probability_map& p, double tau) {
  binary_mask m(p.width(), p.height());
  for (int y = 0; y < p.height(); ++y) {
    for (int x = 0; x < p.width(); ++x) m(x, y) = (p(x, y) > tau) ? 1 : 0;
  }
  return m;
}

inline saif::grid<double> consensus(const std::vector<binary_mask>& masks) {
  saif::grid<double> c(masks[0].width(), masks[0].height(), 0.0);
  for (int y = 0; y < c.height(); ++y) {
    for (int x = 0; x < c.width(); ++x) {
      int count = 0;
      for (const auto& m : masks) count += m(x, y) ? 1 : 0;
      c(x, y) = static_cast<double>(count) / static_cast<double>(masks.size());
    }
  }
  return c;
}

inline double soft_iou(const binary_mask& m, const saif::grid<double>& c, double eps) {
  double num = 0.0, den = 0.0;
  for (int y = 0; y < m.height(); ++y) {
    for (int x = 0; x < m.width(); ++x) {
      const double a = m(x, y) ? 1.0 : 0.0;
      num += std::min(a, c(x, y));
      den += std::max(a, c(x, y));
    }
  }
  return num / (den + eps);
}

/// Pixel-center membership test, written directly from the definition.
inline bool pixel_in_box(int x, int y, const box_prompt& b) {
  return b.x1 <= x + 0.5 && x + 0.5 < b.x2 && b.y1 <= y + 0.5 && y + 0.5 < b.y2;
}

inline std::vector<double> crop(const probability_map& p, const box_prompt& b) {
  std::vector<double> out;
  for (int y = 0; y < p.height(); ++y) {
    for (int x = 0; x < p.width(); ++x) {
      if (pixel_in_box(x, y, b)) out.push_back(p(x, y));
    }
  }
  return out;
}

inline std::vector<double> thresholds(const probability_map& p0, const box_prompt& b,
                                      const saif::saif_config& cfg) {
  const auto v = crop(p0, b);
  const double lo = std::max(cfg.tau_min, percentile(v, 10.0) + cfg.margin);
  const double hi = std::min(cfg.tau_max, percentile(v, 90.0) - cfg.margin);
  if (!(lo < hi)) return {std::clamp(percentile(v, 50.0), cfg.tau_min, cfg.tau_max)};
  if (cfg.m == 1) return {0.5 * (lo + hi)};
  std::vector<double> t;
  for (int j = 1; j <= cfg.m; ++j) {
    t.push_back(lo + static_cast<double>(j - 1) / static_cast<double>(cfg.m - 1) * (hi - lo));
  }
  t.back() = hi;
  return t;
}

struct cell {
  double mu, sigma, sc, occupancy, gate, score;
};

inline cell score_cell(const std::vector<probability_map>& maps, const box_prompt& box, double tau,
                       const saif::saif_config& cfg) {
  std::vector<binary_mask> masks;
  for (const auto& p : maps) masks.push_back(binarize(p, tau));
  const auto c = consensus(masks);
  const double k = static_cast<double>(masks.size());
  std::vector<double> s;
  double occ = 0.0;
  for (const auto& m : masks) {
    s.push_back(soft_iou(m, c, cfg.epsilon));
    double in = 0.0, area = 0.0;
    for (int y = 0; y < m.height(); ++y) {
      for (int x = 0; x < m.width(); ++x) {
        if (!pixel_in_box(x, y, box)) continue;
        area += 1.0;
        in += m(x, y) ? 1.0 : 0.0;
      }
    }
    occ += in / area;
  }
  cell out{};
  double sum = 0.0;
  for (double v : s) sum += v;
  out.mu = sum / k;
  double sq = 0.0;
  for (double v : s) sq += (v - out.mu) * (v - out.mu);
  out.sigma = std::sqrt(sq / k);
  out.sc = out.mu - cfg.lambda * out.sigma;
  out.occupancy = occ / k;
  out.gate = (cfg.a_min < out.occupancy && out.occupancy < cfg.a_max) ? 1.0 : cfg.gamma;
  out.score = out.sc * out.gate;
  return out;
}

struct pipeline_result {
  std::vector<double> taus;
  double tau_star = 0.0;
  std::vector<int> selected;
  std::vector<double> weights;
  probability_map fused;
  binary_mask final_mask;
};

/// Recomputes thresholds, scores, threshold choice, selection, weights and the
/// fused mask from the cached maps of a family.
inline pipeline_result reevaluate(const saif::prompt_family& family,
                                  const std::vector<std::vector<probability_map>>& maps,
                                  const saif::saif_config& cfg, int top_n) {
  pipeline_result r;
  r.taus = thresholds(maps[0][0], family.original, cfg);
  const std::size_t nc = family.outer.size();
  std::vector<std::vector<cell>> table(nc);
  for (std::size_t j = 0; j < nc; ++j) {
    for (double t : r.taus) table[j].push_back(score_cell(maps[j], family.outer[j].box, t, cfg));
  }
  std::size_t best = 0;
  double best_mean = -std::numeric_limits<double>::infinity();
  for (std::size_t t = 0; t < r.taus.size(); ++t) {
    double sum = 0.0;
    for (std::size_t j = 0; j < nc; ++j) sum += table[j][t].score;
    const double mean = sum / static_cast<double>(nc);
    if (mean > best_mean) {  // strict: earlier (smaller) tau wins ties
      best_mean = mean;
      best = t;
    }
  }
  r.tau_star = r.taus[best];

  std::vector<std::size_t> order(nc);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (table[a][best].score != table[b][best].score) return table[a][best].score > table[b][best].score;
    return family.outer[a].index < family.outer[b].index;
  });
  order.resize(std::min<std::size_t>(order.size(), static_cast<std::size_t>(top_n)));

  double total = 0.0;
  bool negative = false;
  for (auto j : order) {
    total += table[j][best].score;
    negative = negative || table[j][best].score < 0.0;
  }
  const int w = maps[0][0].width();
  const int h = maps[0][0].height();
  std::vector<double> fused(static_cast<std::size_t>(w) * h, 0.0);
  for (auto j : order) {
    r.selected.push_back(family.outer[j].index);
    const double weight = (total > 0.0 && !negative) ? table[j][best].score / total
                                                     : 1.0 / static_cast<double>(order.size());
    r.weights.push_back(weight);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        double acc = 0.0;
        for (const auto& p : maps[j]) acc += static_cast<double>(p(x, y));
        const float avg = static_cast<float>(acc / static_cast<double>(maps[j].size()));
        fused[static_cast<std::size_t>(y) * w + x] += weight * static_cast<double>(avg);
      }
    }
  }
  r.fused = probability_map(w, h);
  r.final_mask = binary_mask(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const float v = std::clamp(static_cast<float>(fused[static_cast<std::size_t>(y) * w + x]), 0.0f, 1.0f);
      r.fused(x, y) = v;
      r.final_mask(x, y) = v > r.tau_star ? 1 : 0;
    }
  }
  return r;
}

inline std::size_t count(const binary_mask& m) {
  std::size_t n = 0;
  for (int y = 0; y < m.height(); ++y) {
    for (int x = 0; x < m.width(); ++x) n += m(x, y) ? 1 : 0;
  }
  return n;
}

inline double dice(const binary_mask& a, const binary_mask& b) {
  std::size_t inter = 0;
  for (int y = 0; y < a.height(); ++y) {
    for (int x = 0; x < a.width(); ++x) inter += (a(x, y) && b(x, y)) ? 1 : 0;
  }
  const auto total = count(a) + count(b);
  return total == 0 ? 1.0 : 2.0 * static_cast<double>(inter) / static_cast<double>(total);
}

inline double iou(const binary_mask& a, const binary_mask& b) {
  std::size_t inter = 0, uni = 0;
  for (int y = 0; y < a.height(); ++y) {
    for (int x = 0; x < a.width(); ++x) {
      inter += (a(x, y) && b(x, y)) ? 1 : 0;
      uni += (a(x, y) || b(x, y)) ? 1 : 0;
    }
  }
  return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

struct point {
  int x, y;
};

inline std::vector<point> boundary_points(const binary_mask& m) {
  std::vector<point> out;
  auto fg = [&](int x, int y) {
    return x >= 0 && y >= 0 && x < m.width() && y < m.height() && m(x, y) != 0;
  };
  for (int y = 0; y < m.height(); ++y) {
    for (int x = 0; x < m.width(); ++x) {
      if (fg(x, y) && (!fg(x - 1, y) || !fg(x + 1, y) || !fg(x, y - 1) || !fg(x, y + 1))) {
        out.push_back({x, y});
      }
    }
  }
  return out;
}

/// All-pairs boundary distances, pooled over both directions.
inline double hd95(const binary_mask& a, const binary_mask& b, double sx = 1.0, double sy = 1.0) {
  const auto pa = boundary_points(a);
  const auto pb = boundary_points(b);
  if (pa.empty() && pb.empty()) return 0.0;
  if (pa.empty() || pb.empty()) return std::sqrt(std::pow(a.width() * sx, 2) + std::pow(a.height() * sy, 2));
  std::vector<double> d;
  auto directed = [&](const std::vector<point>& from, const std::vector<point>& to) {
    for (const auto& p : from) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& q : to) {
        best = std::min(best, std::sqrt(std::pow((p.x - q.x) * sx, 2) + std::pow((p.y - q.y) * sy, 2)));
      }
      d.push_back(best);
    }
  };
  directed(pa, pb);
  directed(pb, pa);
  return percentile(d, 95.0);
}

// Seeded generators shared by tests.

inline probability_map random_map(int w, int h, std::mt19937_64& rng) {
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  probability_map p(w, h);
  for (auto& v : p.values()) v = u(rng);
  return p;
}

inline binary_mask random_mask(int w, int h, std::mt19937_64& rng, double density = 0.5) {
  std::bernoulli_distribution b(density);
  binary_mask m(w, h);
  for (auto& v : m.values()) v = b(rng) ? 1 : 0;
  return m;
}

/// Random mask made of a few filled rectangles, so boundaries are structured.
inline binary_mask random_blobs(int w, int h, std::mt19937_64& rng) {
  binary_mask m(w, h, 0);
  std::uniform_int_distribution<int> nb(0, 3);
  const int blobs = nb(rng);
  for (int i = 0; i < blobs; ++i) {
    std::uniform_int_distribution<int> ux(0, w - 1), uy(0, h - 1);
    int x0 = ux(rng), x1 = ux(rng), y0 = uy(rng), y1 = uy(rng);
    if (x0 > x1) std::swap(x0, x1);
    if (y0 > y1) std::swap(y0, y1);
    for (int y = y0; y <= y1; ++y) {
      for (int x = x0; x <= x1; ++x) m(x, y) = 1;
    }
  }
  return m;
}

}  // namespace oracle
