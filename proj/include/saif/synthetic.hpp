#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "saif/box.hpp"
#include "saif/config.hpp"
#include "saif/edt.hpp"
#include "saif/errors.hpp"
#include "saif/grid.hpp"
#include "saif/rng.hpp"
#include "saif/segmenter.hpp"

namespace saif {

struct ellipse {
  double cx = 0.0;
  double cy = 0.0;
  double rx = 1.0;
  double ry = 1.0;
  double theta = 0.0;

  bool contains(double x, double y) const noexcept {
    const double c = std::cos(theta);
    const double s = std::sin(theta);
    const double dx = x - cx;
    const double dy = y - cy;
    const double u = (c * dx + s * dy) / rx;
    const double v = (-s * dx + c * dy) / ry;
    return u * u + v * v <= 1.0;
  }
};

/// Knobs for the scene generator and the simulated segmenter.
struct shape_params {
  int min_blobs = 1;
  int max_blobs = 3;
  double min_radius = 0.10;  // fraction of min(W, H)
  double max_radius = 0.25;
  int max_distractors = 2;   // adjacent non-target structures
  double kappa = 0.3;        // logistic slope per pixel of signed distance
  double noise = 0.25;       // amplitude of the smooth additive noise field
  double min_confidence = 0.8;
  double min_distractor_level = 0.35;
  double max_distractor_level = 0.7;
  double truncation_penalty = 10.0;  // noise gain per unit of target area cut off by the box
  double gate_margin = 0.06;         // box gate offset, fraction of min box side
  double gate_softness = 0.02;
};

/// Ground truth is a union of ellipses. The simulated segmenter sees it (and
/// any distractor ellipses) through a logistic of the signed distance times a
/// soft box gate, plus box-seeded low-frequency noise that grows when the box
/// cuts the target off.
struct synthetic_scene {
  int width = 0;
  int height = 0;
  std::uint64_t seed = 0;
  double kappa = 0.6;
  double noise = 0.0;
  double confidence = 1.0;
  double distractor_level = 0.5;
  double truncation_penalty = 0.0;
  double gate_margin = 0.0;
  double gate_softness = 0.02;
  std::vector<ellipse> ellipses;
  std::vector<ellipse> distractors;

  // Derived by finalize().
  binary_mask ground_truth;
  grid<float> signed_distance;  // pixels, positive inside the target
  grid<float> target_response;  // logistic(kappa * signed distance)
  grid<float> distractor_response;
  std::vector<double> gt_integral;  // (W+1) x (H+1) summed-area table of ground_truth

  /// Rasterizes the ground truth and the cached responses.
  void finalize() {
    if (width < 1 || height < 1) throw invalid_argument("scene: bad dimensions");
    if (!(kappa > 0.0)) throw invalid_argument("scene: kappa must be > 0");
    if (!(noise >= 0.0 && noise < 0.5)) throw invalid_argument("scene: noise must be in [0, 0.5)");
    ground_truth = rasterize_union(ellipses);
    if (count_foreground(ground_truth) == 0 && !ellipses.empty()) {
      const auto& e = ellipses.front();
      ground_truth(std::clamp(static_cast<int>(e.cx), 0, width - 1),
                   std::clamp(static_cast<int>(e.cy), 0, height - 1)) = 1;
    }
    if (count_foreground(ground_truth) == 0) throw invalid_argument("scene: empty ground truth");

    signed_distance = signed_distance_of(ground_truth);
    target_response = grid<float>(width, height);
    for (std::size_t i = 0; i < target_response.size(); ++i) {
      target_response[i] = static_cast<float>(1.0 / (1.0 + std::exp(-kappa * signed_distance[i])));
    }
    distractor_response = grid<float>(width, height, 0.0f);
    if (!distractors.empty()) {
      auto mask = rasterize_union(distractors);
      for (std::size_t i = 0; i < mask.size(); ++i) mask[i] = mask[i] && !ground_truth[i];
      if (count_foreground(mask) > 0) {
        const auto sd = signed_distance_of(mask);
        for (std::size_t i = 0; i < sd.size(); ++i) {
          distractor_response[i] =
              static_cast<float>(distractor_level / (1.0 + std::exp(-kappa * sd[i])));
        }
      }
    }
    const auto w1 = static_cast<std::size_t>(width) + 1;
    gt_integral.assign(w1 * (static_cast<std::size_t>(height) + 1), 0.0);
    for (int y = 0; y < height; ++y) {
      for (int x = 0; x < width; ++x) {
        gt_integral[(y + 1) * w1 + x + 1] = ground_truth(x, y) + gt_integral[y * w1 + x + 1] +
                                            gt_integral[(y + 1) * w1 + x] - gt_integral[y * w1 + x];
      }
    }
  }

  /// Fraction of ground-truth pixels whose centers fall outside `box`.
  double truncated_fraction(const box_prompt& box) const {
    const auto r = rasterize(box, width, height);
    const double total = gt_integral.back();
    if (r.empty()) return 1.0;
    const auto w1 = static_cast<std::size_t>(width) + 1;
    const double inside = gt_integral[r.y1 * w1 + r.x1] - gt_integral[r.y0 * w1 + r.x1] -
                          gt_integral[r.y1 * w1 + r.x0] + gt_integral[r.y0 * w1 + r.x0];
    return 1.0 - inside / total;
  }

  /// Tight pixel bounding box of the ground truth.
  box_prompt ground_truth_box() const {
    int x0 = width, y0 = height, x1 = -1, y1 = -1;
    for (int y = 0; y < height; ++y) {
      for (int x = 0; x < width; ++x) {
        if (!ground_truth(x, y)) continue;
        x0 = std::min(x0, x);
        y0 = std::min(y0, y);
        x1 = std::max(x1, x);
        y1 = std::max(y1, y);
      }
    }
    return {double(x0), double(y0), double(x1 + 1), double(y1 + 1)};
  }

 private:
  binary_mask rasterize_union(const std::vector<ellipse>& shapes) const {
    binary_mask m(width, height, 0);
    for (int y = 0; y < height; ++y) {
      for (int x = 0; x < width; ++x) {
        for (const auto& e : shapes) {
          if (e.contains(x + 0.5, y + 0.5)) {
            m(x, y) = 1;
            break;
          }
        }
      }
    }
    return m;
  }

  // Approximate signed distance between pixel centers and the mask boundary.
  grid<float> signed_distance_of(const binary_mask& mask) const {
    binary_mask outside(width, height);
    for (std::size_t i = 0; i < outside.size(); ++i) outside[i] = mask[i] ? 0 : 1;
    const auto to_outside = squared_distance_transform(outside);
    const auto to_inside = squared_distance_transform(mask);
    const double cap = static_cast<double>(width + height);
    grid<float> out(width, height);
    for (std::size_t i = 0; i < mask.size(); ++i) {
      const double d = mask[i] ? std::sqrt(to_outside[i]) - 0.5 : -(std::sqrt(to_inside[i]) - 0.5);
      out[i] = static_cast<float>(std::clamp(d, -cap, cap));
    }
    return out;
  }
};

namespace detail {

inline ellipse random_ellipse_near(const ellipse& anchor, double side, const shape_params& params,
                                   random_stream& rng, double distance_scale) {
  const double phi = rng.uniform(0.0, 2.0 * std::numbers::pi);
  ellipse e;
  e.rx = side * rng.uniform(params.min_radius, params.max_radius) * 0.7;
  e.ry = side * rng.uniform(params.min_radius, params.max_radius) * 0.7;
  e.theta = rng.uniform(0.0, std::numbers::pi);
  const double lx = distance_scale * anchor.rx * std::cos(phi);
  const double ly = distance_scale * anchor.ry * std::sin(phi);
  e.cx = anchor.cx + std::cos(anchor.theta) * lx - std::sin(anchor.theta) * ly;
  e.cy = anchor.cy + std::sin(anchor.theta) * lx + std::cos(anchor.theta) * ly;
  return e;
}

}  // namespace detail

/// Deterministic scene `index` of a corpus generated with `seed`.
inline synthetic_scene generate_scene(int width, int height, const shape_params& params,
                                      std::uint64_t seed, std::uint64_t index) {
  if (params.min_blobs < 1 || params.max_blobs < params.min_blobs) {
    throw invalid_argument("shape params: need 1 <= min_blobs <= max_blobs");
  }
  if (!(params.min_radius > 0.0 && params.min_radius <= params.max_radius)) {
    throw invalid_argument("shape params: need 0 < min_radius <= max_radius");
  }
  if (params.max_distractors < 0) throw invalid_argument("shape params: max_distractors < 0");
  random_stream rng(seed, index, 0, stream_level::scene);
  synthetic_scene s;
  s.width = width;
  s.height = height;
  s.seed = rng.next_u64();
  s.kappa = params.kappa;
  s.noise = params.noise;
  s.truncation_penalty = params.truncation_penalty;
  s.gate_margin = params.gate_margin;
  s.gate_softness = params.gate_softness;
  s.confidence = rng.uniform(params.min_confidence, 1.0);
  s.distractor_level = rng.uniform(params.min_distractor_level, params.max_distractor_level);

  const double side = std::min(width, height);
  const int blobs = params.min_blobs +
                    static_cast<int>(rng.next_unit() * (params.max_blobs - params.min_blobs + 1));
  ellipse main;
  main.rx = side * rng.uniform(params.min_radius, params.max_radius);
  main.ry = side * rng.uniform(params.min_radius, params.max_radius);
  main.theta = rng.uniform(0.0, std::numbers::pi);
  const double reach = std::max(main.rx, main.ry);
  main.cx = rng.uniform(std::min(reach + 2.0, 0.5 * width), std::max(width - reach - 2.0, 0.5 * width));
  main.cy = rng.uniform(std::min(reach + 2.0, 0.5 * height), std::max(height - reach - 2.0, 0.5 * height));
  s.ellipses.push_back(main);
  for (int b = 1; b < blobs; ++b) {
    // Lobes sit on the main ellipse so the structure stays connected.
    auto lobe = detail::random_ellipse_near(main, side * 0.6, params, rng, 0.75);
    lobe.cx = std::clamp(lobe.cx, 1.0, width - 1.0);
    lobe.cy = std::clamp(lobe.cy, 1.0, height - 1.0);
    s.ellipses.push_back(lobe);
  }
  const int distractors = static_cast<int>(rng.next_unit() * (params.max_distractors + 1));
  for (int d = 0; d < distractors; ++d) {
    // Just outside the target, so loose boxes start to include it.
    s.distractors.push_back(detail::random_ellipse_near(main, side * 0.6, params, rng, 1.6));
  }
  s.finalize();
  return s;
}

inline double logistic(double x) noexcept { return 1.0 / (1.0 + std::exp(-x)); }

/// Simulated box-prompted segmenter output for `box`:
///
///   p = clamp(max(c * T, D) * gate(box) + noise(box), 0, 1)
///
/// T and D are the target and distractor responses, c the scene confidence,
/// and the gate a logistic of the signed distance to the nearest box edge. The
/// noise is a sum of low-frequency sinusoids seeded by the scene seed and the
/// exact box; its amplitude is scaled by 1 + truncation_penalty * (fraction of
/// the target outside the box), capped at 0.45.
inline probability_map synthetic_predict(const synthetic_scene& scene, const box_prompt& box) {
  if (!box.well_formed()) throw invalid_argument("synthetic_predict: invalid box " + to_string(box));
  const int w = scene.width;
  const int h = scene.height;
  const double side = std::min(box.width(), box.height());
  const double margin = scene.gate_margin * side;
  const double soft = std::max(0.5, scene.gate_softness * side);
  const double conf = scene.confidence;
  const double noise_amp =
      std::min(0.45, scene.noise * (1.0 + scene.truncation_penalty * scene.truncated_fraction(box)));

  // The gate is a monotone function of min(dx, dy), so it factors into a
  // min of per-column and per-row terms.
  std::vector<double> gate_x(static_cast<std::size_t>(w)), gate_y(static_cast<std::size_t>(h));
  for (int x = 0; x < w; ++x) {
    const double c = x + 0.5;
    gate_x[x] = logistic((std::min(c - box.x1, box.x2 - c) + margin) / soft);
  }
  for (int y = 0; y < h; ++y) {
    const double c = y + 0.5;
    gate_y[y] = logistic((std::min(c - box.y1, box.y2 - c) + margin) / soft);
  }

  // Noise waves span the box extent; sin(a + b) splits into row/column tables.
  constexpr int waves = 4;
  std::vector<double> sx(waves * w), cx(waves * w), sy(waves * h), cy(waves * h);
  std::vector<double> amp(waves);
  {
    random_stream rng(detail::combine(
        detail::combine(detail::combine(detail::combine(scene.seed, std::bit_cast<std::uint64_t>(box.x1)),
                                        std::bit_cast<std::uint64_t>(box.y1)),
                        std::bit_cast<std::uint64_t>(box.x2)),
        std::bit_cast<std::uint64_t>(box.y2)));
    double amp_sum = 0.0;
    for (int j = 0; j < waves; ++j) {
      const double freq = rng.uniform(0.5, 2.0);
      const double dir = rng.uniform(0.0, 2.0 * std::numbers::pi);
      const double fx = 2.0 * std::numbers::pi * freq * std::cos(dir) / box.width();
      const double fy = 2.0 * std::numbers::pi * freq * std::sin(dir) / box.height();
      const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
      amp[j] = rng.uniform(0.5, 1.0);
      amp_sum += amp[j];
      for (int x = 0; x < w; ++x) {
        sx[j * w + x] = std::sin(fx * (x + 0.5));
        cx[j * w + x] = std::cos(fx * (x + 0.5));
      }
      for (int y = 0; y < h; ++y) {
        sy[j * h + y] = std::sin(fy * (y + 0.5) + phase);
        cy[j * h + y] = std::cos(fy * (y + 0.5) + phase);
      }
    }
    for (auto& a : amp) a *= amp_sum > 0.0 ? noise_amp / amp_sum : 0.0;
  }

  probability_map p(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double n = 0.0;
      for (int j = 0; j < waves; ++j) {
        n += amp[j] * (sx[j * w + x] * cy[j * h + y] + cx[j * w + x] * sy[j * h + y]);
      }
      const double base = std::max(conf * scene.target_response(x, y),
                                   static_cast<double>(scene.distractor_response(x, y)));
      const double v = base * std::min(gate_x[x], gate_y[y]) + n;
      p(x, y) = static_cast<float>(std::clamp(v, 0.0, 1.0));
    }
  }
  return p;
}

class synthetic_segmenter final : public segmenter {
 public:
  explicit synthetic_segmenter(const synthetic_scene& scene) : scene_(scene) {}
  int width() const override { return scene_.width; }
  int height() const override { return scene_.height; }
  probability_map predict(const box_prompt& box) const override {
    return synthetic_predict(scene_, box);
  }

 private:
  const synthetic_scene& scene_;
};

/// key=value scene record; ellipses as "cx cy rx ry theta" per line.
inline std::string format_scene(const synthetic_scene& s) {
  std::ostringstream os;
  os.precision(17);
  os << "width=" << s.width << "\nheight=" << s.height << "\nseed=" << s.seed
     << "\nkappa=" << s.kappa << "\nnoise=" << s.noise << "\nconfidence=" << s.confidence
     << "\ndistractor_level=" << s.distractor_level
     << "\ntruncation_penalty=" << s.truncation_penalty << "\ngate_margin=" << s.gate_margin
     << "\ngate_softness=" << s.gate_softness << '\n';
  for (const auto& e : s.ellipses) {
    os << "ellipse=" << e.cx << ' ' << e.cy << ' ' << e.rx << ' ' << e.ry << ' ' << e.theta << '\n';
  }
  for (const auto& e : s.distractors) {
    os << "distractor=" << e.cx << ' ' << e.cy << ' ' << e.rx << ' ' << e.ry << ' ' << e.theta << '\n';
  }
  return os.str();
}

inline synthetic_scene parse_scene(std::string_view text) {
  synthetic_scene s;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find('=');
    if (line.empty() || line[0] == '#') continue;
    if (eq == std::string::npos) throw format_error("scene record: bad line '" + line + "'");
    const std::string key = line.substr(0, eq);
    const std::string value = line.substr(eq + 1);
    if (key == "width") s.width = detail::parse_number<int>(value, key);
    else if (key == "height") s.height = detail::parse_number<int>(value, key);
    else if (key == "seed") s.seed = detail::parse_number<std::uint64_t>(value, key);
    else if (key == "kappa") s.kappa = detail::parse_number<double>(value, key);
    else if (key == "noise") s.noise = detail::parse_number<double>(value, key);
    else if (key == "confidence") s.confidence = detail::parse_number<double>(value, key);
    else if (key == "distractor_level") s.distractor_level = detail::parse_number<double>(value, key);
    else if (key == "truncation_penalty") s.truncation_penalty = detail::parse_number<double>(value, key);
    else if (key == "gate_margin") s.gate_margin = detail::parse_number<double>(value, key);
    else if (key == "gate_softness") s.gate_softness = detail::parse_number<double>(value, key);
    else if (key == "ellipse" || key == "distractor") {
      std::istringstream es(value);
      ellipse e;
      if (!(es >> e.cx >> e.cy >> e.rx >> e.ry >> e.theta)) {
        throw format_error("scene record: bad " + key + " '" + value + "'");
      }
      (key == "ellipse" ? s.ellipses : s.distractors).push_back(e);
    } else {
      throw format_error("scene record: unknown key '" + key + "'");
    }
  }
  s.finalize();
  return s;
}

}  // namespace saif
