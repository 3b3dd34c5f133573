#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "saif/errors.hpp"

namespace saif {

/// Dense row-major W x H grid with a top-left origin.
template <class T>
class grid {
 public:
  using value_type = T;

  grid() = default;
  grid(int width, int height, T fill = T{}) : width_(width), height_(height) {
    if (width < 1 || height < 1) {
      throw invalid_argument("grid dimensions must be >= 1, got " + std::to_string(width) +
                             "x" + std::to_string(height));
    }
    data_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill);
  }
  grid(int width, int height, std::vector<T> values) : width_(width), height_(height) {
    if (width < 1 || height < 1 ||
        values.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
      throw invalid_argument("grid value count does not match dimensions");
    }
    data_ = std::move(values);
  }

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  T& operator()(int x, int y) noexcept { return data_[index(x, y)]; }
  const T& operator()(int x, int y) const noexcept { return data_[index(x, y)]; }
  T& operator[](std::size_t i) noexcept { return data_[i]; }
  const T& operator[](std::size_t i) const noexcept { return data_[i]; }

  std::span<T> values() noexcept { return data_; }
  std::span<const T> values() const noexcept { return data_; }

  friend bool operator==(const grid&, const grid&) = default;

 private:
  std::size_t index(int x, int y) const noexcept {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(x);
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<T> data_;
};

/// Foreground probabilities in [0, 1], as produced by a segmenter.
using probability_map = grid<float>;
/// 0/1 per pixel.
using binary_mask = grid<std::uint8_t>;

template <class A, class B>
void require_same_shape(const grid<A>& a, const grid<B>& b, const char* what) {
  if (a.width() != b.width() || a.height() != b.height()) {
    throw invalid_argument(std::string(what) + ": dimension mismatch (" +
                           std::to_string(a.width()) + "x" + std::to_string(a.height()) +
                           " vs " + std::to_string(b.width()) + "x" +
                           std::to_string(b.height()) + ")");
  }
}

/// Throws unless every value is finite and within [0, 1].
inline void validate_probabilities(const probability_map& p) {
  for (float v : p.values()) {
    if (!std::isfinite(v) || v < 0.0f || v > 1.0f) {
      throw invalid_argument("probability map value outside [0,1]: " + std::to_string(v));
    }
  }
}

inline std::size_t count_foreground(const binary_mask& m) noexcept {
  std::size_t n = 0;
  for (auto v : m.values()) n += (v != 0);
  return n;
}

}  // namespace saif
