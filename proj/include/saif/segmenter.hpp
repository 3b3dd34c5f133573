#pragma once

#include <atomic>
#include <cstddef>
#include <map>
#include <mutex>
#include <tuple>

#include "saif/box.hpp"
#include "saif/grid.hpp"

namespace saif {

/// A box-promptable segmenter bound to one image. predict must be
/// deterministic and safe to call concurrently.
class segmenter {
 public:
  virtual ~segmenter() = default;
  virtual int width() const = 0;
  virtual int height() const = 0;
  virtual probability_map predict(const box_prompt& box) const = 0;
};

/// Counts forward passes of the wrapped segmenter.
class counting_segmenter final : public segmenter {
 public:
  explicit counting_segmenter(const segmenter& inner) : inner_(inner) {}

  int width() const override { return inner_.width(); }
  int height() const override { return inner_.height(); }
  probability_map predict(const box_prompt& box) const override {
    calls_.fetch_add(1, std::memory_order_relaxed);
    return inner_.predict(box);
  }

  std::size_t calls() const noexcept { return calls_.load(); }

 private:
  const segmenter& inner_;
  mutable std::atomic<std::size_t> calls_{0};
};

/// Remembers every map it hands out, keyed by exact box coordinates.
class recording_segmenter final : public segmenter {
 public:
  explicit recording_segmenter(const segmenter& inner) : inner_(inner) {}

  int width() const override { return inner_.width(); }
  int height() const override { return inner_.height(); }
  probability_map predict(const box_prompt& box) const override {
    auto p = inner_.predict(box);
    std::lock_guard lock(mutex_);
    cache_.emplace(key(box), p);
    return p;
  }

  const probability_map* find(const box_prompt& box) const {
    std::lock_guard lock(mutex_);
    auto it = cache_.find(key(box));
    return it == cache_.end() ? nullptr : &it->second;
  }

 private:
  using key_type = std::tuple<double, double, double, double>;
  static key_type key(const box_prompt& b) { return {b.x1, b.y1, b.x2, b.y2}; }

  const segmenter& inner_;
  mutable std::mutex mutex_;
  mutable std::map<key_type, probability_map> cache_;
};

}  // namespace saif
