#pragma once

#include <cstdint>
#include <string_view>

namespace saif {

/// Stream levels used to key independent random streams.
enum class stream_level : std::uint64_t {
  outer = 1,
  inner = 2,
  prompt = 3,
  scene = 4,
  noise = 5,
};

namespace detail {

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t combine(std::uint64_t h, std::uint64_t v) noexcept {
  return splitmix64(h ^ splitmix64(v + 0x632be59bd9b4e019ULL));
}

}  // namespace detail

/// FNV-1a, used to turn string image ids into stream keys.
constexpr std::uint64_t hash_id(std::string_view id) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : id) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Counter-based random stream keyed by (seed, image, candidate, level).
/// Draw j of a stream is a pure function of its key and j, so the order in
/// which streams are consumed across threads never changes the values.
class random_stream {
 public:
  constexpr random_stream(std::uint64_t seed, std::uint64_t image_key,
                          std::uint64_t candidate, stream_level level) noexcept
      : key_(detail::combine(
            detail::combine(detail::combine(detail::splitmix64(seed), image_key),
                            candidate),
            static_cast<std::uint64_t>(level))) {}

  constexpr explicit random_stream(std::uint64_t key) noexcept : key_(key) {}

  constexpr std::uint64_t next_u64() noexcept {
    return detail::splitmix64(key_ ^ detail::splitmix64(counter_++));
  }

  /// Uniform in [0, 1) with 53 random bits.
  constexpr double next_unit() noexcept {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  /// Uniform in [lo, hi].
  constexpr double uniform(double lo, double hi) noexcept {
    return lo + (hi - lo) * next_unit();
  }

  constexpr random_stream split(std::uint64_t sub) const noexcept {
    return random_stream(detail::combine(key_, sub));
  }

  constexpr std::uint64_t key() const noexcept { return key_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace saif
