#pragma once

#include <zlib.h>

#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "saif/errors.hpp"
#include "saif/grid.hpp"

namespace saif {

// Binary layout shared by both formats (all little-endian):
//   magic[4] | version u16 = 1 | reserved u16 = 0 | width u32 | height u32
//   payload, row-major, top-left origin
//   crc32(payload) u32
// SPFM payload: IEEE-754 float32 per pixel. SBMK payload: one byte in {0,1}.

inline constexpr std::size_t file_header_size = 16;
inline constexpr std::uint16_t file_format_version = 1;

inline std::uint32_t crc32_of(std::span<const std::uint8_t> bytes) {
  uLong crc = ::crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths; feed large buffers in chunks.
  std::size_t off = 0;
  while (off < bytes.size()) {
    const auto len = static_cast<uInt>(std::min<std::size_t>(bytes.size() - off, 1u << 30));
    crc = ::crc32(crc, bytes.data() + off, len);
    off += len;
  }
  return static_cast<std::uint32_t>(crc);
}

namespace detail {

inline void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xff));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

inline void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int s = 0; s < 32; s += 8) out.push_back(static_cast<std::uint8_t>((v >> s) & 0xff));
}

inline std::uint16_t get_u16(const std::uint8_t* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

inline std::uint32_t get_u32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

inline std::vector<std::uint8_t> header(std::string_view magic, int width, int height) {
  std::vector<std::uint8_t> out(magic.begin(), magic.end());
  put_u16(out, file_format_version);
  put_u16(out, 0);
  put_u32(out, static_cast<std::uint32_t>(width));
  put_u32(out, static_cast<std::uint32_t>(height));
  return out;
}

struct parsed_file {
  int width = 0;
  int height = 0;
  std::span<const std::uint8_t> payload;
};

inline parsed_file parse(std::span<const std::uint8_t> bytes, std::string_view magic,
                         std::size_t bytes_per_pixel, const std::string& name) {
  auto fail = [&](const std::string& field, const std::string& detail) -> parsed_file {
    throw format_error(name + ": bad " + field + (detail.empty() ? "" : " (" + detail + ")"));
  };
  if (bytes.size() < file_header_size) {
    return fail("header", "file has " + std::to_string(bytes.size()) + " bytes");
  }
  if (std::memcmp(bytes.data(), magic.data(), 4) != 0) return fail("magic", "");
  if (get_u16(bytes.data() + 4) != file_format_version) {
    return fail("version", std::to_string(get_u16(bytes.data() + 4)));
  }
  if (get_u16(bytes.data() + 6) != 0) return fail("reserved", "");
  const std::uint32_t w = get_u32(bytes.data() + 8);
  const std::uint32_t h = get_u32(bytes.data() + 12);
  if (w < 1 || h < 1 || w > (1u << 20) || h > (1u << 20)) {
    return fail("dims", std::to_string(w) + "x" + std::to_string(h));
  }
  const std::size_t payload = static_cast<std::size_t>(w) * h * bytes_per_pixel;
  if (bytes.size() != file_header_size + payload + 4) {
    return fail("length", "expected " + std::to_string(file_header_size + payload + 4) +
                              " bytes, got " + std::to_string(bytes.size()));
  }
  const auto data = bytes.subspan(file_header_size, payload);
  if (crc32_of(data) != get_u32(bytes.data() + file_header_size + payload)) {
    return fail("checksum", "");
  }
  return {static_cast<int>(w), static_cast<int>(h), data};
}

}  // namespace detail

inline std::vector<std::uint8_t> encode_map(const probability_map& p) {
  auto out = detail::header("SPFM", p.width(), p.height());
  out.reserve(file_header_size + 4 * p.size() + 4);
  for (float v : p.values()) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, 4);
    detail::put_u32(out, bits);
  }
  const auto crc =
      crc32_of(std::span<const std::uint8_t>(out).subspan(file_header_size, 4 * p.size()));
  detail::put_u32(out, crc);
  return out;
}

inline probability_map decode_map(std::span<const std::uint8_t> bytes,
                                  const std::string& name = "map") {
  const auto f = detail::parse(bytes, "SPFM", 4, name);
  std::vector<float> values(static_cast<std::size_t>(f.width) * f.height);
  for (std::size_t i = 0; i < values.size(); ++i) {
    const std::uint32_t bits = detail::get_u32(f.payload.data() + 4 * i);
    std::memcpy(&values[i], &bits, 4);
    if (!std::isfinite(values[i]) || values[i] < 0.0f || values[i] > 1.0f) {
      throw format_error(name + ": bad value at pixel " + std::to_string(i));
    }
  }
  return probability_map(f.width, f.height, std::move(values));
}

inline std::vector<std::uint8_t> encode_mask(const binary_mask& m) {
  auto out = detail::header("SBMK", m.width(), m.height());
  for (auto v : m.values()) out.push_back(v ? 1 : 0);
  const auto crc = crc32_of(std::span<const std::uint8_t>(out).subspan(file_header_size, m.size()));
  detail::put_u32(out, crc);
  return out;
}

inline binary_mask decode_mask(std::span<const std::uint8_t> bytes,
                               const std::string& name = "mask") {
  const auto f = detail::parse(bytes, "SBMK", 1, name);
  std::vector<std::uint8_t> values(f.payload.begin(), f.payload.end());
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (values[i] > 1) throw format_error(name + ": bad value at pixel " + std::to_string(i));
  }
  return binary_mask(f.width, f.height, std::move(values));
}

inline std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

/// Writes to a sibling temporary and renames over the target.
inline void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw io_error("cannot write " + tmp.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw io_error("short write to " + tmp.string());
  }
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw io_error("cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
}

inline void write_text_atomic(const std::filesystem::path& path, std::string_view text) {
  write_file_atomic(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

inline void write_map(const probability_map& p, const std::filesystem::path& path) {
  validate_probabilities(p);
  write_file_atomic(path, encode_map(p));
}

inline probability_map read_map(const std::filesystem::path& path) {
  return decode_map(read_file_bytes(path), path.string());
}

inline void write_mask(const binary_mask& m, const std::filesystem::path& path) {
  write_file_atomic(path, encode_mask(m));
}

inline binary_mask read_mask(const std::filesystem::path& path) {
  return decode_mask(read_file_bytes(path), path.string());
}

}  // namespace saif
