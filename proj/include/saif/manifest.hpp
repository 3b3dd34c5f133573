#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "saif/box.hpp"
#include "saif/config.hpp"
#include "saif/errors.hpp"
#include "saif/map_io.hpp"
#include "saif/prompt_family.hpp"
#include "saif/segmenter.hpp"

namespace saif {

/// One line of a map manifest:
///   image_id,i,k,x1,y1,x2,y2,path,crc32-hex
/// Request manifests leave path and crc empty. A bridge that failed on a box
/// writes FAILED in the path field.
struct manifest_record {
  std::string image_id;
  int i = 0;
  int k = 0;
  box_prompt box;
  std::string path;  // relative to the image directory
  std::string crc;   // 8 lowercase hex digits

  bool failed() const noexcept { return path == "FAILED" || crc == "FAILED"; }
  bool fulfilled() const noexcept { return !path.empty() && !failed(); }

  friend bool operator==(const manifest_record&, const manifest_record&) = default;
};

/// Shortest decimal text that parses back to the same double.
inline std::string format_coord(double v) {
  char buf[32];
  for (int prec = 1; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

inline std::string format_crc(std::uint32_t crc) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%08x", crc);
  return buf;
}

inline std::string format_record(const manifest_record& r) {
  return r.image_id + ',' + std::to_string(r.i) + ',' + std::to_string(r.k) + ',' +
         format_coord(r.box.x1) + ',' + format_coord(r.box.y1) + ',' + format_coord(r.box.x2) +
         ',' + format_coord(r.box.y2) + ',' + r.path + ',' + r.crc;
}

inline manifest_record parse_record(std::string_view line, std::size_t line_no = 0) {
  std::vector<std::string_view> fields;
  while (true) {
    const auto comma = line.find(',');
    fields.push_back(line.substr(0, comma));
    if (comma == std::string_view::npos) break;
    line.remove_prefix(comma + 1);
  }
  const std::string where = "manifest line " + std::to_string(line_no);
  if (fields.size() != 9) {
    throw format_error(where + ": bad field count (" + std::to_string(fields.size()) + ", want 9)");
  }
  manifest_record r;
  r.image_id = std::string(detail::trim(fields[0]));
  if (r.image_id.empty()) throw format_error(where + ": bad image_id (empty)");
  try {
    r.i = detail::parse_number<int>(fields[1], "i");
    r.k = detail::parse_number<int>(fields[2], "k");
    r.box = {detail::parse_number<double>(fields[3], "x1"), detail::parse_number<double>(fields[4], "y1"),
             detail::parse_number<double>(fields[5], "x2"), detail::parse_number<double>(fields[6], "y2")};
  } catch (const invalid_argument& e) {
    throw format_error(where + ": " + e.what());
  }
  r.path = std::string(detail::trim(fields[7]));
  r.crc = std::string(detail::trim(fields[8]));
  return r;
}

inline std::vector<manifest_record> parse_manifest(std::string_view text) {
  std::vector<manifest_record> out;
  std::size_t line_no = 0;
  while (!text.empty()) {
    ++line_no;
    const auto nl = text.find('\n');
    auto line = detail::trim(text.substr(0, nl));
    text.remove_prefix(nl == std::string_view::npos ? text.size() : nl + 1);
    if (line.empty() || line.front() == '#') continue;
    out.push_back(parse_record(line, line_no));
  }
  return out;
}

inline std::string format_manifest(const std::vector<manifest_record>& records) {
  std::string out = "# image_id,i,k,x1,y1,x2,y2,path,crc32\n";
  for (const auto& r : records) out += format_record(r) + '\n';
  return out;
}

inline std::vector<manifest_record> load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw input_incomplete("missing manifest " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_manifest(ss.str());
}

/// Request lines (empty path and checksum) for every retained family box.
inline std::vector<manifest_record> export_requests(const prompt_family& family,
                                                    const std::string& image_id) {
  std::vector<manifest_record> out;
  for (const auto& cand : family.outer) {
    for (std::size_t k = 0; k < cand.inner.size(); ++k) {
      out.push_back({image_id, cand.index, static_cast<int>(k) + 1, cand.inner[k], "", ""});
    }
  }
  return out;
}

inline constexpr double box_match_tolerance = 1e-6;

inline bool boxes_match(const box_prompt& a, const box_prompt& b) noexcept {
  return std::abs(a.x1 - b.x1) <= box_match_tolerance && std::abs(a.y1 - b.y1) <= box_match_tolerance &&
         std::abs(a.x2 - b.x2) <= box_match_tolerance && std::abs(a.y2 - b.y2) <= box_match_tolerance;
}

/// Read-only store of externally produced maps for one image, laid out as
/// <root>/<image_id>/manifest.txt and <root>/<image_id>/maps/*.spfm.
/// Every referenced file is checksum-verified on load.
class map_store final : public segmenter {
 public:
  map_store(const std::filesystem::path& root, const std::string& image_id)
      : image_id_(image_id) {
    const auto dir = root / image_id;
    for (auto& rec : load_manifest(dir / "manifest.txt")) {
      if (rec.image_id != image_id) {
        throw format_error("manifest for " + image_id + ": bad image_id '" + rec.image_id + "'");
      }
      entry e{rec, std::nullopt};
      if (rec.fulfilled()) {
        const auto bytes = read_file_bytes(dir / rec.path);
        const auto crc = format_crc(crc32_of(bytes));
        if (crc != rec.crc) {
          throw integrity_error(image_id + ": checksum mismatch for " + rec.path + " (manifest " +
                                rec.crc + ", file " + crc + ")");
        }
        e.map = decode_map(bytes, (dir / rec.path).string());
        if (width_ == 0) {
          width_ = e.map->width();
          height_ = e.map->height();
        } else if (e.map->width() != width_ || e.map->height() != height_) {
          throw format_error(image_id + ": bad dims in " + rec.path + " (maps disagree)");
        }
      }
      entries_.push_back(std::move(e));
    }
  }

  const std::string& image_id() const noexcept { return image_id_; }
  std::size_t size() const noexcept { return entries_.size(); }
  int width() const override { return width_; }
  int height() const override { return height_; }

  /// Stored map whose box matches within 1e-6 per coordinate.
  probability_map predict(const box_prompt& box) const override {
    for (const auto& e : entries_) {
      if (e.map && boxes_match(e.record.box, box)) return *e.map;
    }
    throw input_incomplete(image_id_ + ": no cached map for box " + format_coord(box.x1) + "," +
                           format_coord(box.y1) + "," + format_coord(box.x2) + "," +
                           format_coord(box.y2));
  }

 private:
  struct entry {
    manifest_record record;
    std::optional<probability_map> map;
  };

  std::string image_id_;
  std::vector<entry> entries_;
  int width_ = 0;
  int height_ = 0;
};

}  // namespace saif
