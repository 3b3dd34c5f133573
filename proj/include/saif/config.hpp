#pragma once

#include <charconv>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "saif/errors.hpp"

namespace saif {

/// Every hyper-parameter of the pipeline. Defaults follow the published
/// operating point; bounds that were left unquantified use conservative values.
struct saif_config {
  std::vector<double> scales{0.9, 1.0, 1.1};
  int n = 12;  // outer candidates
  int k = 8;   // inner jitters per candidate (including the candidate itself)
  int m = 7;   // threshold grid size
  double delta_out = 0.04;
  double delta_in = 0.01;
  double lambda = 0.3;
  double gamma = 0.5;
  double epsilon = 1e-6;
  double margin = 0.05;  // safety margin added to the 10th / subtracted from the 90th percentile
  double tau_min = 0.05;
  double tau_max = 0.95;
  double a_min = 0.05;
  double a_max = 0.98;
  int top_n = 3;
  std::uint64_t seed = 0;
  int min_box_px = 2;

  int budget() const noexcept { return n * k; }

  /// Throws invalid_argument naming the first violated bound.
  void validate() const {
    auto fail = [](const std::string& what) { throw invalid_argument("config: " + what); };
    if (scales.empty()) fail("scales must be nonempty");
    for (double s : scales) {
      if (!(s > 0.0)) fail("scales must be positive");
    }
    if (n < 1) fail("n must be >= 1");
    if (k < 1) fail("k must be >= 1");
    if (m < 1) fail("m must be >= 1");
    if (!(delta_in >= 0.0 && delta_in <= delta_out)) fail("require 0 <= delta_in <= delta_out");
    if (!(tau_min >= 0.0 && tau_min < tau_max && tau_max <= 1.0)) {
      fail("require 0 <= tau_min < tau_max <= 1");
    }
    if (!(a_min >= 0.0 && a_min < a_max && a_max <= 1.0)) fail("require 0 <= a_min < a_max <= 1");
    if (!(gamma > 0.0 && gamma <= 1.0)) fail("require 0 < gamma <= 1");
    if (!(top_n >= 1 && top_n <= n)) fail("require 1 <= top_n <= n");
    if (!(lambda >= 0.0)) fail("lambda must be >= 0");
    if (!(epsilon > 0.0)) fail("epsilon must be > 0");
    if (!(margin >= 0.0)) fail("margin must be >= 0");
    if (min_box_px < 1) fail("min_box_px must be >= 1");
  }

  friend bool operator==(const saif_config&, const saif_config&) = default;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

template <class T>
T parse_number(std::string_view text, std::string_view key) {
  text = trim(text);
  T value{};
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc{} || ptr != end) {
    throw invalid_argument("config: bad value '" + std::string(text) + "' for key '" +
                           std::string(key) + "'");
  }
  return value;
}

inline std::vector<double> parse_list(std::string_view text, std::string_view key) {
  std::vector<double> out;
  while (!text.empty()) {
    const auto comma = text.find(',');
    out.push_back(parse_number<double>(text.substr(0, comma), key));
    if (comma == std::string_view::npos) break;
    text.remove_prefix(comma + 1);
  }
  return out;
}

}  // namespace detail

/// Applies one key=value override. Keys match the long CLI flag names with
/// '-' replaced by '_'.
inline void set_config_value(saif_config& cfg, std::string_view key, std::string_view value) {
  using detail::parse_number;
  key = detail::trim(key);
  if (key == "scales") cfg.scales = detail::parse_list(value, key);
  else if (key == "n") cfg.n = parse_number<int>(value, key);
  else if (key == "k") cfg.k = parse_number<int>(value, key);
  else if (key == "m" || key == "m_grid") cfg.m = parse_number<int>(value, key);
  else if (key == "delta_out") cfg.delta_out = parse_number<double>(value, key);
  else if (key == "delta_in") cfg.delta_in = parse_number<double>(value, key);
  else if (key == "lambda") cfg.lambda = parse_number<double>(value, key);
  else if (key == "gamma") cfg.gamma = parse_number<double>(value, key);
  else if (key == "epsilon") cfg.epsilon = parse_number<double>(value, key);
  else if (key == "margin") cfg.margin = parse_number<double>(value, key);
  else if (key == "tau_min") cfg.tau_min = parse_number<double>(value, key);
  else if (key == "tau_max") cfg.tau_max = parse_number<double>(value, key);
  else if (key == "a_min") cfg.a_min = parse_number<double>(value, key);
  else if (key == "a_max") cfg.a_max = parse_number<double>(value, key);
  else if (key == "top_n") cfg.top_n = parse_number<int>(value, key);
  else if (key == "seed") cfg.seed = parse_number<std::uint64_t>(value, key);
  else if (key == "min_box_px") cfg.min_box_px = parse_number<int>(value, key);
  else throw invalid_argument("config: unknown key '" + std::string(key) + "'");
}

/// key=value lines; '#' starts a comment. Unset keys keep their defaults.
inline saif_config parse_config(std::string_view text, saif_config cfg = {}) {
  std::size_t line_no = 0;
  while (!text.empty()) {
    ++line_no;
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text.remove_prefix(nl == std::string_view::npos ? text.size() : nl + 1);
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw invalid_argument("config: line " + std::to_string(line_no) + " is not key=value");
    }
    set_config_value(cfg, line.substr(0, eq), line.substr(eq + 1));
  }
  return cfg;
}

inline saif_config load_config(const std::string& path, saif_config cfg = {}) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), std::move(cfg));
}

inline std::string format_config(const saif_config& cfg) {
  std::ostringstream os;
  os.precision(17);
  os << "scales=";
  for (std::size_t i = 0; i < cfg.scales.size(); ++i) os << (i ? "," : "") << cfg.scales[i];
  os << "\nn=" << cfg.n << "\nk=" << cfg.k << "\nm=" << cfg.m << "\ndelta_out=" << cfg.delta_out
     << "\ndelta_in=" << cfg.delta_in << "\nlambda=" << cfg.lambda << "\ngamma=" << cfg.gamma
     << "\nepsilon=" << cfg.epsilon << "\nmargin=" << cfg.margin << "\ntau_min=" << cfg.tau_min
     << "\ntau_max=" << cfg.tau_max << "\na_min=" << cfg.a_min << "\na_max=" << cfg.a_max
     << "\ntop_n=" << cfg.top_n << "\nseed=" << cfg.seed << "\nmin_box_px=" << cfg.min_box_px
     << "\n";
  return os.str();
}

}  // namespace saif
