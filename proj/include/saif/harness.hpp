#pragma once

// Corpus-level commands behind the `saif` CLI: generate synthetic corpora,
// run the pipeline (or an ablation mode) over a corpus, evaluate predictions,
// and sweep hyper-parameters.
//
// Corpus layout, one directory per image:
//   <root>/index.txt                 image ids, one per line
//   <root>/<id>/gt.sbmk              ground truth
//   <root>/<id>/box.txt              tight ground-truth box "x1 y1 x2 y2"
//   <root>/<id>/scene.txt            synthetic scene record (synthetic backend)
//   <root>/<id>/requests.txt         box requests for an external model
//   <root>/<id>/manifest.txt         fulfilled requests (cached backend)
//   <root>/<id>/maps/*.spfm

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <memory>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "saif/box.hpp"
#include "saif/config.hpp"
#include "saif/errors.hpp"
#include "saif/manifest.hpp"
#include "saif/map_io.hpp"
#include "saif/metrics.hpp"
#include "saif/parallel.hpp"
#include "saif/pipeline.hpp"
#include "saif/synthetic.hpp"

namespace saif {

namespace fs = std::filesystem;

inline std::string image_id_for(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "img_%05zu", index);
  return buf;
}

inline std::string read_text(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw input_incomplete("missing file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::vector<std::string> list_images(const fs::path& root) {
  std::vector<std::string> ids;
  const auto index = root / "index.txt";
  if (fs::exists(index)) {
    std::istringstream in(read_text(index));
    for (std::string line; std::getline(in, line);) {
      const auto id = std::string(detail::trim(line));
      if (!id.empty() && id.front() != '#') ids.push_back(id);
    }
    return ids;
  }
  if (!fs::is_directory(root)) throw input_incomplete("corpus directory " + root.string() + " not found");
  for (const auto& entry : fs::directory_iterator(root)) {
    if (entry.is_directory() && fs::exists(entry.path() / "gt.sbmk")) {
      ids.push_back(entry.path().filename().string());
    }
  }
  std::sort(ids.begin(), ids.end());
  return ids;
}

inline std::string format_box(const box_prompt& b) {
  return format_coord(b.x1) + ' ' + format_coord(b.y1) + ' ' + format_coord(b.x2) + ' ' +
         format_coord(b.y2);
}

inline box_prompt parse_box(const std::string& text, const std::string& where) {
  std::istringstream in(text);
  box_prompt b;
  if (!(in >> b.x1 >> b.y1 >> b.x2 >> b.y2)) throw format_error(where + ": bad box");
  return b;
}

// ---------------------------------------------------------------------------
// gen

struct gen_spec {
  fs::path root;
  std::size_t count = 100;
  int width = 224;
  int height = 224;
  shape_params shapes;
  std::uint64_t seed = 0;
};

inline void cmd_gen(const gen_spec& spec) {
  if (spec.count < 1) throw invalid_argument("gen: count must be >= 1");
  std::error_code ec;
  fs::create_directories(spec.root, ec);
  if (ec) throw io_error("gen: cannot create " + spec.root.string() + ": " + ec.message());
  std::string index;
  for (std::size_t i = 0; i < spec.count; ++i) {
    const auto id = image_id_for(i);
    const auto scene = generate_scene(spec.width, spec.height, spec.shapes, spec.seed, i);
    const auto dir = spec.root / id;
    write_mask(scene.ground_truth, dir / "gt.sbmk");
    write_text_atomic(dir / "scene.txt", format_scene(scene));
    write_text_atomic(dir / "box.txt", format_box(scene.ground_truth_box()) + "\n");
    index += id + '\n';
  }
  write_text_atomic(spec.root / "index.txt", index);
}

// ---------------------------------------------------------------------------
// run

enum class backend_kind { synthetic, cached };

inline backend_kind parse_backend(std::string_view s) {
  if (s == "synthetic") return backend_kind::synthetic;
  if (s == "cached") return backend_kind::cached;
  throw invalid_argument("unknown backend '" + std::string(s) + "'");
}

struct run_spec {
  fs::path corpus;
  fs::path cache_root;  // defaults to the corpus
  backend_kind backend = backend_kind::synthetic;
  run_mode mode = run_mode::full;
  saif_config cfg;
  double box_noise = 0.08;
  fs::path output;  // empty: keep results in memory only
  int workers = 1;
  bool dump_scores = false;
};

/// Effective configuration for a mode; vanilla is a single box.
inline saif_config config_for_mode(saif_config cfg, run_mode mode) {
  if (mode == run_mode::vanilla) {
    cfg.n = 1;
    cfg.k = 1;
    cfg.top_n = 1;
  }
  return cfg;
}

/// Evaluation prompt: the tight ground-truth box with every edge moved by a
/// uniform size-relative offset in [-noise, noise].
inline box_prompt derive_prompt(const box_prompt& tight, double noise, std::uint64_t seed,
                                 std::uint64_t image_key) {
  random_stream rng(seed, image_key, 0, stream_level::prompt);
  return jitter_box(tight, noise, rng);
}

struct image_run {
  std::string image_id;
  box_prompt prompt;
  saif_outcome outcome;
  std::size_t calls = 0;
  double wall_ms = 0.0;
  int n = 0;
  int k = 0;
};

inline std::string join(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + format_coord(v[i]);
  return out;
}

inline std::string join(const std::vector<int>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + std::to_string(v[i]);
  return out;
}

/// Deterministic per-image record (wall time lives in timing.csv).
inline std::string format_image_record(const image_run& r, run_mode mode) {
  const auto& res = r.outcome.result;
  std::ostringstream os;
  os << "image_id=" << r.image_id << "\nmode=" << to_string(mode) << "\nn=" << r.n << "\nk=" << r.k
     << "\nprompt=" << format_box(r.prompt) << "\nfamily_boxes=" << r.outcome.family_boxes
     << "\ncalls=" << r.calls << "\ntau_star=" << format_coord(res.tau_star);
  if (r.outcome.thresholds) {
    os << "\nthreshold_provenance=" << to_string(r.outcome.thresholds->provenance)
       << "\nthresholds=" << join(r.outcome.thresholds->taus);
  }
  os << "\nselected=" << join(res.selected) << "\nweights=" << join(res.weights)
     << "\nfallback_used=" << (res.fallback_used ? 1 : 0)
     << "\ndegenerate_family=" << (r.outcome.degenerate_family ? 1 : 0)
     << "\nforeground=" << count_foreground(res.final_mask) << '\n';
  return os.str();
}

struct corpus_image {
  std::string id;
  std::uint64_t key = 0;
  box_prompt tight;
};

inline corpus_image load_corpus_image(const fs::path& corpus, const std::string& id) {
  return {id, hash_id(id), parse_box(read_text(corpus / id / "box.txt"), id + "/box.txt")};
}

/// Runs one image end to end against the configured backend.
inline image_run run_image(const run_spec& spec, const corpus_image& img) {
  const auto cfg = config_for_mode(spec.cfg, spec.mode);
  image_run r;
  r.image_id = img.id;
  r.n = cfg.n;
  r.k = cfg.k;
  r.prompt = derive_prompt(img.tight, spec.box_noise, cfg.seed, img.key);

  std::unique_ptr<segmenter> backend;
  std::optional<synthetic_scene> scene;
  if (spec.backend == backend_kind::synthetic) {
    scene = parse_scene(read_text(spec.corpus / img.id / "scene.txt"));
    backend = std::make_unique<synthetic_segmenter>(*scene);
  } else {
    const auto root = spec.cache_root.empty() ? spec.corpus : spec.cache_root;
    backend = std::make_unique<map_store>(root, img.id);
  }
  counting_segmenter counted(*backend);
  const auto start = std::chrono::steady_clock::now();
  r.outcome = run_saif(counted, r.prompt, cfg, spec.mode, img.key, 1);
  r.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  r.calls = counted.calls();
  return r;
}

inline void write_image_outputs(const run_spec& spec, const image_run& r) {
  const auto dir = spec.output / r.image_id;
  write_mask(r.outcome.result.final_mask, dir / "mask.sbmk");
  write_text_atomic(dir / "record.txt", format_image_record(r, spec.mode));
  if (spec.dump_scores && r.outcome.scores) {
    std::ostringstream os;
    write_score_report(os, *r.outcome.scores);
    write_text_atomic(dir / "scores.tsv", os.str());
  }
}

/// Runs every corpus image. Images are independent, so results do not depend
/// on the worker count; outputs are written per image as they finish.
inline std::vector<image_run> cmd_run(const run_spec& spec) {
  spec.cfg.validate();
  const auto ids = list_images(spec.corpus);
  if (ids.empty()) throw input_incomplete("run: corpus " + spec.corpus.string() + " has no images");
  std::vector<corpus_image> images;
  for (const auto& id : ids) images.push_back(load_corpus_image(spec.corpus, id));

  std::vector<image_run> runs(images.size());
  parallel_for(images.size(), spec.workers, [&](std::size_t i) {
    runs[i] = run_image(spec, images[i]);
    if (!spec.output.empty()) write_image_outputs(spec, runs[i]);
  });
  if (!spec.output.empty()) {
    std::ostringstream os;
    os << "image_id,wall_ms,calls\n";
    for (const auto& r : runs) os << r.image_id << ',' << r.wall_ms << ',' << r.calls << '\n';
    write_text_atomic(spec.output / "timing.csv", os.str());
  }
  return runs;
}

/// Writes requests.txt for every image: the family boxes the pipeline will
/// ask for, with empty path and checksum fields. Returns the ids whose family
/// was degenerate (their request files are empty).
inline std::vector<std::string> cmd_export_requests(const run_spec& spec) {
  spec.cfg.validate();
  const auto root = spec.cache_root.empty() ? spec.corpus : spec.cache_root;
  std::vector<std::string> degenerate;
  for (const auto& id : list_images(spec.corpus)) {
    const auto img = load_corpus_image(spec.corpus, id);
    const auto gt = read_mask(spec.corpus / id / "gt.sbmk");
    const auto prompt = derive_prompt(img.tight, spec.box_noise, spec.cfg.seed, img.key);
    std::vector<manifest_record> records;
    try {
      const auto family = build_family(prompt, spec.cfg, gt.width(), gt.height(), img.key);
      records = export_requests(family, id);
    } catch (const degenerate_family&) {
      degenerate.push_back(id);
    }
    write_text_atomic(root / id / "requests.txt", format_manifest(records));
  }
  return degenerate;
}

/// Score table for one image, as written by `dump-scores`.
inline score_table cmd_dump_scores(const run_spec& spec, const std::string& image_id) {
  auto s = spec;
  s.mode = run_mode::full;
  const auto r = run_image(s, load_corpus_image(spec.corpus, image_id));
  if (!r.outcome.scores) throw degenerate_family(image_id + ": degenerate family, no score table");
  return *r.outcome.scores;
}

// ---------------------------------------------------------------------------
// eval

/// Compares <pred>/<id>/mask.sbmk against <gt>/<id>/gt.sbmk for every ground
/// truth image. Missing predictions are listed and excluded from the means.
inline eval_report evaluate_runs(const std::vector<image_run>& runs, const fs::path& gt_root,
                                 pixel_spacing spacing = {}) {
  eval_report report;
  for (const auto& r : runs) {
    report.images.push_back(evaluate_pair(r.image_id, r.outcome.result.final_mask,
                                          read_mask(gt_root / r.image_id / "gt.sbmk"), spacing));
  }
  report.aggregate();
  return report;
}

inline eval_report cmd_eval(const fs::path& pred_root, const fs::path& gt_root,
                            const fs::path& output = {}, pixel_spacing spacing = {}) {
  eval_report report;
  for (const auto& id : list_images(gt_root)) {
    const auto pred_path = pred_root / id / "mask.sbmk";
    if (!fs::exists(pred_path)) {
      report.missing.push_back(id);
      continue;
    }
    report.images.push_back(
        evaluate_pair(id, read_mask(pred_path), read_mask(gt_root / id / "gt.sbmk"), spacing));
  }
  report.aggregate();
  if (!output.empty()) {
    std::ostringstream table, summary;
    write_eval_table(table, report);
    write_eval_summary(summary, report);
    write_text_atomic(output / "eval.csv", table.str());
    write_text_atomic(output / "eval_summary.txt", summary.str());
  }
  return report;
}

// ---------------------------------------------------------------------------
// sweep

enum class sweep_axis { budget, m, top_n };

inline sweep_axis parse_sweep_axis(std::string_view s) {
  if (s == "budget") return sweep_axis::budget;
  if (s == "m" || s == "m-grid") return sweep_axis::m;
  if (s == "top-n" || s == "top_n") return sweep_axis::top_n;
  throw invalid_argument("unknown sweep axis '" + std::string(s) + "'");
}

inline const char* to_string(sweep_axis a) noexcept {
  switch (a) {
    case sweep_axis::budget: return "budget";
    case sweep_axis::m: return "m";
    case sweep_axis::top_n: return "top_n";
  }
  return "?";
}

struct sweep_spec {
  sweep_axis axis = sweep_axis::budget;
  std::vector<int> values;
  int repetitions = 1;
  run_spec base;
};

struct sweep_row {
  int value = 0;
  int repetition = 0;
  double mdice = 0.0;
  double miou = 0.0;
  double mean_wall_ms = 0.0;
};

/// Configuration for one sweep point. Budget varies N at fixed K (N = budget / K).
inline saif_config sweep_config(const sweep_spec& spec, int value) {
  auto cfg = spec.base.cfg;
  switch (spec.axis) {
    case sweep_axis::budget:
      if (value < cfg.k || value % cfg.k != 0) {
        throw invalid_argument("sweep: budget " + std::to_string(value) +
                               " is not a positive multiple of k=" + std::to_string(cfg.k));
      }
      cfg.n = value / cfg.k;
      cfg.top_n = std::min(cfg.top_n, cfg.n);
      break;
    case sweep_axis::m:
      cfg.m = value;
      break;
    case sweep_axis::top_n:
      cfg.top_n = value;
      break;
  }
  cfg.validate();
  return cfg;
}

inline std::vector<sweep_row> cmd_sweep(const sweep_spec& spec, const fs::path& curve_file = {}) {
  if (spec.values.empty()) throw invalid_argument("sweep: value list is empty");
  if (spec.repetitions < 1) throw invalid_argument("sweep: repetitions must be >= 1");
  for (int v : spec.values) sweep_config(spec, v);

  std::vector<sweep_row> rows;
  for (int rep = 0; rep < spec.repetitions; ++rep) {
    for (int v : spec.values) {
      auto run = spec.base;
      run.cfg = sweep_config(spec, v);
      run.cfg.seed = spec.base.cfg.seed + static_cast<std::uint64_t>(rep);
      run.output.clear();
      const auto runs = cmd_run(run);
      const auto report = evaluate_runs(runs, run.corpus);
      double wall = 0.0;
      for (const auto& r : runs) wall += r.wall_ms;
      rows.push_back({v, rep, report.mean_dice, report.mean_iou, wall / static_cast<double>(runs.size())});
    }
  }
  if (!curve_file.empty()) {
    std::ostringstream os;
    os << "axis,value,repetition,mdice,miou,mean_wall_ms\n" << std::setprecision(10);
    for (const auto& r : rows) {
      os << to_string(spec.axis) << ',' << r.value << ',' << r.repetition << ',' << r.mdice << ','
         << r.miou << ',' << r.mean_wall_ms << '\n';
    }
    write_text_atomic(curve_file, os.str());
  }
  return rows;
}

}  // namespace saif
