// saif: stability-aware inference harness.
//
//   saif gen --root DIR --count N [--width W --height H --seed S ...]
//   saif run --corpus DIR --out DIR [--mode full-saif] [--backend synthetic|cached] [config flags]
//   saif eval --pred DIR --gt DIR [--out DIR]
//   saif sweep --corpus DIR --axis budget --values 24,48,96 --out curve.csv [config flags]
//   saif dump-scores --corpus DIR --image ID [--out FILE] [config flags]
//   saif export-requests --corpus DIR [config flags]
//
// Exit codes: 0 success, 2 bad arguments, 3 incomplete inputs, 4 I/O.

#include <cstdlib>
#include <iostream>
#include <map>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "saif/saif.hpp"

namespace {

enum exit_code : int { ok = 0, bad_arguments = 2, incomplete_inputs = 3, io_failure = 4 };

/// Collects config flags as raw key=value overrides so that a config file can
/// be applied first and flags on top of it.
struct config_flags {
  std::string config_file;
  std::map<std::string, std::string> overrides;

  void attach(CLI::App& app) {
    app.add_option("--config", config_file, "key=value config file")->check(CLI::ExistingFile);
    add(app, "--scales", "scales", "comma-separated box scale ratios");
    add(app, "--n", "n", "outer candidates");
    add(app, "--k", "k", "inner jitters per candidate");
    add(app, "--m-grid", "m", "threshold grid size");
    add(app, "--delta-out", "delta_out", "outer jitter ratio");
    add(app, "--delta-in", "delta_in", "inner jitter ratio");
    add(app, "--lambda", "lambda", "variability penalty");
    add(app, "--gamma", "gamma", "area gate down-weight");
    add(app, "--epsilon", "epsilon", "soft IoU stabilizer");
    add(app, "--margin", "margin", "percentile safety margin");
    add(app, "--tau-min", "tau_min", "global lower threshold bound");
    add(app, "--tau-max", "tau_max", "global upper threshold bound");
    add(app, "--a-min", "a_min", "lower occupancy bound");
    add(app, "--a-max", "a_max", "upper occupancy bound");
    add(app, "--top-n", "top_n", "candidates fused");
    add(app, "--seed", "seed", "random seed (falls back to $SAIF_SEED)");
    add(app, "--min-box-px", "min_box_px", "minimum box side in pixels");
  }

  saif::saif_config build() const {
    saif::saif_config cfg;
    if (const char* env = std::getenv("SAIF_SEED")) saif::set_config_value(cfg, "seed", env);
    if (!config_file.empty()) cfg = saif::load_config(config_file, cfg);
    for (const auto& [key, value] : overrides) saif::set_config_value(cfg, key, value);
    cfg.validate();
    return cfg;
  }

 private:
  void add(CLI::App& app, const std::string& flag, const std::string& key, const std::string& help) {
    app.add_option_function<std::string>(
        flag, [this, key](const std::string& v) { overrides[key] = v; }, help);
  }
};

struct run_flags {
  std::string corpus;
  std::string cache_root;
  std::string backend = "synthetic";
  std::string mode = "full-saif";
  double box_noise = 0.08;
  int workers = 1;
  config_flags config;

  void attach(CLI::App& app, bool with_mode = true) {
    app.add_option("--corpus", corpus, "corpus root")->required();
    app.add_option("--cache-root", cache_root, "root of cached maps (default: corpus)");
    app.add_option("--backend", backend, "synthetic | cached");
    if (with_mode) app.add_option("--mode", mode, "vanilla | candidates-only | candidates+sc | full-saif (or I..IV)");
    app.add_option("--box-noise", box_noise, "size-relative noise on ground-truth prompts");
    app.add_option("--workers", workers, "parallel images")->check(CLI::PositiveNumber);
    config.attach(app);
  }

  saif::run_spec build() const {
    saif::run_spec spec;
    spec.corpus = corpus;
    spec.cache_root = cache_root;
    spec.backend = saif::parse_backend(backend);
    spec.mode = saif::parse_run_mode(mode);
    spec.cfg = config.build();
    spec.box_noise = box_noise;
    spec.workers = workers;
    if (!(box_noise >= 0.0)) throw saif::invalid_argument("--box-noise must be >= 0");
    return spec;
  }
};

std::vector<int> parse_int_list(const std::string& text) {
  std::vector<int> out;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ',');) {
    out.push_back(saif::detail::parse_number<int>(item, "values"));
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stability-aware inference for box-prompted segmentation"};
  app.require_subcommand(1);

  // gen
  auto* gen = app.add_subcommand("gen", "generate a synthetic corpus");
  saif::gen_spec gen_spec;
  std::string gen_root;
  std::uint64_t gen_seed = 0;
  gen->add_option("--root", gen_root, "output corpus root")->required();
  gen->add_option("--count", gen_spec.count, "number of images");
  gen->add_option("--width", gen_spec.width, "image width");
  gen->add_option("--height", gen_spec.height, "image height");
  gen->add_option("--seed", gen_seed, "corpus seed");
  gen->add_option("--min-blobs", gen_spec.shapes.min_blobs);
  gen->add_option("--max-blobs", gen_spec.shapes.max_blobs);
  gen->add_option("--min-radius", gen_spec.shapes.min_radius, "fraction of the shorter image side");
  gen->add_option("--max-radius", gen_spec.shapes.max_radius, "fraction of the shorter image side");
  gen->add_option("--max-distractors", gen_spec.shapes.max_distractors);
  gen->add_option("--kappa", gen_spec.shapes.kappa, "boundary sharpness per pixel");
  gen->add_option("--noise", gen_spec.shapes.noise, "smooth noise amplitude");
  gen->add_option("--truncation-penalty", gen_spec.shapes.truncation_penalty);
  gen->add_option("--gate-margin", gen_spec.shapes.gate_margin);

  // run
  auto* run = app.add_subcommand("run", "run the pipeline over a corpus");
  run_flags run_opts;
  std::string run_out;
  bool dump_scores = false;
  run_opts.attach(*run);
  run->add_option("--out", run_out, "output directory")->required();
  run->add_flag("--dump-scores", dump_scores, "write per-image score tables");

  // eval
  auto* eval = app.add_subcommand("eval", "evaluate predicted masks against ground truth");
  std::string pred_dir, gt_dir, eval_out;
  saif::pixel_spacing spacing;
  eval->add_option("--pred", pred_dir, "prediction root")->required();
  eval->add_option("--gt", gt_dir, "ground-truth corpus root")->required();
  eval->add_option("--out", eval_out, "report directory (default: --pred)");
  eval->add_option("--spacing-x", spacing.x, "mm per pixel along x");
  eval->add_option("--spacing-y", spacing.y, "mm per pixel along y");

  // sweep
  auto* sweep = app.add_subcommand("sweep", "sweep one hyper-parameter");
  run_flags sweep_opts;
  std::string axis = "budget", values, sweep_out;
  int repetitions = 1;
  sweep_opts.attach(*sweep);
  sweep->add_option("--axis", axis, "budget | m | top-n");
  sweep->add_option("--values", values, "comma-separated values")->required();
  sweep->add_option("--repetitions", repetitions);
  sweep->add_option("--out", sweep_out, "curve CSV")->required();

  // dump-scores
  auto* dump = app.add_subcommand("dump-scores", "write the score table for one image");
  run_flags dump_opts;
  std::string dump_image, dump_out;
  dump_opts.attach(*dump, false);
  dump->add_option("--image", dump_image, "image id")->required();
  dump->add_option("--out", dump_out, "output file (default: stdout)");

  // export-requests
  auto* exp = app.add_subcommand("export-requests", "write box requests for an external model");
  run_flags exp_opts;
  exp_opts.attach(*exp, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? ok : bad_arguments;
  }

  try {
    if (*gen) {
      gen_spec.root = gen_root;
      gen_spec.seed = gen_seed;
      if (!gen->count("--seed")) {
        if (const char* env = std::getenv("SAIF_SEED")) gen_spec.seed = std::strtoull(env, nullptr, 10);
      }
      saif::cmd_gen(gen_spec);
      std::cout << "wrote " << gen_spec.count << " images to " << gen_root << '\n';
    } else if (*run) {
      auto spec = run_opts.build();
      spec.output = run_out;
      spec.dump_scores = dump_scores;
      const auto runs = saif::cmd_run(spec);
      std::cout << "ran " << runs.size() << " images (" << saif::to_string(spec.mode) << ") into "
                << run_out << '\n';
    } else if (*eval) {
      const auto report = saif::cmd_eval(pred_dir, gt_dir, eval_out.empty() ? pred_dir : eval_out, spacing);
      saif::write_eval_summary(std::cout, report);
      if (!report.missing.empty()) return incomplete_inputs;
    } else if (*sweep) {
      saif::sweep_spec spec;
      spec.axis = saif::parse_sweep_axis(axis);
      spec.values = parse_int_list(values);
      spec.repetitions = repetitions;
      spec.base = sweep_opts.build();
      const auto rows = saif::cmd_sweep(spec, sweep_out);
      std::cout << "wrote " << rows.size() << " rows to " << sweep_out << '\n';
    } else if (*dump) {
      const auto table = saif::cmd_dump_scores(dump_opts.build(), dump_image);
      if (dump_out.empty()) {
        saif::write_score_report(std::cout, table);
      } else {
        std::ostringstream os;
        saif::write_score_report(os, table);
        saif::write_text_atomic(dump_out, os.str());
      }
    } else if (*exp) {
      const auto degenerate = saif::cmd_export_requests(exp_opts.build());
      for (const auto& id : degenerate) std::cerr << "degenerate family: " << id << '\n';
      if (!degenerate.empty()) return incomplete_inputs;
    }
  } catch (const saif::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return bad_arguments;
  } catch (const saif::input_incomplete& e) {
    std::cerr << "incomplete input: " << e.what() << '\n';
    return incomplete_inputs;
  } catch (const saif::degenerate_family& e) {
    std::cerr << "degenerate family: " << e.what() << '\n';
    return incomplete_inputs;
  } catch (const saif::io_error& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return io_failure;
  } catch (const saif::format_error& e) {
    std::cerr << "format error: " << e.what() << '\n';
    return io_failure;
  } catch (const saif::integrity_error& e) {
    std::cerr << "integrity error: " << e.what() << '\n';
    return io_failure;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return io_failure;
  }
  return ok;
}
