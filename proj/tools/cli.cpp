#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <ostream>
#include <sstream>
#include <thread>

#include "pmp/distance_fields.hpp"
#include "pmp/error.hpp"
#include "pmp/eval.hpp"
#include "pmp/expansion.hpp"
#include "pmp/io.hpp"
#include "pmp/overlay.hpp"
#include "pmp/pac_refiner.hpp"
#include "pmp/point_blot.hpp"
#include "pmp/pseudo_mask.hpp"
#include "pmp/random_walker.hpp"
#include "pmp/synthetic.hpp"

#ifndef PMP_VERSION
#define PMP_VERSION "0.0.0"
#endif

namespace fs = std::filesystem;

namespace pmp::cli {

namespace {

// Missing or inconsistent flags detected after parsing; reported with usage.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

Error with_context(const Error& e, const std::string& context) {
  return Error(e.code(), context + ": " + e.what());
}

template <typename Fn>
auto load(const fs::path& path, Fn&& fn) {
  try {
    return fn(path);
  } catch (const Error& e) {
    const std::string what = e.what();
    if (what.find(path.string()) != std::string::npos) throw;
    throw with_context(e, path.string());
  }
}

std::vector<double> parse_losses(std::string_view text, const std::string& source) {
  std::vector<double> losses;
  std::istringstream in{std::string(text)};
  std::string line;
  for (int line_no = 1; std::getline(in, line); ++line_no) {
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    const auto last = line.find_last_not_of(" \t\r");
    const std::string token = line.substr(first, last - first + 1);
    double value = 0.0;
    auto [end, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
    if (ec != std::errc() || end != token.data() + token.size()) {
      throw Error(ErrorCode::kParseError,
                  source + ":" + std::to_string(line_no) + ": expected one loss value");
    }
    losses.push_back(value);
  }
  return losses;
}

std::string read_text(const fs::path& path) {
  const auto bytes = io::read_file(path);
  return {bytes.begin(), bytes.end()};
}

// One manifest line: whitespace-separated paths, relative ones resolved against the
// manifest's directory.
struct ManifestEntry {
  int line = 0;
  std::vector<fs::path> paths;
};

std::vector<ManifestEntry> read_manifest(const fs::path& path, std::size_t columns) {
  const std::string text = read_text(path);
  const fs::path base = path.parent_path();
  std::vector<ManifestEntry> entries;
  std::istringstream in(text);
  std::string line;
  for (int line_no = 1; std::getline(in, line); ++line_no) {
    std::istringstream fields(line);
    std::string token;
    ManifestEntry entry{line_no, {}};
    while (fields >> token) {
      if (token.front() == '#') break;
      fs::path p(token);
      entry.paths.push_back(p.is_absolute() || base.empty() ? p : base / p);
    }
    if (entry.paths.empty()) continue;
    if (entry.paths.size() != columns) {
      throw Error(ErrorCode::kParseError, path.string() + ":" + std::to_string(line_no) +
                                              ": expected " + std::to_string(columns) +
                                              " paths, found " +
                                              std::to_string(entry.paths.size()));
    }
    entries.push_back(std::move(entry));
  }
  if (entries.empty()) throw Error(ErrorCode::kParseError, path.string() + ": manifest is empty");
  return entries;
}

fs::path derived_output(const fs::path& dir, const fs::path& source, const std::string& suffix) {
  return dir / (source.stem().string() + suffix);
}

// Runs `work` for every entry on up to `jobs` threads. Failures are reported in
// manifest order after all entries finish; the worst status wins.
template <typename Work>
int run_entries(const std::vector<ManifestEntry>& entries, int jobs, const fs::path& manifest,
                Work&& work, std::ostream& err) {
  std::vector<std::string> failures(entries.size());
  std::vector<int> status(entries.size(), kExitOk);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < entries.size(); i = next++) {
      const std::string where = manifest.string() + ":" + std::to_string(entries[i].line);
      try {
        work(entries[i]);
      } catch (const Error& e) {
        failures[i] = where + ": " + e.what();
        status[i] = e.code() == ErrorCode::kSolverDiverged ? kExitInternalError : kExitInputError;
      } catch (const std::exception& e) {
        failures[i] = where + ": internal error: " + e.what();
        status[i] = kExitInternalError;
      }
    }
  };
  const int threads = std::max(1, std::min<int>(jobs, static_cast<int>(entries.size())));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  int worst = kExitOk;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (!failures[i].empty()) err << "error: " << failures[i] << "\n";
    worst = std::max(worst, status[i]);
  }
  return worst;
}

// Flags shared by subcommands that can run over a manifest.
struct BatchOptions {
  std::string manifest;
  std::string out_dir;
  int jobs = 1;

  bool active() const { return !manifest.empty(); }
};

void add_batch_options(CLI::App* sub, BatchOptions& batch, const std::string& columns) {
  sub->add_option("--manifest", batch.manifest,
                  "Batch file, one '" + columns + "' entry per line")
      ->check(CLI::ExistingFile);
  sub->add_option("--out-dir", batch.out_dir, "Output directory for --manifest runs");
  sub->add_option("--jobs", batch.jobs, "Parallel manifest entries")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
}

void require(bool condition, const std::string& message) {
  if (!condition) throw UsageError(message);
}

void require_single(const BatchOptions& batch, std::initializer_list<std::pair<const char*, bool>> flags) {
  if (batch.active()) {
    require(!batch.out_dir.empty(), "--manifest needs --out-dir");
    fs::create_directories(batch.out_dir);
    return;
  }
  for (const auto& [name, given] : flags) require(given, std::string("missing ") + name);
}

void add_seed_option(CLI::App* sub, std::uint64_t& seed) {
  sub->add_option("--seed", seed, "Random seed (falls back to $PMP_SEED, then 0)")
      ->envname("PMP_SEED")
      ->capture_default_str();
}

void add_blot_options(CLI::App* sub, BlotConfig& blot) {
  sub->add_option("--k", blot.iterations, "Perturb-and-walk rounds")->capture_default_str();
  sub->add_option("--phi", blot.kld_threshold, "Color divergence acceptance bound")
      ->capture_default_str();
  sub->add_option("--delta", blot.iou_threshold, "Blob IoU acceptance bound")
      ->capture_default_str();
  sub->add_option("--tau-rw", blot.tau_rw, "Walker probability needed to label a pixel")
      ->capture_default_str();
  sub->add_option("--beta", blot.walker.beta, "Walker edge contrast")->capture_default_str();
  sub->add_option("--theta0", blot.rotation_base_deg, "Rotation range per round (degrees)")
      ->capture_default_str();
  sub->add_option("--s0", blot.translation_base, "Shift range per round (fraction of min side)")
      ->capture_default_str();
  sub->add_option("--bins", blot.histogram_bins, "Histogram bins per channel")
      ->capture_default_str();
  sub->add_option("--walker-tol", blot.walker.tolerance, "Walker relative residual")
      ->capture_default_str();
  sub->add_option("--walker-max-iter", blot.walker.max_iterations, "Walker iteration cap")
      ->capture_default_str();
  sub->add_option_function<std::string>(
         "--walker-preconditioner",
         [&blot](const std::string& v) {
           blot.walker.preconditioner = parse_walker_preconditioner(v);
         },
         "jacobi | mic (modified incomplete Cholesky)")
      ->check(CLI::IsMember({"jacobi", "mic"}))
      ->default_str(std::string(to_string(blot.walker.preconditioner)));
}

struct ExpansionOptions {
  std::string loss_file;
  std::string state_file;
  double eta = kDefaultExpansionUpper;
  double omega = kDefaultExpansionLower;
};

void add_expansion_options(CLI::App* sub, ExpansionOptions& o) {
  auto* losses = sub->add_option("--epoch-loss-file", o.loss_file,
                                 "Epoch losses, one per line, replayed into the expansion state")
                     ->check(CLI::ExistingFile);
  auto* state = sub->add_option("--state", o.state_file, "Saved expansion state")
                    ->check(CLI::ExistingFile);
  losses->excludes(state);
  sub->add_option("--eta", o.eta, "Largest expansion step per epoch")->capture_default_str();
  sub->add_option("--omega", o.omega, "Most negative expansion step per epoch")
      ->capture_default_str();
}

ExpansionState load_expansion(const ExpansionOptions& o) {
  if (!o.state_file.empty()) {
    return load(o.state_file, [&](const fs::path& p) {
      return parse_expansion_state(read_text(p), o.eta, o.omega);
    });
  }
  ExpansionState state = make_expansion_state(o.eta, o.omega);
  if (o.loss_file.empty()) return state;
  const auto losses =
      load(o.loss_file, [](const fs::path& p) { return parse_losses(read_text(p), p.string()); });
  return update_all(state, losses);
}

RefineConfig load_refine_config(const std::string& variant, const std::string& layers_file,
                                bool no_cap) {
  RefineConfig config;
  config.options.variant = parse_kernel_variant(variant);
  config.options.cap_dilation = !no_cap;
  if (!layers_file.empty()) {
    config.layers =
        load(layers_file, [](const fs::path& p) { return parse_pac_layers(read_text(p)); });
  }
  return config;
}

RasterImage load_image(const fs::path& p) { return io::read_image(p); }

PointSet load_points(const fs::path& p, int classes) {
  return load(p, [classes](const fs::path& q) { return io::read_points(q, classes); });
}

PlaneStack load_stack(const fs::path& p) {
  return load(p, [](const fs::path& q) { return io::read_score_stack(q); });
}

LabelMask load_mask(const fs::path& p) {
  return load(p, [](const fs::path& q) { return io::read_mask(q); });
}

// ---------------------------------------------------------------------------
// blot

struct BlotCommand {
  std::string image, points, out, dump_probs;
  int classes = 0;
  std::uint64_t seed = 0;
  BlotConfig blot;
  BatchOptions batch;

  void attach(CLI::App* sub) {
    sub->add_option("--image", image, "Input image (PNG or PPM)");
    sub->add_option("--points", points, "Point annotations");
    sub->add_option("--classes", classes, "Number of object classes C")->required();
    sub->add_option("--out", out, "Blot mask (PGM)");
    sub->add_option("--dump-probs", dump_probs, "Write initial walker probabilities (PMSM)");
    add_seed_option(sub, seed);
    add_blot_options(sub, blot);
    add_batch_options(sub, batch, "image points");
  }

  void one(const fs::path& image_path, const fs::path& points_path, const fs::path& out_path,
           const fs::path& probs_path, std::uint64_t stream_seed) const {
    const RasterImage img = load_image(image_path);
    const PointSet pts = load_points(points_path, classes);
    pts.check_bounds(img.height(), img.width());
    BlotConfig config = blot;
    config.rng_seed = stream_seed;
    if (!probs_path.empty()) {
      const ProbabilityStack probs = solve_walker(img, pts, config.walker);
      PlaneStack full(classes + 1, img.height(), img.width());
      for (std::size_t i = 0; i < probs.classes.size(); ++i) {
        const auto src = probs.planes.plane(static_cast<int>(i));
        auto dst = full.plane(probs.classes[i] - 1);
        std::copy(src.begin(), src.end(), dst.begin());
      }
      io::write_score_stack(probs_path, full);
    }
    io::write_mask(out_path, generate_blots(img, pts, config).mask);
  }

  int execute(std::ostream& err) const {
    require_single(batch, {{"--image", !image.empty()}, {"--points", !points.empty()},
                           {"--out", !out.empty()}});
    if (!batch.active()) {
      one(image, points, out, dump_probs, seed);
      return kExitOk;
    }
    const auto entries = read_manifest(batch.manifest, 2);
    return run_entries(entries, batch.jobs, batch.manifest, [&](const ManifestEntry& e) {
      const fs::path probs =
          dump_probs.empty() ? fs::path{} : derived_output(batch.out_dir, e.paths[0], "_probs.pmsm");
      one(e.paths[0], e.paths[1], derived_output(batch.out_dir, e.paths[0], "_blot.pgm"), probs,
          derive_seed(seed, e.paths[0].string()));
    }, err);
  }
};

// ---------------------------------------------------------------------------
// fields

struct FieldsCommand {
  std::string points, image, out, stage = "expanded", normalization = "diagonal";
  int classes = 0, height = 0, width = 0;
  ExpansionOptions expansion;
  BatchOptions batch;

  void attach(CLI::App* sub) {
    sub->add_option("--points", points, "Point annotations");
    sub->add_option("--classes", classes, "Number of object classes C")->required();
    auto* img = sub->add_option("--image", image, "Image whose size sets the field size");
    auto* h = sub->add_option("--height", height, "Field height")->check(CLI::PositiveNumber);
    auto* w = sub->add_option("--width", width, "Field width")->check(CLI::PositiveNumber);
    img->excludes(h)->excludes(w);
    h->needs(w);
    w->needs(h);
    sub->add_option("--stage", stage, "raw | confidence | aggregated | expanded")
        ->check(CLI::IsMember({"raw", "confidence", "aggregated", "expanded"}))
        ->capture_default_str();
    sub->add_option("--normalization", normalization, "diagonal | plane-max")
        ->check(CLI::IsMember({"diagonal", "plane-max"}))
        ->capture_default_str();
    sub->add_option("--out", out, "Field stack (PMSM)");
    add_expansion_options(sub, expansion);
    add_batch_options(sub, batch, "image points");
  }

  void one(const PointSet& pts, int h, int w, const ExpansionState& state,
           const fs::path& out_path) const {
    const FieldNormalization norm = parse_field_normalization(normalization);
    FieldStack fields = compute_distance_fields(pts, h, w);
    if (stage != "raw") fields = to_confidence(fields, norm);
    if (stage == "aggregated" || stage == "expanded") fields = aggregate(fields);
    if (stage == "expanded") fields = apply(fields, state);
    io::write_score_stack(out_path, fields.planes);
  }

  int execute(std::ostream& err) const {
    const ExpansionState state = load_expansion(expansion);
    if (!batch.active()) {
      require_single(batch, {{"--points", !points.empty()}, {"--out", !out.empty()},
                             {"--image or --height/--width", !image.empty() || height > 0}});
      int h = height, w = width;
      if (!image.empty()) {
        const RasterImage img = load_image(image);
        h = img.height();
        w = img.width();
      }
      one(load_points(points, classes), h, w, state, out);
      return kExitOk;
    }
    require_single(batch, {});
    const auto entries = read_manifest(batch.manifest, 2);
    return run_entries(entries, batch.jobs, batch.manifest, [&](const ManifestEntry& e) {
      const RasterImage img = load_image(e.paths[0]);
      one(load_points(e.paths[1], classes), img.height(), img.width(), state,
          derived_output(batch.out_dir, e.paths[0], "_fields.pmsm"));
    }, err);
  }
};

// ---------------------------------------------------------------------------
// refine

struct RefineCommand {
  std::string scores, image, out, variant = "exp-ratio", layers;
  bool no_cap = false;
  BatchOptions batch;

  void attach(CLI::App* sub) {
    sub->add_option("--scores", scores, "Score stack (PMSM)");
    sub->add_option("--image", image, "Guidance image (PNG or PPM)");
    sub->add_option("--out", out, "Refined score stack (PMSM)");
    sub->add_option("--variant", variant, "exp-ratio | literal")
        ->check(CLI::IsMember({"exp-ratio", "literal"}))
        ->capture_default_str();
    sub->add_option("--layers", layers, "Layer file, one 'kernel dilation stride' per line")
        ->check(CLI::ExistingFile);
    sub->add_flag("--no-dilation-cap", no_cap, "Use dilations as given on small maps");
    add_batch_options(sub, batch, "image scores");
  }

  int execute(std::ostream& err) const {
    const RefineConfig config = load_refine_config(variant, layers, no_cap);
    auto one = [&](const fs::path& img, const fs::path& sc, const fs::path& dst) {
      io::write_score_stack(dst, refine(load_stack(sc), load_image(img), config));
    };
    require_single(batch, {{"--scores", !scores.empty()}, {"--image", !image.empty()},
                           {"--out", !out.empty()}});
    if (!batch.active()) {
      one(image, scores, out);
      return kExitOk;
    }
    const auto entries = read_manifest(batch.manifest, 2);
    return run_entries(entries, batch.jobs, batch.manifest, [&](const ManifestEntry& e) {
      one(e.paths[0], e.paths[1], derived_output(batch.out_dir, e.paths[0], "_refined.pmsm"));
    }, err);
  }
};

// ---------------------------------------------------------------------------
// pseudomask

fs::path sibling(const fs::path& path, const std::string& suffix) {
  return path.parent_path() / (path.stem().string() + suffix);
}

struct PseudomaskCommand {
  std::string image, points, scores, out, provenance_out, overlay_out, state_out;
  std::string variant = "exp-ratio", layers, normalization = "diagonal";
  int classes = 0;
  double threshold = kDefaultMaskThreshold, alpha = 0.5;
  bool no_blots = false, no_fields = false, no_refiner = false, no_cap = false;
  std::uint64_t seed = 0;
  BlotConfig blot;
  ExpansionOptions expansion;
  BatchOptions batch;

  void attach(CLI::App* sub) {
    sub->add_option("--image", image, "Input image (PNG or PPM)");
    sub->add_option("--points", points, "Point annotations");
    sub->add_option("--scores", scores, "Network score stack (PMSM)");
    sub->add_option("--classes", classes, "Number of object classes C")->required();
    sub->add_option("--out", out, "Pseudo-mask (PGM)");
    sub->add_option("--provenance-out", provenance_out,
                    "Provenance map (PGM: 0 ignore, 1 thresholded, 2 blot); "
                    "default <out>_provenance.pgm");
    sub->add_option("--overlay-out", overlay_out, "RGBA overlay of the mask (PNG)");
    sub->add_option("--alpha", alpha, "Overlay tint weight")->capture_default_str();
    sub->add_option("--state-out", state_out, "Write the expansion state used");
    sub->add_option("--threshold", threshold, "Pseudo-mask threshold")->capture_default_str();
    sub->add_flag("--no-blots", no_blots, "Use bare points instead of blots");
    sub->add_flag("--no-fields", no_fields, "Skip distance fields");
    sub->add_flag("--no-refiner", no_refiner, "Skip the refiner");
    sub->add_option("--variant", variant, "Refiner kernel: exp-ratio | literal")
        ->check(CLI::IsMember({"exp-ratio", "literal"}))
        ->capture_default_str();
    sub->add_option("--layers", layers, "Refiner layer file")->check(CLI::ExistingFile);
    sub->add_flag("--no-dilation-cap", no_cap, "Use dilations as given on small maps");
    sub->add_option("--normalization", normalization, "diagonal | plane-max")
        ->check(CLI::IsMember({"diagonal", "plane-max"}))
        ->capture_default_str();
    add_seed_option(sub, seed);
    add_blot_options(sub, blot);
    add_expansion_options(sub, expansion);
    add_batch_options(sub, batch, "image points scores");
  }

  int execute(std::ostream& err) const {
    PipelineConfig config;
    config.use_blots = !no_blots;
    config.use_fields = !no_fields;
    config.use_refiner = !no_refiner;
    config.threshold = threshold;
    config.normalization = parse_field_normalization(normalization);
    config.blot = blot;
    config.refine = load_refine_config(variant, layers, no_cap);
    const ExpansionState state = load_expansion(expansion);
    if (!state_out.empty()) io::write_text_atomic(state_out, serialize(state));

    auto one = [&](const fs::path& img_path, const fs::path& pts_path, const fs::path& sc_path,
                   const fs::path& mask_path, const fs::path& prov_path,
                   const fs::path& overlay_path, std::uint64_t stream_seed) {
      const RasterImage img = load_image(img_path);
      const PointSet pts = load_points(pts_path, classes);
      const ScoreStack sc = load_stack(sc_path);
      PipelineConfig c = config;
      c.blot.rng_seed = stream_seed;
      PipelineResult result;
      try {
        result = run_pipeline(img, pts, sc, state, c);
      } catch (const Error& e) {
        throw with_context(e, img_path.string());
      }
      io::write_mask(mask_path, result.mask.labels);
      io::write_mask(prov_path, result.mask.provenance);
      if (!overlay_path.empty()) {
        const ImageBuffer rgba = render_overlay(img, result.mask.labels, classes, alpha);
        io::write_png(overlay_path, rgba.height, rgba.width, rgba.channels, rgba.samples);
      }
    };

    require_single(batch, {{"--image", !image.empty()}, {"--points", !points.empty()},
                           {"--scores", !scores.empty()}, {"--out", !out.empty()}});
    if (!batch.active()) {
      one(image, points, scores, out,
          provenance_out.empty() ? sibling(out, "_provenance.pgm") : fs::path(provenance_out),
          overlay_out, seed);
      return kExitOk;
    }
    const auto entries = read_manifest(batch.manifest, 3);
    return run_entries(entries, batch.jobs, batch.manifest, [&](const ManifestEntry& e) {
      const fs::path& src = e.paths[0];
      one(src, e.paths[1], e.paths[2], derived_output(batch.out_dir, src, "_mask.pgm"),
          derived_output(batch.out_dir, src, "_provenance.pgm"),
          overlay_out.empty() ? fs::path{} : derived_output(batch.out_dir, src, "_overlay.png"),
          derive_seed(seed, src.string()));
    }, err);
  }
};

// ---------------------------------------------------------------------------
// eval

struct EvalCommand {
  std::string pred_dir, gt_dir, out, csv;
  int classes = 0;

  void attach(CLI::App* sub) {
    sub->add_option("--pred-dir", pred_dir, "Predicted masks (PGM)")
        ->required()
        ->check(CLI::ExistingDirectory);
    sub->add_option("--gt-dir", gt_dir, "Ground-truth masks (PGM), matched by file name")
        ->required()
        ->check(CLI::ExistingDirectory);
    sub->add_option("--classes", classes, "Number of object classes C")->required();
    sub->add_option("--out", out, "Text report");
    sub->add_option("--csv", csv, "CSV report");
  }

  int execute(std::ostream& stdout_stream) const {
    std::vector<fs::path> truths;
    for (const auto& entry : fs::directory_iterator(gt_dir)) {
      if (entry.is_regular_file() && entry.path().extension() == ".pgm") {
        truths.push_back(entry.path());
      }
    }
    std::sort(truths.begin(), truths.end());
    if (truths.empty()) throw Error(ErrorCode::kMissingFile, gt_dir + ": no .pgm masks");
    ConfusionMatrix matrix(classes);
    for (const fs::path& gt_path : truths) {
      const fs::path pred_path = fs::path(pred_dir) / gt_path.filename();
      const LabelMask gt = load_mask(gt_path);
      const LabelMask pred = load_mask(pred_path);
      try {
        check_labels(gt, classes);
        check_labels(pred, classes);
        accumulate(matrix, pred, gt);
      } catch (const Error& e) {
        throw with_context(e, gt_path.filename().string());
      }
    }
    const IouReport report = miou(matrix);
    const std::string text = "images: " + std::to_string(truths.size()) + "\n" +
                             format_report(report);
    stdout_stream << text;
    if (!out.empty()) io::write_text_atomic(out, text);
    if (!csv.empty()) io::write_text_atomic(csv, format_report_csv(report));
    return kExitOk;
  }
};

// ---------------------------------------------------------------------------
// simulate

struct SimulateCommand {
  int scenes = 50, epochs = 10;
  std::uint64_t seed = 0;
  std::string out, loss = "halving", normalization;
  synthetic::SceneOptions scene = synthetic::ablation_scene_options();
  synthetic::EpochSchedule schedule_defaults = synthetic::ablation_schedule();
  double noise_start = 0.0, noise_end = 0.0;
  PipelineConfig pipeline = synthetic::ablation_pipeline();

  void attach(CLI::App* sub) {
    noise_start = schedule_defaults.score_noise.front();
    noise_end = schedule_defaults.score_noise.back();
    epochs = schedule_defaults.epochs;
    normalization = std::string(to_string(pipeline.normalization));
    sub->add_option("--scenes", scenes, "Number of synthetic scenes")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    sub->add_option("--epochs", epochs, "Simulated epochs")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    add_seed_option(sub, seed);
    sub->add_option("--out", out, "CSV report")->required();
    sub->add_option("--size", scene.height, "Scene side length")->capture_default_str();
    sub->add_option("--scene-classes", scene.num_classes, "Object classes per scene set")
        ->capture_default_str();
    sub->add_option("--texture", scene.texture, "Texture noise amplitude")->capture_default_str();
    sub->add_option("--two-part", scene.two_part_fraction, "Share of two-part shapes")
        ->capture_default_str();
    sub->add_option("--noise-start", noise_start, "Score noise in the first epoch")
        ->capture_default_str();
    sub->add_option("--noise-end", noise_end, "Score noise in the last epoch")
        ->capture_default_str();
    sub->add_option("--loss", loss, "halving | cross-entropy")
        ->check(CLI::IsMember({"halving", "cross-entropy"}))
        ->capture_default_str();
    sub->add_option("--normalization", normalization, "diagonal | plane-max")
        ->check(CLI::IsMember({"diagonal", "plane-max"}))
        ->capture_default_str();
  }

  int execute(std::ostream& stdout_stream) const {
    synthetic::SceneOptions options = scene;
    options.width = options.height;
    const double scale =
        static_cast<double>(options.height) / synthetic::ablation_scene_options().height;
    options.min_radius *= scale;
    options.max_radius *= scale;
    synthetic::SimulationConfig config;
    config.pipeline = pipeline;
    config.pipeline.normalization = parse_field_normalization(normalization);
    config.master_seed = seed;
    const auto schedule = synthetic::make_schedule(
        epochs, noise_start, noise_end,
        loss == "halving" ? synthetic::LossMode::kHalving : synthetic::LossMode::kCrossEntropy);
    const auto set = synthetic::generate_scenes(scenes, seed, options);
    const auto report = synthetic::simulate_epochs(set, schedule, config);
    io::write_text_atomic(out, report.to_csv());
    for (const auto& row : report.rows) {
      if (row.epoch != epochs) continue;
      stdout_stream << synthetic::to_string(row.variant) << " " << row.mean_miou << "\n";
    }
    return kExitOk;
  }
};

// ---------------------------------------------------------------------------
// overlay

struct OverlayCommand {
  std::string image, mask, field, out;
  int classes = 0, plane = -1;
  double alpha = 0.5;
  BatchOptions batch;

  void attach(CLI::App* sub) {
    auto* img = sub->add_option("--image", image, "Base image (PNG or PPM)");
    auto* msk = sub->add_option("--mask", mask, "Label mask (PGM)");
    auto* fld = sub->add_option("--field", field, "Stack to render as a heatmap (PMSM)");
    auto* pl = sub->add_option("--plane", plane, "Heatmap plane, 1-based class id");
    sub->add_option("--classes", classes, "Number of object classes C (mask mode)");
    sub->add_option("--alpha", alpha, "Tint weight")->capture_default_str();
    sub->add_option("--out", out, "Output PNG");
    fld->excludes(msk)->excludes(img)->needs(pl);
    pl->needs(fld);
    add_batch_options(sub, batch, "image mask");
  }

  void render(const fs::path& img_path, const fs::path& mask_path, const fs::path& dst) const {
    const RasterImage img = load_image(img_path);
    const LabelMask m = load_mask(mask_path);
    ImageBuffer rgba;
    try {
      rgba = render_overlay(img, m, classes, alpha);
    } catch (const Error& e) {
      throw with_context(e, mask_path.string());
    }
    io::write_png(dst, rgba.height, rgba.width, rgba.channels, rgba.samples);
  }

  int execute(std::ostream& err) const {
    if (!field.empty()) {
      require(!batch.active(), "--field does not combine with --manifest");
      require(!out.empty(), "missing --out");
      const PlaneStack stack = load_stack(field);
      if (plane < 1 || plane > stack.num_planes()) {
        throw Error(ErrorCode::kOutOfRange, "--plane must lie in 1.." +
                                                std::to_string(stack.num_planes()));
      }
      const ImageBuffer rgb = render_heatmap(stack.plane_grid(plane - 1));
      io::write_png(out, rgb.height, rgb.width, rgb.channels, rgb.samples);
      return kExitOk;
    }
    require(classes > 0, "mask overlays need --classes");
    require_single(batch, {{"--image", !image.empty()}, {"--mask", !mask.empty()},
                           {"--out", !out.empty()}});
    if (!batch.active()) {
      render(image, mask, out);
      return kExitOk;
    }
    const auto entries = read_manifest(batch.manifest, 2);
    return run_entries(entries, batch.jobs, batch.manifest, [&](const ManifestEntry& e) {
      render(e.paths[0], e.paths[1], derived_output(batch.out_dir, e.paths[0], "_overlay.png"));
    }, err);
  }
};

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

bool flag_given(const std::vector<std::string>& args, std::size_t from, const std::string& key) {
  const std::string flag = "--" + key;
  for (std::size_t i = from; i < args.size(); ++i) {
    if (args[i] == flag || args[i].starts_with(flag + "=")) return true;
  }
  return false;
}

// Splices `--key=value` for every config entry not already given as a flag right after
// the subcommand name. Blank values and the config key itself are skipped.
std::vector<std::string> expand_config(const std::vector<std::string>& args, const CLI::App& app) {
  std::size_t sub_at = 1;
  while (sub_at < args.size() && !app.get_subcommand_no_throw(args[sub_at])) ++sub_at;
  if (sub_at >= args.size()) return args;
  std::string config;
  for (std::size_t i = sub_at + 1; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) config = args[i + 1];
    if (args[i].starts_with("--config=")) config = args[i].substr(9);
  }
  if (config.empty()) return args;
  std::string text;
  try {
    text = read_text(config);
  } catch (const Error& e) {
    throw with_context(e, "--config");
  }
  std::vector<std::string> extra;
  std::istringstream in(text);
  std::string line;
  for (int line_no = 1; std::getline(in, line); ++line_no) {
    const std::string body = trim(line);
    if (body.empty() || body.front() == '#' || body.front() == ';' || body.front() == '[') continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::kParseError,
                  config + ":" + std::to_string(line_no) + ": expected 'key = value'");
    }
    const std::string key = trim(std::string_view(body).substr(0, eq));
    std::string value = trim(std::string_view(body).substr(eq + 1));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') {
      value = value.substr(1, value.size() - 2);
    }
    if (key.empty()) {
      throw Error(ErrorCode::kParseError, config + ":" + std::to_string(line_no) + ": empty key");
    }
    if (key == "config" || value.empty() || flag_given(args, sub_at + 1, key)) continue;
    extra.push_back("--" + key + "=" + value);
  }
  std::vector<std::string> out(args.begin(), args.begin() + static_cast<std::ptrdiff_t>(sub_at) + 1);
  out.insert(out.end(), extra.begin(), extra.end());
  out.insert(out.end(), args.begin() + static_cast<std::ptrdiff_t>(sub_at) + 1, args.end());
  return out;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Pseudo-masks from point annotations"};
  app.name(args.empty() ? "pmp" : fs::path(args[0]).filename().string());
  app.set_version_flag("--version", PMP_VERSION);
  app.require_subcommand(1, 1);

  BlotCommand blot;
  FieldsCommand fields;
  RefineCommand refine_cmd;
  PseudomaskCommand pseudomask;
  EvalCommand eval;
  SimulateCommand simulate;
  OverlayCommand overlay;

  std::string config_path;
  struct Entry {
    CLI::App* sub;
    std::function<int(std::ostream&, std::ostream&)> execute;
  };
  std::vector<Entry> commands;
  auto add = [&](const char* name, const char* description, auto& command, bool uses_stdout) {
    CLI::App* sub = app.add_subcommand(name, description);
    sub->add_option("--config", config_path, "Line-oriented 'key = value' defaults; flags win")
        ->check(CLI::ExistingFile);
    command.attach(sub);
    commands.push_back({sub, [&command, uses_stdout](std::ostream& o, std::ostream& e) {
                          return command.execute(uses_stdout ? o : e);
                        }});
  };
  add("blot", "Grow point blots by perturb-and-walk", blot, false);
  add("fields", "Distance-field stacks from points", fields, false);
  add("refine", "Pixel-adaptive refinement of a score stack", refine_cmd, false);
  add("pseudomask", "Full pipeline: blots, fields, refinement, thresholding", pseudomask, false);
  add("eval", "mIoU of predicted masks against ground truth", eval, true);
  add("simulate", "Synthetic multi-epoch ablation run", simulate, true);
  add("overlay", "Render a mask overlay or a field heatmap", overlay, false);

  std::vector<std::string> expanded;
  try {
    expanded = expand_config(args, app);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitInputError;
  }
  std::vector<const char*> argv;
  argv.reserve(expanded.size() + 1);
  for (const std::string& a : expanded) argv.push_back(a.c_str());
  if (argv.empty()) argv.push_back("pmp");
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitInputError;
  }

  for (const Entry& command : commands) {
    if (!command.sub->parsed()) continue;
    err << "# pmp " << PMP_VERSION << " " << command.sub->get_name() << "\n"
        << command.sub->config_to_str(true, false);
    try {
      return command.execute(out, err);
    } catch (const UsageError& e) {
      err << "error: " << e.what() << "\n" << command.sub->help();
      return kExitInputError;
    } catch (const Error& e) {
      err << "error: " << e.what() << "\n";
      return e.code() == ErrorCode::kSolverDiverged ? kExitInternalError : kExitInputError;
    } catch (const std::exception& e) {
      err << "internal error: " << e.what() << "\n";
      return kExitInternalError;
    }
  }
  return kExitInternalError;
}

}  // namespace pmp::cli
