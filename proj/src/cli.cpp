#include "rdd/cli.hpp"

#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>

#include "CLI11.hpp"

#include "fileio.hpp"
#include "rdd/dataset.hpp"
#include "rdd/errors.hpp"
#include "rdd/io.hpp"
#include "rdd/metrics.hpp"
#include "rdd/postprocess.hpp"
#include "rdd/report.hpp"
#include "rdd/synth.hpp"
#include "text.hpp"

namespace rdd {

namespace fs = std::filesystem;

namespace {

constexpr const char* kProgram = "rdd-bench";

/// Flag values that break a module invariant; reported like a parse error.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Common {
  std::string output = "-";
  unsigned jobs = 1;
};

struct SubsetFlags {
  std::string split_file;
  std::vector<std::string> parts;
};

void add_subset_flags(CLI::App* cmd, SubsetFlags& f) {
  cmd->add_option("--split", f.split_file, "Split file from `split`; restricts the image set");
  cmd->add_option("--parts", f.parts,
                  "Partitions of --split to use, e.g. train,val for the T+V composition")
      ->delimiter(',')
      ->check(CLI::IsMember({"train", "val", "test"}))
      ->default_str("train,val,test");
}

void add_common_flags(CLI::App* cmd, Common& c, bool with_jobs) {
  cmd->add_option("-o,--output", c.output, "Machine-readable output file, '-' for stdout")
      ->capture_default_str();
  if (with_jobs) {
    cmd->add_option("--jobs", c.jobs, "Worker threads; output does not depend on it")
        ->capture_default_str()
        ->check(CLI::Range(1u, 64u));
  }
}

const CLI::Validator kUnitOpenClosed(
    [](std::string& s) -> std::string {
      const auto v = detail::parse_double(s);
      if (!v || !(*v > 0.0 && *v <= 1.0)) return "value must lie in (0, 1]";
      return {};
    },
    "(0,1]");

void emit(const Common& c, const std::string& text, std::ostream& out) {
  if (c.output == "-") {
    out << text;
    out.flush();
  } else {
    detail::write_file(c.output, text);
  }
}

DatasetIndex load_index(const std::string& root, unsigned jobs, std::ostream& err) {
  if (root.empty()) throw UsageError("--root is required (or set RDD_BENCH_ROOT)");
  auto scan = scan_dataset(root, jobs);
  if (!scan.skipped.empty()) {
    err << "skipped " << scan.skipped.size() << " of " << scan.files_seen << " files:\n";
    for (const auto& s : scan.skipped) err << "  " << s.path << ": " << s.reason << "\n";
  }
  return std::move(scan.index);
}

/// Ids selected by --split/--parts, or every id of the index.
std::vector<std::string> subset_ids(const SubsetFlags& f, const DatasetIndex& index) {
  if (f.split_file.empty()) {
    if (!f.parts.empty()) throw UsageError("--parts requires --split");
    std::vector<std::string> ids;
    for (const auto& r : index.records()) ids.push_back(r.image_id);
    return ids;
  }
  const auto assignment = read_split_file(f.split_file);
  std::set<Partition> parts;
  for (const auto& p : f.parts) parts.insert(*parse_partition(p));
  if (parts.empty()) parts = {Partition::Train, Partition::Val, Partition::Test};
  return compose(assignment, parts);
}

std::vector<ImageRecord> normalized_subset(const SubsetFlags& f, const DatasetIndex& index) {
  std::vector<ImageRecord> out;
  for (const auto& id : subset_ids(f, index)) out.push_back(normalize_labels(index.at(id)).record);
  return out;
}

ScoreModel parse_score_model(const std::string& text) {
  const auto parts = detail::split(text, ':');
  const auto in_unit = [](const std::optional<double>& v) { return v && *v >= 0.0 && *v <= 1.0; };
  if (parts.size() == 1) {
    const auto v = detail::parse_double(parts[0]);
    if (!in_unit(v)) throw UsageError("--score: expected a value in [0, 1], got '" + text + "'");
    return ScoreModel::constant(*v);
  }
  if (parts.size() == 2) {
    const auto lo = detail::parse_double(parts[0]);
    const auto hi = detail::parse_double(parts[1]);
    if (!in_unit(lo) || !in_unit(hi) || *lo > *hi) {
      throw UsageError("--score: expected LO:HI within [0, 1], got '" + text + "'");
    }
    return ScoreModel::uniform(*lo, *hi);
  }
  throw UsageError("--score: expected VALUE or LO:HI, got '" + text + "'");
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Dataset and evaluation tooling for multi-country road damage detection.", kProgram};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Help for every subcommand");

  Common common;
  SubsetFlags subset;
  std::string root;
  const auto add_root = [&](CLI::App* cmd) {
    cmd->add_option("--root", root, "Annotation tree of VOC XML files")->envname("RDD_BENCH_ROOT");
  };

  // stats
  auto* stats = app.add_subcommand("stats", "Per-country image counts and per-class annotation counts");
  add_root(stats);
  add_subset_flags(stats, subset);
  add_common_flags(stats, common, true);

  // split
  std::uint64_t seed = 0;
  std::vector<double> ratios{0.80, 0.15, 0.05};
  auto* split = app.add_subcommand("split", "Seeded per-country train/val/test split");
  add_root(split);
  split->add_option("--seed", seed, "Shuffle seed")->capture_default_str();
  split->add_option("--ratios", ratios, "Train,val,test ratios summing to 1")
      ->delimiter(',')
      ->expected(3)
      ->default_str("0.80,0.15,0.05");
  add_common_flags(split, common, true);

  // eval
  std::string dets_path;
  double iou_threshold = 0.5;
  std::string averaging = "micro";
  bool with_ap = false;
  std::string plot_path;
  std::vector<double> sweep_grid;
  std::size_t sweep_top_k = 0;
  auto* eval = app.add_subcommand("eval", "Score detections against ground truth (F1, optional AP)");
  add_root(eval);
  add_subset_flags(eval, subset);
  eval->add_option("--dets", dets_path, "Detections, one JSON object per line")->required();
  eval->add_option("--iou", iou_threshold, "IoU threshold for a true positive")
      ->capture_default_str()
      ->check(kUnitOpenClosed);
  eval->add_option("--averaging", averaging, "micro pools counts over images; macro averages per-image F1")
      ->capture_default_str()
      ->check(CLI::IsMember({"micro", "macro"}));
  eval->add_flag("--ap", with_ap, "Add per-class AP averaged over IoU 0.50:0.05:0.95");
  eval->add_option("--summary-plot", plot_path, "Write a per-class F1/AP bar chart (SVG)");
  eval->add_option("--sweep-grid", sweep_grid,
                   "Ascending confidence thresholds; adds an F1-vs-threshold curve to the report")
      ->delimiter(',');
  eval->add_option("--sweep-top-k", sweep_top_k, "Per-image cap applied during the sweep, 0 = none")
      ->capture_default_str();
  add_common_flags(eval, common, true);

  // post
  double min_score = 0.7;
  std::size_t top_k = 5;
  auto* post = app.add_subcommand("post", "Confidence filter followed by per-image top-k");
  post->add_option("--dets", dets_path, "Detections, one JSON object per line")->required();
  post->add_option("--min-score", min_score, "Keep detections with score >= this value")
      ->capture_default_str()
      ->check(CLI::Range(0.0, 1.0));
  post->add_option("--top-k", top_k, "Keep at most this many detections per image, 0 = no cap")
      ->capture_default_str();
  add_common_flags(post, common, false);

  // submit
  std::string labels = "code";
  bool include_empty = false;
  auto* submit = app.add_subcommand("submit", "Write submission rows from post-processed detections");
  add_root(submit);
  add_subset_flags(submit, subset);
  submit->add_option("--dets", dets_path, "Detections, one JSON object per line")->required();
  submit->add_option("--labels", labels, "code writes D00..D40; index writes 1..4")
      ->capture_default_str()
      ->check(CLI::IsMember({"code", "index"}));
  submit->add_flag("--include-empty", include_empty,
                   "Also write rows for images without detections (needs --root)");
  add_common_flags(submit, common, true);

  // synth
  PerturbParams params;
  std::size_t drop_every = 0;
  std::string score_text = "1.0";
  auto* synth = app.add_subcommand("synth", "Synthetic detections from ground truth with controlled errors");
  add_root(synth);
  add_subset_flags(synth, subset);
  synth->add_option("--jitter", params.jitter, "Max per-coordinate displacement in pixels")
      ->capture_default_str()
      ->check(CLI::NonNegativeNumber);
  synth->add_option("--drop-every", drop_every, "Drop every k-th box of each image, 0 = none")
      ->capture_default_str();
  synth->add_option("--fp-per-image", params.fp_per_image, "False boxes added to each image")
      ->capture_default_str();
  synth->add_option("--score", score_text, "Constant score VALUE or uniform range LO:HI")
      ->capture_default_str();
  synth->add_option("--seed", params.seed, "Generator seed")->capture_default_str();
  add_common_flags(synth, common, true);

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    if (stats->parsed()) {
      const auto full = load_index(root, common.jobs, err);
      const DatasetIndex index(full.select(subset_ids(subset, full)));
      std::vector<std::string> ids;
      for (const auto& r : index.records()) ids.push_back(r.image_id);
      const auto hist = class_histogram(index, ids);
      emit(common, histogram_to_json(hist, index), out);
      err << histogram_to_table(hist, index);
    } else if (split->parsed()) {
      SplitSpec spec;
      std::copy(ratios.begin(), ratios.end(), spec.ratios.begin());
      spec.seed = seed;
      try {
        spec.validate();
      } catch (const ContractError& e) {
        throw UsageError(std::string("--ratios: ") + e.what());
      }
      const auto index = load_index(root, common.jobs, err);
      const auto assignment = stratified_split(index, spec);
      emit(common, split_to_json(assignment), out);
      for (const auto& w : assignment.warnings) err << "warning: " << w << "\n";
      err << "train " << assignment.train.size() << ", val " << assignment.val.size() << ", test "
          << assignment.test.size() << " (seed " << seed << ")\n";
    } else if (eval->parsed()) {
      const auto index = load_index(root, common.jobs, err);
      const auto gts = normalized_subset(subset, index);
      const auto dets = read_detections(dets_path);
      EvalConfig config;
      config.iou_threshold = iou_threshold;
      config.averaging = *parse_averaging(averaging);
      config.compute_ap = with_ap || !plot_path.empty();
      config.jobs = common.jobs;
      const auto report = evaluate(dets, gts, config);
      std::optional<SweepResult> sweep;
      if (!sweep_grid.empty()) {
        if (!std::is_sorted(sweep_grid.begin(), sweep_grid.end())) {
          throw UsageError("--sweep-grid must be ascending");
        }
        std::optional<std::size_t> cap;
        if (sweep_top_k > 0) cap = sweep_top_k;
        sweep = sweep_threshold(dets, gts, sweep_grid, config, cap);
        err << "best confidence threshold " << detail::format_double(sweep->best_threshold) << "\n";
      }
      emit(common, report_to_json(report, sweep), out);
      if (!plot_path.empty()) detail::write_file(plot_path, report_to_svg(report));
      err << report_to_table(report);
    } else if (post->parsed()) {
      PostprocessConfig config;
      config.min_score = min_score;
      if (top_k == 0) config.top_k.reset();
      else config.top_k = top_k;
      const auto dets = read_detections(dets_path);
      const auto kept = postprocess(dets, config);
      std::ostringstream buf;
      write_detections(kept, buf);
      emit(common, buf.str(), out);
      err << "kept " << kept.size() << " of " << dets.size() << " detections\n";
    } else if (submit->parsed()) {
      const auto dets = read_detections(dets_path);
      SubmissionOptions options;
      options.include_empty = include_empty;
      if (include_empty) {
        const auto index = load_index(root, common.jobs, err);
        options.all_images = subset_ids(subset, index);
      }
      const auto encoding = labels == "index" ? LabelEncoding::index() : LabelEncoding::code();
      const auto rows = build_submission(dets, encoding, options);
      std::ostringstream buf;
      write_submission_rows(rows, buf);
      emit(common, buf.str(), out);
      err << "wrote " << rows.size() << " rows\n";
    } else if (synth->parsed()) {
      if (drop_every > 0) params.drop_every_k = drop_every;
      params.score = parse_score_model(score_text);
      const auto index = load_index(root, common.jobs, err);
      const auto gts = normalized_subset(subset, index);
      const auto result = perturb(gts, params);
      std::ostringstream buf;
      write_detections(result.detections, buf);
      emit(common, buf.str(), out);
      err << "generated " << result.detections.size() << " detections";
      if (result.jitter_fallbacks > 0) err << ", " << result.jitter_fallbacks << " unjittered";
      if (result.forced_overlaps > 0) err << ", " << result.forced_overlaps << " overlapping false boxes";
      err << "\n";
      try {
        const auto c = expected_counts(gts, params);
        err << "expected at IoU 0.5: tp " << c.tp << ", fp " << c.fp << ", fn " << c.fn << "\n";
      } catch (const UnsafeParamsError& e) {
        err << "no exact expectation: " << e.what() << "\n";
      }
    }
  } catch (const UsageError& e) {
    err << kProgram << ": usage error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    err << kProgram << ": " << e.category() << ": " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << kProgram << ": error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace rdd
