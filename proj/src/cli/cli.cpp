#include "pedeval/cli/cli.hpp"

#include <CLI11.hpp>
#include <httplib.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <vector>

#include "pedeval/cli/interp.hpp"
#include "pedeval/cli/manifest.hpp"
#include "pedeval/cli/plot.hpp"
#include "pedeval/cli/server.hpp"
#include "pedeval/cli/store.hpp"
#include "pedeval/dataio.hpp"
#include "pedeval/evaluator.hpp"
#include "pedeval/image.hpp"
#include "pedeval/oracle.hpp"
#include "pedeval/sanitizer.hpp"
#include "pedeval/synthetic.hpp"

namespace pedeval::cli {

namespace fs = std::filesystem;
using nlohmann::ordered_json;
using Files = std::map<std::string, std::string>;

namespace {

struct Options {
  std::string annotations;
  std::vector<std::string> detections;
  std::vector<std::string> labels;
  std::string fresh;
  std::string format = "canonical";
  std::string video;
  std::string subset = "reasonable";
  std::optional<double> height_min, height_max, occ_min, occ_max;
  std::optional<double> iou;
  std::optional<double> aspect;
  std::string fppi_range;
  std::string mode = "both";
  std::string variant = "O";
  std::string out;
  unsigned workers = 1;
  std::uint64_t seed = 0;
  int port = 8080;
  std::string host = "127.0.0.1";

  // eval
  std::optional<double> recall;
  std::optional<double> median_min_score;
  // oracle
  bool include_ignore = false;
  // sweep
  std::string ious = "0.3,0.4,0.5,0.6,0.7,0.8,0.9";
  // align
  std::optional<double> score_min;
  bool many_to_one = false;
  bool score_greedy = false;
  // correlates
  std::string images;
  std::string tags;
  double op_fppi = 0.1;
  int blur_taps = 9;
  // interp
  std::string amplitudes = "0,2,4,8";
  int period = 60;
  int stride = 30;
  int walk_frames = 120;
  double walk_height = 100.0;
  // synth
  SceneParams scene;
  double tp_score_lo = 0.0, tp_score_hi = 1.0, fp_score_lo = 0.0, fp_score_hi = 1.0;
};

int exit_code(ErrorCategory category) {
  switch (category) {
    case ErrorCategory::config: return 2;
    case ErrorCategory::parse: return 3;
    case ErrorCategory::io: return 4;
    case ErrorCategory::input: return 5;
    case ErrorCategory::empty_positive_set: return 6;
    case ErrorCategory::unreachable: return 7;
    case ErrorCategory::conflict: return 8;
  }
  return 1;
}

std::string one_line(std::string text) {
  std::replace(text.begin(), text.end(), '\n', ' ');
  return text;
}

std::string fixed2(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

double parse_double(std::string_view text, const std::string& what) {
  const std::string s(text);
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != s.size() || !std::isfinite(v)) {
    throw Error(ErrorCategory::config, what + ": not a finite number: '" + s + "'");
  }
  return v;
}

std::vector<double> parse_list(const std::string& text, const std::string& what) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_double(item, what));
  if (out.empty()) throw Error(ErrorCategory::config, what + ": empty list");
  return out;
}

std::optional<FppiRange> fppi_range(const Options& o) {
  if (o.fppi_range.empty()) return std::nullopt;
  const auto values = parse_list(o.fppi_range, "--fppi-range");
  if (values.size() != 2 || !(values[0] > 0.0) || !(values[0] < values[1])) {
    throw Error(ErrorCategory::config, "--fppi-range must be lo,hi with 0 < lo < hi");
  }
  return FppiRange{values[0], values[1]};
}

SubsetSpec subset_spec(const Options& o) {
  SubsetSpec spec = o.subset == "reasonable" ? SubsetSpec::reasonable() : SubsetSpec::all();
  if (o.height_min) spec.height_min = *o.height_min;
  if (o.height_max) spec.height_max = *o.height_max;
  if (o.occ_min) spec.occlusion_min = *o.occ_min;
  if (o.occ_max) spec.occlusion_max = *o.occ_max;
  if (o.iou) spec.iou_threshold = *o.iou;
  if (o.aspect) spec.aspect = AspectRatio(*o.aspect);
  spec.validate();
  return spec;
}

ordered_json subset_json(const SubsetSpec& s, const std::string& name) {
  ordered_json j;
  j["subset"] = name;
  j["height_min"] = format_number(s.height_min);
  j["height_max"] = format_number(s.height_max);
  j["occlusion_min"] = format_number(s.occlusion_min);
  j["occlusion_max"] = format_number(s.occlusion_max);
  j["iou"] = format_number(s.iou_threshold);
  j["aspect_normalize"] = s.aspect_normalize;
  j["aspect"] = format_number(s.aspect.value());
  return j;
}

void require(const std::string& value, const std::string& flag) {
  if (value.empty()) throw Error(ErrorCategory::config, flag + " is required");
}

AnnotationFormat annotation_format(const Options& o) {
  return *parse_annotation_format(o.format);
}

Dataset load_annotations(const std::string& path, const Options& o, Diagnostics& diag) {
  if (!fs::exists(path)) throw Error(ErrorCategory::io, "no such file or directory: " + path);
  return read_annotations(path, annotation_format(o), &diag);
}

std::vector<Detection> load_detections(const std::string& path, const Options& o, Diagnostics& diag) {
  if (!fs::exists(path)) throw Error(ErrorCategory::io, "no such file or directory: " + path);
  return read_detections(path, o.video.empty() ? std::nullopt : std::optional<std::string>(o.video), &diag);
}

Variant variant(const Options& o) { return *parse_variant(o.variant); }

std::string sanitize(const std::string& label) {
  std::string out;
  for (char c : label) out += std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' ? c : '_';
  return out;
}

std::vector<std::string> detector_labels(const Options& o) {
  if (!o.labels.empty() && o.labels.size() != o.detections.size()) {
    throw Error(ErrorCategory::config, "--label must be given once per --detections");
  }
  std::vector<std::string> labels;
  std::set<std::string> seen;
  for (std::size_t i = 0; i < o.detections.size(); ++i) {
    std::string label = o.labels.empty() ? fs::path(o.detections[i]).stem().string() : o.labels[i];
    if (label.empty()) label = "detector";
    std::string unique = label;
    for (int n = 2; !seen.insert(sanitize(unique)).second; ++n) unique = label + "_" + std::to_string(n);
    labels.push_back(unique);
  }
  return labels;
}

void commit(const Options& o, const Manifest& manifest, const Files& files) {
  const fs::path dir(o.out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCategory::io, "cannot create output directory " + dir.string() + ": " + ec.message());
  for (const auto& [name, content] : files) write_file(dir / name, content);
  write_file(dir / "manifest.json", manifest.render(files));
}

void print_warnings(const Diagnostics& diag, std::ostream& err) {
  for (const auto& w : diag.warnings) err << "warning: " << w << "\n";
}

// Each command loads and validates everything, then returns its files.

Files cmd_eval(const Options& o, Manifest& manifest, std::ostream& out, Diagnostics& diag) {
  require(o.annotations, "--annotations");
  if (o.detections.empty()) throw Error(ErrorCategory::config, "--detections is required");
  const SubsetSpec spec = subset_spec(o);
  const auto range = fppi_range(o);
  if (o.recall && !(*o.recall > 0.0 && *o.recall <= 1.0)) throw Error(ErrorCategory::config, "--recall must be in (0, 1]");
  const auto labels = detector_labels(o);
  const Dataset ds = load_annotations(o.annotations, o, diag);
  std::vector<std::vector<Detection>> runs;
  for (const auto& path : o.detections) runs.push_back(load_detections(path, o, diag));

  manifest.add_input("annotations", o.annotations);
  for (std::size_t i = 0; i < runs.size(); ++i) manifest.add_input("detections:" + labels[i], o.detections[i]);
  manifest.config()["spec"] = subset_json(spec, o.subset);
  manifest.config()["variant"] = o.variant;
  if (range) manifest.config()["fppi_range"] = o.fppi_range;
  if (o.recall) manifest.config()["recall"] = format_number(*o.recall);
  if (o.median_min_score) manifest.config()["median_min_score"] = format_number(*o.median_min_score);

  const EvalOptions eval{o.workers};
  Files files;
  std::string summary;
  std::vector<PlotCurve> curves;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const Curve curve = compute_curve(ds, runs[i], spec, eval, &diag);
    const EvalSummary s = summarize(curve, variant(o), range);
    std::string block = "detector " + labels[i] + "\n" + summary_text(s);
    if (o.recall) {
      block += "fppi@recall " + format_number(*o.recall) + " ";
      try {
        block += format_number(fppi_at_recall(curve, *o.recall)) + "\n";
      } catch (const Error& e) {
        if (e.category() != ErrorCategory::unreachable) throw;
        block += "unreachable (" + one_line(e.what()) + ")\n";
      }
    }
    if (o.median_min_score) {
      block += "median-tp-iou ";
      try {
        block += format_number(median_tp_iou(ds, runs[i], spec, *o.median_min_score, eval)) + "\n";
      } catch (const Error& e) {
        if (e.category() != ErrorCategory::input) throw;
        block += "n/a\n";
      }
    }
    summary += (i == 0 ? "" : "\n") + block;
    files[runs.size() == 1 ? "curve.csv" : "curve_" + sanitize(labels[i]) + ".csv"] = curve_csv(curve);
    curves.push_back({labels[i], curve});
  }
  files["summary.txt"] = summary;
  files["plot.svg"] = render_svg(curves, range.value_or(kMr4Range));
  out << summary;
  return files;
}

std::string fp_classes_csv(const MatchedDataset& matched, std::span<const FpClassification> fps) {
  std::string csv = "video/frame,x,y,w,h,score,class,max_iou\n";
  for (const auto& fp : fps) {
    const Detection& d = matched.detections[fp.detection];
    csv += d.frame.str() + "," + format_number(d.box.x) + "," + format_number(d.box.y) + "," +
           format_number(d.box.w) + "," + format_number(d.box.h) + "," + format_number(d.score) + "," +
           std::string(to_string(fp.cls)) + "," + format_number(fp.max_iou) + "\n";
  }
  return csv;
}

Files cmd_oracle(const Options& o, Manifest& manifest, std::ostream& out, Diagnostics& diag) {
  require(o.annotations, "--annotations");
  if (o.detections.size() != 1) throw Error(ErrorCategory::config, "oracle takes exactly one --detections");
  const SubsetSpec spec = subset_spec(o);
  const OracleMode mode = *parse_oracle_mode(o.mode);
  const auto range = fppi_range(o);
  const Dataset ds = load_annotations(o.annotations, o, diag);
  const auto dets = load_detections(o.detections[0], o, diag);

  manifest.add_input("annotations", o.annotations);
  manifest.add_input("detections", o.detections[0]);
  manifest.config()["spec"] = subset_json(spec, o.subset);
  manifest.config()["variant"] = o.variant;
  manifest.config()["mode"] = o.mode;
  manifest.config()["include_ignore"] = o.include_ignore;

  const OverlapOptions overlap{o.include_ignore};
  const EvalOptions eval{o.workers};
  const OracleReport report = oracle_evaluate(ds, dets, spec, mode, variant(o), overlap, eval);
  const MatchedDataset matched = match_dataset(ds, dets, spec, eval, &diag);
  const auto fps = classify_false_positives(matched, -std::numeric_limits<double>::infinity(), overlap);

  Files files;
  files["oracle.txt"] = oracle_report_text(report);
  files["curve_baseline.csv"] = curve_csv(report.baseline.curve);
  files["curve_oracle.csv"] = curve_csv(report.oracle.curve);
  files["fp_classes.csv"] = fp_classes_csv(matched, fps);
  const std::vector<PlotCurve> curves{{"baseline", report.baseline.curve},
                                      {"oracle " + std::string(to_string(mode)), report.oracle.curve}};
  files["plot.svg"] = render_svg(curves, range.value_or(kMr4Range));
  out << files["oracle.txt"];
  return files;
}

Files cmd_sweep(const Options& o, Manifest& manifest, std::ostream& out, Diagnostics& diag) {
  require(o.annotations, "--annotations");
  if (o.detections.size() != 1) throw Error(ErrorCategory::config, "sweep takes exactly one --detections");
  const SubsetSpec spec = subset_spec(o);
  const auto ious = parse_list(o.ious, "--ious");
  for (double t : ious) {
    if (!(t > 0.0 && t <= 1.0)) throw Error(ErrorCategory::config, "--ious values must be in (0, 1]");
  }
  const Dataset ds = load_annotations(o.annotations, o, diag);
  const auto dets = load_detections(o.detections[0], o, diag);

  manifest.add_input("annotations", o.annotations);
  manifest.add_input("detections", o.detections[0]);
  manifest.config()["spec"] = subset_json(spec, o.subset);
  manifest.config()["ious"] = o.ious;

  const auto points = mr_vs_iou_sweep(ds, dets, spec, ious, EvalOptions{o.workers});
  std::string csv = "iou,mr2,mr4\n";
  std::string text = "[sweep]\n";
  for (const auto& p : points) {
    csv += format_number(p.iou_threshold) + "," + format_number(p.mr2) + "," + format_number(p.mr4) + "\n";
    text += "iou " + format_number(p.iou_threshold) + " MR-2 " + fixed2(100.0 * p.mr2) + " MR-4 " +
            fixed2(100.0 * p.mr4) + "\n";
  }
  out << text;
  return {{"sweep.csv", csv}, {"sweep.txt", text}};
}

Files cmd_prune(const Options& o, Manifest& manifest, std::ostream& out, Diagnostics& diag) {
  require(o.annotations, "--annotations");
  require(o.fresh, "--new");
  const double threshold = o.iou.value_or(0.5);
  const Dataset original = load_annotations(o.annotations, o, diag);
  const Dataset fresh = load_annotations(o.fresh, o, diag);
  manifest.add_input("annotations", o.annotations);
  manifest.add_input("new", o.fresh);
  manifest.config()["iou"] = format_number(threshold);

  const Dataset pruned = prune(original, fresh, threshold);
  std::size_t demoted = 0, added = 0;
  for (const auto& a : pruned.annotations) {
    if (a.source != Source::pruned) continue;
    (a.ignore ? demoted : added) += 1;
  }
  const std::string text = "[prune]\nannotations " + std::to_string(pruned.annotations.size()) + "\npruned-to-ignore " +
                           std::to_string(demoted) + "\nadded " + std::to_string(added) + "\n";
  out << text;
  return {{"annotations.txt", format_canonical(pruned)}, {"prune.txt", text}};
}

Files cmd_align(const Options& o, Manifest& manifest, std::ostream& out, Diagnostics& diag) {
  require(o.annotations, "--annotations");
  if (o.detections.size() != 1) throw Error(ErrorCategory::config, "align takes exactly one --detections");
  AlignConfig cfg;
  if (o.iou) cfg.iou_min = *o.iou;
  if (o.score_min) cfg.score_min = *o.score_min;
  if (o.aspect) cfg.aspect = AspectRatio(*o.aspect);
  cfg.one_to_one = !o.many_to_one;
  cfg.score_greedy = o.score_greedy;
  cfg.validate();
  const Dataset ds = load_annotations(o.annotations, o, diag);
  const auto dets = load_detections(o.detections[0], o, diag);

  manifest.add_input("annotations", o.annotations);
  manifest.add_input("detections", o.detections[0]);
  manifest.config()["iou_min"] = format_number(cfg.iou_min);
  manifest.config()["score_min"] = format_number(cfg.score_min);
  manifest.config()["aspect"] = format_number(cfg.aspect.value());
  manifest.config()["one_to_one"] = cfg.one_to_one;
  manifest.config()["score_greedy"] = cfg.score_greedy;

  const Dataset aligned = align(ds, dets, cfg);
  std::size_t changed = 0;
  for (const auto& a : aligned.annotations) changed += a.source == Source::aligned ? 1 : 0;
  const std::string text =
      "[align]\nannotations " + std::to_string(aligned.annotations.size()) + "\naligned " + std::to_string(changed) + "\n";
  out << text;
  return {{"annotations.txt", format_canonical(aligned)}, {"align.txt", text}};
}

Files cmd_diff(const Options& o, Manifest& manifest, std::ostream& out, Diagnostics& diag) {
  require(o.annotations, "--annotations");
  require(o.fresh, "--new");
  const double threshold = o.iou.value_or(0.5);
  const Dataset a = load_annotations(o.annotations, o, diag);
  const Dataset b = load_annotations(o.fresh, o, diag);
  manifest.add_input("annotations", o.annotations);
  manifest.add_input("new", o.fresh);
  manifest.config()["iou"] = format_number(threshold);

  const DiffReport report = diff(a, b, threshold);
  const auto review = consolidate_flags(b, a, threshold);
  const std::string text = diff_report_text(report, a, b);
  out << text;
  return {{"diff.txt", text}, {"review.csv", review_items_csv(review)}};
}

Files cmd_correlates(const Options& o, Manifest& manifest, std::ostream& out, Diagnostics& diag) {
  require(o.annotations, "--annotations");
  require(o.images, "--images");
  if (o.detections.size() != 1) throw Error(ErrorCategory::config, "correlates takes exactly one --detections");
  if (!(o.op_fppi > 0.0)) throw Error(ErrorCategory::config, "--op-fppi must be positive");
  const SubsetSpec spec = subset_spec(o);
  if (!fs::is_directory(o.images)) throw Error(ErrorCategory::io, "image directory not found: " + o.images);
  const Dataset ds = load_annotations(o.annotations, o, diag);
  const auto dets = load_detections(o.detections[0], o, diag);
  std::optional<std::map<std::string, std::size_t>> tags;
  if (!o.tags.empty()) tags = tag_histogram(read_file(o.tags), o.tags);

  manifest.add_input("annotations", o.annotations);
  manifest.add_input("detections", o.detections[0]);
  manifest.add_input("images", o.images);
  if (tags) manifest.add_input("tags", o.tags);
  manifest.config()["spec"] = subset_json(spec, o.subset);
  manifest.config()["op_fppi"] = format_number(o.op_fppi);
  if (o.score_min) manifest.config()["score_min"] = format_number(*o.score_min);
  manifest.config()["blur_taps"] = o.blur_taps;

  const MatchedDataset matched = match_dataset(ds, dets, spec, EvalOptions{o.workers}, &diag);
  const ImageDirectory images(o.images);
  CorrelateOptions copt;
  copt.min_score = o.score_min;
  copt.fppi = o.op_fppi;
  copt.blur_taps = o.blur_taps;
  const auto rows = export_correlates(
      matched, dets, [&images](const FrameId& f) { return images.load(f); }, copt, &diag);

  Files files{{"correlates.csv", correlates_csv(rows)}};
  if (tags) files["tags.csv"] = tag_histogram_csv(*tags);
  out << "[correlates]\nrows " << rows.size() << "\n";
  return files;
}

Files cmd_interp(const Options& o, Manifest& manifest, std::ostream& out, Diagnostics&) {
  const auto amplitudes = parse_list(o.amplitudes, "--amplitude");
  WalkParams base;
  base.period = o.period;
  base.stride = o.stride;
  base.frames = o.walk_frames;
  base.height = o.walk_height;
  if (o.aspect) base.aspect = *o.aspect;
  manifest.config()["amplitudes"] = o.amplitudes;
  manifest.config()["period"] = o.period;
  manifest.config()["stride"] = o.stride;
  manifest.config()["frames"] = o.walk_frames;
  manifest.config()["height"] = format_number(o.walk_height);

  std::vector<std::vector<WalkSample>> walks;
  for (double a : amplitudes) {
    WalkParams p = base;
    p.amplitude = a;
    walks.push_back(interpolation_walk(p));
  }
  const std::int64_t probe = std::min<std::int64_t>(base.stride / 2, base.frames - 1);
  std::string csv = "amplitude,frame,true_y,interpolated_y,iou\n";
  std::string text = "[interp]\nperiod " + std::to_string(base.period) + "\nstride " + std::to_string(base.stride) +
                     "\nprobe-frame " + std::to_string(probe) + "\n";
  for (std::size_t i = 0; i < walks.size(); ++i) {
    double min_iou = 1.0;
    for (const auto& s : walks[i]) {
      csv += format_number(amplitudes[i]) + "," + std::to_string(s.frame) + "," + format_number(s.true_y) + "," +
             format_number(s.interpolated_y) + "," + format_number(s.iou) + "\n";
      min_iou = std::min(min_iou, s.iou);
    }
    text += "amplitude " + format_number(amplitudes[i]) + " probe-iou " + format_number(walks[i][probe].iou) +
            " min-iou " + format_number(min_iou) + "\n";
  }
  out << text;
  return {{"interp.csv", csv}, {"interp.txt", text}};
}

Files cmd_synth(const Options& o, Manifest& manifest, std::ostream& out, Diagnostics&) {
  SceneParams p = o.scene;
  p.tp_scores = {o.tp_score_lo, o.tp_score_hi};
  p.fp_scores = {o.fp_score_lo, o.fp_score_hi};
  if (o.aspect) p.aspect = *o.aspect;
  auto& c = manifest.config();
  c["seed"] = o.seed;
  c["frames"] = p.frames;
  c["people"] = p.people_per_frame;
  c["recall"] = format_number(p.recall);
  c["jitter"] = format_number(p.jitter);
  c["scale_jitter"] = format_number(p.scale_jitter);
  c["doubles"] = p.double_detections_per_frame;
  c["loc_fps"] = p.localisation_fps_per_frame;
  c["bg_fps"] = p.background_fps_per_frame;
  c["ignore_regions"] = p.ignore_regions_per_frame;
  c["ignored_dets"] = p.ignored_detections_per_frame;
  c["tp_scores"] = format_number(p.tp_scores.lo) + "," + format_number(p.tp_scores.hi);
  c["fp_scores"] = format_number(p.fp_scores.lo) + "," + format_number(p.fp_scores.hi);

  const SyntheticScene scene = generate_synthetic_scene(o.seed, p);
  std::string roles = "video/frame,x,y,w,h,score,role\n";
  for (std::size_t i = 0; i < scene.detections.size(); ++i) {
    const Detection& d = scene.detections[i];
    roles += d.frame.str() + "," + format_number(d.box.x) + "," + format_number(d.box.y) + "," +
             format_number(d.box.w) + "," + format_number(d.box.h) + "," + format_number(d.score) + "," +
             std::string(to_string(scene.roles[i])) + "\n";
  }
  out << "[synth]\nframes " << scene.dataset.frames.size() << "\nannotations " << scene.dataset.annotations.size()
      << "\ndetections " << scene.detections.size() << "\n";
  return {{"annotations.txt", format_canonical(scene.dataset)},
          {"detections.txt", format_detections(scene.detections)},
          {"roles.csv", roles}};
}

int cmd_serve(const Options& o, std::ostream& out, Diagnostics& diag) {
  require(o.annotations, "--annotations");
  require(o.out, "--out");
  if (o.port < 0 || o.port > 65535) throw Error(ErrorCategory::config, "--port must be in [0, 65535]");
  if (!o.images.empty() && !fs::is_directory(o.images)) throw Error(ErrorCategory::io, "image directory not found: " + o.images);
  const Dataset ds = load_annotations(o.annotations, o, diag);
  ServerOptions options;
  if (!o.fresh.empty()) options.fresh = load_annotations(o.fresh, o, diag);
  if (!o.images.empty()) options.images = fs::path(o.images);
  if (o.iou) options.diff_iou = *o.iou;
  if (o.aspect) options.aspect = AspectRatio(*o.aspect);

  Manifest manifest("serve");
  manifest.add_input("annotations", o.annotations);
  if (options.fresh) manifest.add_input("new", o.fresh);
  if (options.images) manifest.add_input("images", o.images);
  manifest.config()["host"] = o.host;
  manifest.config()["port"] = o.port;

  std::error_code ec;
  fs::create_directories(o.out, ec);
  if (ec) throw Error(ErrorCategory::io, "cannot create output directory " + o.out + ": " + ec.message());
  const fs::path journal = fs::path(o.out) / "journal.jsonl";
  AnnotationStore store(ds, journal);

  httplib::Server server;
  // Without SO_REUSEPORT so that an occupied port is reported, not shared.
  server.set_socket_options([](socket_t sock) {
    int yes = 1;
    setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof yes);
  });
  install_routes(server, store, options);
  const int port = o.port == 0 ? server.bind_to_any_port(o.host) : (server.bind_to_port(o.host, o.port) ? o.port : -1);
  if (port < 0) throw Error(ErrorCategory::io, "cannot listen on " + o.host + ":" + std::to_string(o.port) + " (port busy?)");
  write_file(fs::path(o.out) / "manifest.json", manifest.render({}));
  out << "serving http://" << o.host << ":" << port << " journal " << journal.string() << std::endl;
  if (!server.listen_after_bind()) throw Error(ErrorCategory::io, "server stopped unexpectedly");
  return 0;
}

void add_common(CLI::App* cmd, Options& o) {
  cmd->add_option("--format", o.format, "Annotation format")->check(CLI::IsMember({"canonical", "caltech-text"}));
  cmd->add_option("--out", o.out, "Output directory");
  cmd->add_option("--workers", o.workers, "Worker threads")->check(CLI::Range(1u, 256u));
}

void add_subset(CLI::App* cmd, Options& o) {
  cmd->add_option("--subset", o.subset, "Ground-truth subset")->check(CLI::IsMember({"reasonable", "all", "custom"}));
  cmd->add_option("--height-min", o.height_min, "Minimum annotation height (px)");
  cmd->add_option("--height-max", o.height_max, "Maximum annotation height (px)");
  cmd->add_option("--occ-min", o.occ_min, "Minimum occluded fraction");
  cmd->add_option("--occ-max", o.occ_max, "Maximum occluded fraction");
  cmd->add_option("--iou", o.iou, "Matching IoU threshold");
  cmd->add_option("--aspect", o.aspect, "Width/height ratio for normalization");
  cmd->add_option("--video", o.video, "Video name for single-file CSV detections");
}

}  // namespace

int run(std::span<const std::string> args, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"Pedestrian detection evaluation toolkit", "pedeval"};
  app.set_version_flag("--version", std::string(kToolVersion));
  app.require_subcommand(1);

  auto* eval = app.add_subcommand("eval", "Miss-rate curves and log-average miss rates");
  auto* oracle = app.add_subcommand("oracle", "Re-evaluate with false-positive classes removed");
  auto* sweep = app.add_subcommand("sweep", "Log-average miss rate over IoU thresholds");
  auto* prune_cmd = app.add_subcommand("prune", "Rebuild original annotations against a new set");
  auto* align_cmd = app.add_subcommand("align", "Snap annotations to matching detections");
  auto* diff_cmd = app.add_subcommand("diff", "Compare two annotation sets");
  auto* correlates = app.add_subcommand("correlates", "Per-detection height, blur and contrast");
  auto* interp = app.add_subcommand("interp", "Keyframe interpolation offset on a sinusoidal walk");
  auto* synth = app.add_subcommand("synth", "Generate a synthetic scene");
  auto* serve = app.add_subcommand("serve", "Serve the annotation review API");

  for (auto* cmd : {eval, oracle, sweep, prune_cmd, align_cmd, diff_cmd, correlates, interp, synth, serve}) {
    add_common(cmd, o);
  }
  for (auto* cmd : {eval, oracle, sweep, align_cmd, correlates}) {
    cmd->add_option("--annotations", o.annotations, "Ground-truth annotations");
    cmd->add_option("--detections", o.detections, "Detections (canonical D records or CSV)");
    add_subset(cmd, o);
  }
  for (auto* cmd : {eval, oracle}) {
    cmd->add_option("--fppi-range", o.fppi_range, "Extra evaluation range lo,hi");
    cmd->add_option("--variant", o.variant, "Annotation variant tag")->check(CLI::IsMember({"O", "N"}));
  }
  eval->add_option("--label", o.labels, "Legend label per detections file");
  eval->add_option("--recall", o.recall, "Report the FPPI needed for this recall");
  eval->add_option("--median-iou-score", o.median_min_score, "Report the median TP IoU above this score");
  oracle->add_option("--mode", o.mode, "False-positive classes to remove")->check(CLI::IsMember({"loc", "bg", "both"}));
  oracle->add_flag("--include-ignore", o.include_ignore, "Count ignore regions when classifying overlap");
  sweep->add_option("--ious", o.ious, "Comma-separated IoU thresholds");

  for (auto* cmd : {prune_cmd, diff_cmd, serve}) {
    cmd->add_option("--annotations", o.annotations, "Original annotations");
    cmd->add_option("--new", o.fresh, "New annotations");
    cmd->add_option("--iou", o.iou, "Box matching IoU threshold");
  }
  align_cmd->add_option("--score-min", o.score_min, "Ignore detections below this score");
  align_cmd->add_flag("--many-to-one", o.many_to_one, "Let one detection align several annotations");
  align_cmd->add_flag("--score-greedy", o.score_greedy, "Visit detections by score instead of by IoU");
  correlates->add_option("--images", o.images, "Directory of <video>_I<index>.png|pgm frames");
  correlates->add_option("--tags", o.tags, "CSV of human-entered tags to count");
  correlates->add_option("--score-min", o.score_min, "Score threshold of the operating point");
  correlates->add_option("--op-fppi", o.op_fppi, "FPPI of the operating point");
  correlates->add_option("--blur-taps", o.blur_taps, "Re-blur filter length")->check(CLI::Range(2, 255));

  interp->add_option("--amplitude", o.amplitudes, "Comma-separated walk amplitudes (px)");
  interp->add_option("--period", o.period, "Walk period (frames)");
  interp->add_option("--stride", o.stride, "Keyframe stride (frames)");
  interp->add_option("--frames", o.walk_frames, "Number of frames");
  interp->add_option("--height", o.walk_height, "Box height (px)");
  interp->add_option("--aspect", o.aspect, "Box width/height ratio");

  synth->add_option("--seed", o.seed, "Random seed");
  synth->add_option("--frames", o.scene.frames, "Frames");
  synth->add_option("--people", o.scene.people_per_frame, "People per frame");
  synth->add_option("--recall", o.scene.recall, "Probability a person is detected");
  synth->add_option("--jitter", o.scene.jitter, "True-positive translation jitter");
  synth->add_option("--scale-jitter", o.scene.scale_jitter, "True-positive scale jitter");
  synth->add_option("--doubles", o.scene.double_detections_per_frame, "Double detections per frame");
  synth->add_option("--loc-fps", o.scene.localisation_fps_per_frame, "Localisation errors per frame");
  synth->add_option("--bg-fps", o.scene.background_fps_per_frame, "Background errors per frame");
  synth->add_option("--ignore-regions", o.scene.ignore_regions_per_frame, "Ignore regions per frame");
  synth->add_option("--ignored-dets", o.scene.ignored_detections_per_frame, "Detections inside ignore regions");
  synth->add_option("--tp-score-lo", o.tp_score_lo);
  synth->add_option("--tp-score-hi", o.tp_score_hi);
  synth->add_option("--fp-score-lo", o.fp_score_lo);
  synth->add_option("--fp-score-hi", o.fp_score_hi);
  synth->add_option("--aspect", o.aspect, "Box width/height ratio");

  serve->add_option("--images", o.images, "Directory of frame images");
  serve->add_option("--aspect", o.aspect, "Aspect ratio for line-to-bbox");
  serve->add_option("--host", o.host, "Bind address");
  serve->add_option("--port", o.port, "TCP port (0 picks a free one)");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << "error[config]: " << one_line(e.what()) << "\n";
    return exit_code(ErrorCategory::config);
  }

  Diagnostics diag;
  try {
    if (serve->parsed()) {
      const int status = cmd_serve(o, out, diag);
      print_warnings(diag, err);
      return status;
    }
    const std::vector<std::pair<CLI::App*, Files (*)(const Options&, Manifest&, std::ostream&, Diagnostics&)>> commands{
        {eval, cmd_eval},           {oracle, cmd_oracle}, {sweep, cmd_sweep}, {prune_cmd, cmd_prune},
        {align_cmd, cmd_align},     {diff_cmd, cmd_diff}, {correlates, cmd_correlates},
        {interp, cmd_interp},       {synth, cmd_synth}};
    for (const auto& [cmd, fn] : commands) {
      if (!cmd->parsed()) continue;
      require(o.out, "--out");
      Manifest manifest(cmd->get_name());
      const Files files = fn(o, manifest, out, diag);
      commit(o, manifest, files);
      print_warnings(diag, err);
      return 0;
    }
  } catch (const Error& e) {
    print_warnings(diag, err);
    err << "error[" << to_string(e.category()) << "]: " << one_line(e.what()) << "\n";
    return exit_code(e.category());
  } catch (const std::exception& e) {
    err << "error[internal]: " << one_line(e.what()) << "\n";
    return 1;
  }
  return 1;
}

int run_main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace pedeval::cli
