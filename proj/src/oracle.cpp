#include "pedeval/oracle.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <tuple>

#include "pedeval/dataio.hpp"

namespace pedeval {

std::string_view to_string(FpClass cls) {
  return cls == FpClass::localisation ? "localisation" : "background";
}

std::string_view to_string(OracleMode mode) {
  switch (mode) {
    case OracleMode::localisation: return "loc";
    case OracleMode::background: return "bg";
    case OracleMode::both: return "both";
  }
  return "both";
}

std::optional<OracleMode> parse_oracle_mode(std::string_view text) {
  if (text == "loc" || text == "localisation") return OracleMode::localisation;
  if (text == "bg" || text == "background") return OracleMode::background;
  if (text == "both") return OracleMode::both;
  return std::nullopt;
}

std::vector<FpClassification> classify_false_positives(const MatchedDataset& matched, double min_score,
                                                       const OverlapOptions& options) {
  std::vector<FpClassification> out;
  for (const auto& frame : matched.frames) {
    for (const auto local : frame.match.false_positives) {
      const std::size_t d = frame.detections[local];
      const Detection& det = matched.detections[d];
      if (det.score < min_score) continue;
      double best = 0.0;
      for (const auto a : frame.annotations) {
        const Annotation& ann = matched.dataset.annotations[a];
        if (ann.ignore && !options.include_ignore) continue;
        best = std::max(best, iou(det.box, ann.box));
      }
      out.push_back({d, best > 0.0 ? FpClass::localisation : FpClass::background, best});
    }
  }
  std::sort(out.begin(), out.end(),
            [](const FpClassification& l, const FpClassification& r) { return l.detection < r.detection; });
  return out;
}

namespace {

std::pair<std::size_t, std::size_t> count_classes(std::span<const FpClassification> fps,
                                                  std::span<const Outcome> outcomes) {
  std::size_t loc = 0;
  std::size_t bg = 0;
  for (const auto& fp : fps) {
    if (outcomes[fp.detection] != Outcome::false_positive) continue;
    (fp.cls == FpClass::localisation ? loc : bg) += 1;
  }
  return {loc, bg};
}

}  // namespace

OracleReport oracle_evaluate(const Dataset& dataset, std::span<const Detection> detections,
                             const SubsetSpec& spec, OracleMode mode, Variant variant,
                             const OverlapOptions& overlap, const EvalOptions& options) {
  const auto matched = match_dataset(dataset, detections, spec, options);
  const auto fps = classify_false_positives(matched, -std::numeric_limits<double>::infinity(), overlap);

  std::vector<Outcome> outcomes = matched.outcomes;
  for (const auto& fp : fps) {
    const bool remove = mode == OracleMode::both ||
                        (mode == OracleMode::localisation && fp.cls == FpClass::localisation) ||
                        (mode == OracleMode::background && fp.cls == FpClass::background);
    if (remove) outcomes[fp.detection] = Outcome::ignored;
  }

  OracleReport report;
  report.mode = mode;
  report.baseline = summarize(curve_from_outcomes(matched, matched.outcomes), variant);
  report.oracle = summarize(curve_from_outcomes(matched, outcomes), variant);
  std::tie(report.baseline_localisation, report.baseline_background) = count_classes(fps, matched.outcomes);
  std::tie(report.oracle_localisation, report.oracle_background) = count_classes(fps, outcomes);
  return report;
}

double delta_mr(const OracleReport& report) { return 100.0 * (report.baseline.mr4 - report.oracle.mr4); }

std::string oracle_report_text(const OracleReport& r) {
  const char v = variant_letter(r.baseline.variant);
  char buf[512];
  std::snprintf(buf, sizeof buf,
                "[oracle]\nmode %s\n"
                "baseline MR-2(%c) %.2f\nbaseline MR-4(%c) %.2f\n"
                "oracle MR-2(%c) %.2f\noracle MR-4(%c) %.2f\n"
                "delta MR-4(%c) %.2f\n"
                "baseline fp localisation %zu\nbaseline fp background %zu\n"
                "oracle fp localisation %zu\noracle fp background %zu\n"
                "oracle fp total %zu\n",
                std::string(to_string(r.mode)).c_str(), v, 100.0 * r.baseline.mr2, v, 100.0 * r.baseline.mr4, v,
                100.0 * r.oracle.mr2, v, 100.0 * r.oracle.mr4, v, delta_mr(r), r.baseline_localisation,
                r.baseline_background, r.oracle_localisation, r.oracle_background,
                r.oracle_localisation + r.oracle_background);
  return buf;
}

std::vector<CorrelateRow> export_correlates(const MatchedDataset& matched, std::span<const Detection> input,
                                            const ImageLoader& images, const CorrelateOptions& options,
                                            Diagnostics* diag) {
  double threshold = -std::numeric_limits<double>::infinity();
  if (options.min_score) {
    threshold = *options.min_score;
  } else if (!matched.detections.empty()) {
    threshold = operating_threshold(curve_from_outcomes(matched, matched.outcomes), options.fppi);
  }

  std::vector<CorrelateRow> rows;
  std::size_t missing_images = 0;
  std::size_t tiny = 0;
  for (const auto& frame : matched.frames) {
    std::optional<GrayImage> image;
    bool loaded = false;
    for (const auto d : frame.detections) {
      const Outcome outcome = matched.outcomes[d];
      if (outcome == Outcome::ignored || matched.detections[d].score < threshold) continue;
      if (!loaded) {
        image = images(frame.id);
        loaded = true;
        if (!image) ++missing_images;
      }
      if (!image) continue;
      const Detection& original = input[matched.source_index[d]];
      Patch patch;
      try {
        patch = crop(*image, original.box);
      } catch (const Error&) {
        ++tiny;
        continue;
      }
      if (patch.width() < 3 || patch.height() < 3) {
        ++tiny;
        continue;
      }
      rows.push_back({frame.id, original.box, original.score, outcome, original.box.h,
                      blur_score(patch, options.blur_taps), contrast_score(patch, options.levels)});
    }
  }
  if (missing_images > 0) warn(diag, std::to_string(missing_images) + " frames without an image were skipped");
  if (tiny > 0) warn(diag, std::to_string(tiny) + " detections with patches under 3x3 pixels were skipped");
  return rows;
}

std::string correlates_csv(std::span<const CorrelateRow> rows) {
  std::string out = "video/frame,x,y,w,h,score,outcome,height,blur,contrast\n";
  for (const auto& r : rows) {
    out += r.frame.str() + "," + format_number(r.box.x) + "," + format_number(r.box.y) + "," +
           format_number(r.box.w) + "," + format_number(r.box.h) + "," + format_number(r.score) + "," +
           (r.outcome == Outcome::true_positive ? "TP" : "FP") + "," + format_number(r.height) + "," +
           format_number(r.blur) + "," + format_number(r.contrast) + "\n";
  }
  return out;
}

std::map<std::string, std::size_t> tag_histogram(std::string_view csv, std::string_view origin) {
  std::map<std::string, std::size_t> hist;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < csv.size()) {
    const std::size_t end = std::min(csv.find('\n', pos), csv.size());
    std::string_view line = csv.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty() || line.starts_with("video/frame,")) continue;

    std::size_t field_start = 0;
    for (int field = 0; field < 5; ++field) {
      const std::size_t comma = line.find(',', field_start);
      if (comma == std::string_view::npos) {
        throw ParseError(std::string(origin), line_no, line.size() + 1, "expected 6 fields");
      }
      const std::string_view text = line.substr(field_start, comma - field_start);
      if (field == 0) {
        if (!FrameId::parse(text)) {
          throw ParseError(std::string(origin), line_no, field_start + 1, "expected video/frame");
        }
      } else {
        double v = 0.0;
        const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
        if (ec != std::errc{} || ptr != text.data() + text.size()) {
          throw ParseError(std::string(origin), line_no, field_start + 1, "expected a number");
        }
      }
      field_start = comma + 1;
    }
    const std::string_view tag = line.substr(field_start);
    if (tag.empty()) throw ParseError(std::string(origin), line_no, field_start + 1, "empty tag");
    ++hist[std::string(tag)];
  }
  return hist;
}

std::string tag_histogram_csv(const std::map<std::string, std::size_t>& histogram) {
  std::vector<std::pair<std::string, std::size_t>> items(histogram.begin(), histogram.end());
  std::stable_sort(items.begin(), items.end(), [](const auto& l, const auto& r) { return l.second > r.second; });
  std::string out = "tag,count\n";
  for (const auto& [tag, count] : items) out += tag + "," + std::to_string(count) + "\n";
  return out;
}

}  // namespace pedeval
