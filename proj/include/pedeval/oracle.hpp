#pragma once

#include <cstddef>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pedeval/evaluator.hpp"
#include "pedeval/image.hpp"
#include "pedeval/measures.hpp"

namespace pedeval {

enum class FpClass { localisation, background };

std::string_view to_string(FpClass cls);

struct FpClassification {
  std::size_t detection = 0;  // into MatchedDataset::detections
  FpClass cls = FpClass::background;
  double max_iou = 0.0;
};

struct OverlapOptions {
  // Count ignore regions as ground truth when deciding overlap.
  bool include_ignore = false;
};

// Every false positive scoring at least `min_score`, in detection order.
// Localisation when it has IoU > 0 with some counted annotation.
std::vector<FpClassification> classify_false_positives(
    const MatchedDataset& matched, double min_score = -std::numeric_limits<double>::infinity(),
    const OverlapOptions& options = {});

enum class OracleMode { localisation, background, both };

std::string_view to_string(OracleMode mode);
std::optional<OracleMode> parse_oracle_mode(std::string_view text);

struct OracleReport {
  OracleMode mode = OracleMode::both;
  EvalSummary baseline;
  EvalSummary oracle;
  // False positives of each class over all thresholds, before and after.
  std::size_t baseline_localisation = 0;
  std::size_t baseline_background = 0;
  std::size_t oracle_localisation = 0;
  std::size_t oracle_background = 0;
};

// Removed false positives are treated as ignored detections at every
// threshold; true positives and misses are untouched.
OracleReport oracle_evaluate(const Dataset& dataset, std::span<const Detection> detections,
                             const SubsetSpec& spec, OracleMode mode, Variant variant = Variant::original,
                             const OverlapOptions& overlap = {}, const EvalOptions& options = {});

// Baseline MR-4 minus oracle MR-4, in percentage points.
double delta_mr(const OracleReport& report);

std::string oracle_report_text(const OracleReport& report);

struct CorrelateRow {
  FrameId frame;
  BBox box;  // detection box as given in the input
  double score = 0.0;
  Outcome outcome = Outcome::true_positive;
  double height = 0.0;
  double blur = 0.0;
  double contrast = 0.0;
};

struct CorrelateOptions {
  // Score threshold of the operating point; by default the one reaching
  // `fppi` on the evaluation curve.
  std::optional<double> min_score;
  double fppi = 0.1;
  int blur_taps = 9;
  QuantileLevels levels;
};

// Frame image, or nullopt when unavailable.
using ImageLoader = std::function<std::optional<GrayImage>(const FrameId&)>;

// One row per true or false positive at the operating point. Detections on
// frames without an image, or whose patch is smaller than 3x3, are skipped
// with a warning.
std::vector<CorrelateRow> export_correlates(const MatchedDataset& matched, std::span<const Detection> input,
                                            const ImageLoader& images, const CorrelateOptions& options = {},
                                            Diagnostics* diag = nullptr);

// "video/frame,x,y,w,h,score,outcome,height,blur,contrast" with header.
std::string correlates_csv(std::span<const CorrelateRow> rows);

// Free-form human tags ("tree leaves", "cyclist", ...) counted per tag.
// Input rows: video/frame,x,y,w,h,tag with an optional header line.
std::map<std::string, std::size_t> tag_histogram(std::string_view csv, std::string_view origin);

// "tag,count" rows by decreasing count, ties by tag.
std::string tag_histogram_csv(const std::map<std::string, std::size_t>& histogram);

}  // namespace pedeval
