#pragma once

#include <cstddef>
#include <limits>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "pedeval/error.hpp"
#include "pedeval/types.hpp"

namespace pedeval {

// Which ground truth counts as a positive. Out-of-subset annotations become
// ignore regions; nothing is deleted.
struct SubsetSpec {
  double height_min = 0.0;
  double height_max = std::numeric_limits<double>::infinity();
  double occlusion_min = 0.0;
  double occlusion_max = 1.0;
  double iou_threshold = 0.5;
  bool aspect_normalize = false;
  AspectRatio aspect;
  std::set<Label> labels{Label::person};
  // Toolbox-parity experiment: drop detections whose height lies outside
  // [height_min / e, height_max * e] before matching. Off by default; the
  // constant has not been validated against reference toolbox output.
  std::optional<double> detection_height_expansion;

  // Height >= 50 px, occlusion <= 35%, aspect-normalized boxes.
  static SubsetSpec reasonable();
  // Every person counts, no normalization.
  static SubsetSpec all();

  void validate() const;
};

Dataset apply_subset(const Dataset& dataset, const SubsetSpec& spec,
                     Diagnostics* diag = nullptr);

enum class Outcome { true_positive, false_positive, ignored };

struct TruePositive {
  std::size_t detection = 0;
  std::size_t annotation = 0;
  double iou = 0.0;
};

// Indices refer to the spans passed to match_frame.
struct FrameMatch {
  std::vector<TruePositive> true_positives;
  std::vector<std::size_t> false_positives;
  std::vector<std::size_t> false_negatives;
  std::vector<std::size_t> ignored;
};

// Greedy one-to-one matching. Detections are visited by descending score
// (equal scores in input order); each takes the unmatched non-ignore
// annotation of highest IoU (ties to the smallest id) when that IoU reaches
// the threshold. Otherwise a detection covered by an ignore region
// (overlap_over_detection >= threshold) is ignored, and anything else is a
// false positive. Ignore regions absorb any number of detections.
FrameMatch match_frame(std::span<const Annotation> annotations,
                       std::span<const Detection> detections, double iou_threshold);

struct CurvePoint {
  double threshold = 0.0;
  double fppi = 0.0;
  double miss_rate = 1.0;
  std::size_t true_positives = 0;
  std::size_t false_positives = 0;

  friend bool operator==(const CurvePoint&, const CurvePoint&) = default;
};

// FPPI/miss-rate points by decreasing score threshold. When the first real
// point has FPPI > 0 (or there are no detections) the curve starts with an
// anchor at threshold +inf, FPPI 0, miss rate 1.
struct Curve {
  std::vector<CurvePoint> points;
  std::size_t frames = 0;
  std::size_t positives = 0;

  friend bool operator==(const Curve&, const Curve&) = default;
};

struct ScoredOutcome {
  double score = 0.0;
  Outcome outcome = Outcome::ignored;
};

// Assembles a curve from per-detection outcomes. Order among equal scores
// does not matter: a point is emitted only after a whole score level.
Curve build_curve(std::span<const ScoredOutcome> outcomes, std::size_t frames,
                  std::size_t positives);

struct EvalOptions {
  unsigned workers = 1;
};

// Frame-by-frame matching of a whole dataset after subset filtering and
// normalization. Shared by the curve, oracle and correlate computations.
struct MatchedDataset {
  Dataset dataset;                      // subset applied, boxes normalized
  std::vector<Detection> detections;    // kept detections, normalized
  std::vector<std::size_t> source_index;  // position in the input detections
  struct Frame {
    FrameId id;
    std::vector<std::size_t> annotations;  // into dataset.annotations
    std::vector<std::size_t> detections;   // into detections
    FrameMatch match;                      // indices local to the two lists
  };
  std::vector<Frame> frames;
  // Per kept detection.
  std::vector<Outcome> outcomes;
  std::vector<std::optional<std::size_t>> matched_annotation;
  std::vector<double> matched_iou;
  std::size_t positives = 0;
};

// Detections on frames outside the dataset's frame universe are dropped with
// a warning.
MatchedDataset match_dataset(const Dataset& dataset, std::span<const Detection> detections,
                             const SubsetSpec& spec, const EvalOptions& options = {},
                             Diagnostics* diag = nullptr);

// Throws Error(empty_positive_set) when no annotation counts as a positive.
Curve curve_from_outcomes(const MatchedDataset& matched, std::span<const Outcome> outcomes);

Curve compute_curve(const Dataset& dataset, std::span<const Detection> detections,
                    const SubsetSpec& spec, const EvalOptions& options = {},
                    Diagnostics* diag = nullptr);

struct FppiRange {
  double lo = 1e-2;
  double hi = 1.0;
};

inline constexpr FppiRange kMr2Range{1e-2, 1.0};
inline constexpr FppiRange kMr4Range{1e-4, 1.0};

struct LamrOptions {
  double decade_step = 0.25;
  double epsilon = 1e-10;
};

// Reference FPPI values evenly spaced in log10 at `decade_step`, both ends
// included (9 points over two decades, 17 over four).
std::vector<double> reference_fppi(FppiRange range, double decade_step = 0.25);

// Miss rate of the last curve point with FPPI <= r, for each reference r.
std::vector<double> reference_miss_rates(const Curve& curve, FppiRange range,
                                         double decade_step = 0.25);

// exp(mean(ln(max(m_i, epsilon)))) over the reference miss rates.
double log_average_miss_rate(const Curve& curve, FppiRange range, const LamrOptions& options = {});

enum class Variant { original, new_set };

char variant_letter(Variant variant);
std::optional<Variant> parse_variant(std::string_view text);

struct EvalSummary {
  double mr2 = 1.0;
  double mr4 = 1.0;
  std::optional<FppiRange> custom_range;
  std::optional<double> custom_mr;
  Variant variant = Variant::original;
  // Counts at the last curve point with FPPI <= 1.
  std::size_t true_positives = 0;
  std::size_t false_positives = 0;
  std::size_t false_negatives = 0;
  Curve curve;
};

EvalSummary summarize(Curve curve, Variant variant,
                      std::optional<FppiRange> custom_range = std::nullopt,
                      const LamrOptions& lamr = {});

EvalSummary evaluate(const Dataset& dataset, std::span<const Detection> detections,
                     const SubsetSpec& spec, Variant variant, const EvalOptions& options = {},
                     Diagnostics* diag = nullptr);

// Median IoU of true positives among detections scoring above `min_score`.
// Even counts take the lower middle order statistic.
double median_tp_iou(const Dataset& dataset, std::span<const Detection> detections,
                     const SubsetSpec& spec, double min_score = 0.0,
                     const EvalOptions& options = {});

struct SweepPoint {
  double iou_threshold = 0.5;
  double mr2 = 1.0;
  double mr4 = 1.0;
};

std::vector<SweepPoint> mr_vs_iou_sweep(const Dataset& dataset,
                                        std::span<const Detection> detections,
                                        const SubsetSpec& spec,
                                        std::span<const double> thresholds,
                                        const EvalOptions& options = {});

// Smallest FPPI whose miss rate is at most 1 - recall. Throws
// Error(unreachable) naming the best recall when the curve never gets there.
double fppi_at_recall(const Curve& curve, double recall);

// Largest score threshold whose FPPI reaches `fppi`; the lowest threshold
// when the curve stays below it.
double operating_threshold(const Curve& curve, double fppi);

// "threshold,fppi,missrate" rows.
std::string curve_csv(const Curve& curve);

// Key-value summary block.
std::string summary_text(const EvalSummary& summary);

}  // namespace pedeval
