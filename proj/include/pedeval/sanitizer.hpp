#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "pedeval/geometry.hpp"
#include "pedeval/types.hpp"

namespace pedeval {

struct BoxPair {
  std::size_t a = 0;
  std::size_t b = 0;
  double iou = 0.0;

  friend bool operator==(const BoxPair&, const BoxPair&) = default;
};

// One-to-one greedy assignment by descending IoU among pairs with
// IoU >= threshold. Equal IoUs go to the lower a index, then lower b index.
std::vector<BoxPair> greedy_iou_pairs(std::span<const BBox> a, std::span<const BBox> b, double threshold);

// Matches new against original per frame (non-ignore with non-ignore, ignore
// with ignore). Matched originals are kept as they are; unmatched originals
// become ignore regions tagged `pruned`; unmatched new annotations are
// appended with new ids, tagged `pruned`. Throws Error(input) when the frame
// sets differ.
Dataset prune(const Dataset& original, const Dataset& fresh, double iou_threshold = 0.5);

struct AlignConfig {
  double iou_min = 0.5;
  double score_min = -std::numeric_limits<double>::infinity();
  AspectRatio aspect;
  bool one_to_one = true;
  // Visit detections by descending score instead of pairs by descending IoU.
  bool score_greedy = false;

  void validate() const;
};

// Replaces each matched non-ignore annotation's box with the aspect-normalized
// detection box (IoU measured against that normalized box). Visible boxes
// follow the same scale-and-shift. Ignore regions and unmatched annotations
// pass through. Annotations whose box changes are tagged `aligned`.
Dataset align(const Dataset& annotations, std::span<const Detection> detections, const AlignConfig& config = {});

struct DiffReport {
  std::vector<BoxPair> matched;  // indices into a.annotations / b.annotations
  std::vector<std::size_t> a_only;
  std::vector<std::size_t> b_only;
  double agreement = 1.0;  // 2|matched| / (|A| + |B|), non-ignore only
};

// Compares non-ignore annotations frame by frame. Throws Error(input) when
// the frame sets differ.
DiffReport diff(const Dataset& a, const Dataset& b, double iou_threshold = 0.5);

std::string diff_report_text(const DiffReport& report, const Dataset& a, const Dataset& b);

struct ReviewItem {
  std::size_t annotation = 0;  // into the old dataset
  FrameId frame;
  BBox box;
  double max_iou_to_new = 0.0;
};

// Old non-ignore annotations left unmatched by the new set, for a human to
// decide on. Nothing is added automatically.
std::vector<ReviewItem> consolidate_flags(const Dataset& fresh, const Dataset& old, double iou_threshold = 0.5);

// "video/frame,x,y,w,h,max_iou_to_new" with header.
std::string review_items_csv(std::span<const ReviewItem> items);

}  // namespace pedeval
