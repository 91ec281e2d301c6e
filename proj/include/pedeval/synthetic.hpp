#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "pedeval/types.hpp"

namespace pedeval {

// Role each synthetic detection was generated to play under the default
// matching rule (IoU threshold 0.5, ignore-overlap threshold 0.5).
enum class DetectionRole {
  true_positive,
  double_detection,  // second hit on an already detected person
  localisation,      // 0 < IoU < 0.5 with one person
  background,        // zero overlap with every annotation
  ignore_absorbed,   // inside an ignore region
};

std::string_view to_string(DetectionRole role);

struct ScoreRange {
  double lo = 0.0;
  double hi = 1.0;
};

// Documented bounds: frames >= 1; per-frame counts in [0, 16]; recall in
// [0, 1]; jitter and scale_jitter in [0, 0.15]; score ranges with lo <= hi.
struct SceneParams {
  int frames = 10;
  int people_per_frame = 1;
  double recall = 1.0;        // probability that a person gets a true positive
  double jitter = 0.0;        // max translation of true positives, fraction of size
  double scale_jitter = 0.0;  // max relative height change of true positives
  int double_detections_per_frame = 0;
  int localisation_fps_per_frame = 0;
  int background_fps_per_frame = 0;
  int ignore_regions_per_frame = 0;
  int ignored_detections_per_frame = 0;
  ScoreRange tp_scores{0.0, 1.0};
  ScoreRange fp_scores{0.0, 1.0};
  double min_height = 60.0;
  double max_height = 120.0;
  double aspect = 0.41;
};

struct SyntheticScene {
  Dataset dataset;
  std::vector<Detection> detections;
  std::vector<DetectionRole> roles;  // parallel to detections
};

// Pure function of (seed, params). People and ignore regions sit in disjoint
// horizontal slots in the lower half of the frame; background false
// positives live in the upper half so their overlap with all annotations is
// exactly zero. Every role is verified by rejection sampling.
SyntheticScene generate_synthetic_scene(std::uint64_t seed, const SceneParams& params);

}  // namespace pedeval
