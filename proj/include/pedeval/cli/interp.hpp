#pragma once

#include <cstdint>
#include <vector>

namespace pedeval::cli {

// A box walking with a sinusoidal vertical offset, annotated only at sparse
// keyframes and linearly interpolated in between.
struct WalkParams {
  double amplitude = 4.0;   // px
  int period = 60;          // frames per oscillation
  int stride = 30;          // frames between keyframes
  int frames = 120;
  double height = 100.0;
  double aspect = 0.41;
};

struct WalkSample {
  std::int64_t frame = 0;
  double true_y = 0.0;
  double interpolated_y = 0.0;
  double iou = 1.0;
};

std::vector<WalkSample> interpolation_walk(const WalkParams& params);

}  // namespace pedeval::cli
