#pragma once

#include "pedeval/image.hpp"

namespace pedeval {

// No-reference blur estimate in [0, 1], higher = blurrier. The patch is
// re-blurred with a `taps`-wide averaging filter along each axis; the score
// per axis is the share of neighbour-difference variation that the re-blur
// does not remove, and the result is the larger of the two. Borders are
// replicated. A patch with no variation along either axis scores 1.
double blur_score(const Patch& patch, int taps = 9);

struct QuantileLevels {
  double low = 0.05;
  double high = 0.95;
};

// q(high) - q(low) of the patch intensities, linear interpolation between
// order statistics.
double contrast_score(const Patch& patch, QuantileLevels levels = {});

// Linear-interpolation quantile of sorted values (R type 7).
double quantile_sorted(const std::vector<double>& sorted, double level);

}  // namespace pedeval
