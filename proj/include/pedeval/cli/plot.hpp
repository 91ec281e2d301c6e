#pragma once

#include <span>
#include <string>

#include "pedeval/evaluator.hpp"

namespace pedeval::cli {

struct PlotCurve {
  std::string label;
  Curve curve;
};

// Log-log miss rate against FPPI as a self-contained SVG document. Curves are
// drawn as steps; the legend shows "MR-2 (MR-4) label" in percent. Throws
// Error(input) for an empty curve list.
std::string render_svg(std::span<const PlotCurve> curves, FppiRange range = kMr4Range);

}  // namespace pedeval::cli
