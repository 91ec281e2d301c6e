#pragma once

#include <optional>

#include "pedeval/error.hpp"

namespace pedeval {

// Axis-aligned box in continuous pixel coordinates. (x, y) is the top-left
// corner. Valid boxes have finite, strictly positive width and height.
struct BBox {
  double x = 0.0;
  double y = 0.0;
  double w = 0.0;
  double h = 0.0;

  double area() const noexcept { return w * h; }
  double right() const noexcept { return x + w; }
  double bottom() const noexcept { return y + h; }
  double center_x() const noexcept { return x + w / 2.0; }
  double center_y() const noexcept { return y + h / 2.0; }
  bool valid() const noexcept;

  friend bool operator==(const BBox&, const BBox&) = default;
};

struct Point {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point&, const Point&) = default;
};

// Annotation axis drawn from the top of the head to the point between the
// feet.
struct HeadFeetLine {
  Point head;
  Point feet;

  double length() const noexcept;

  friend bool operator==(const HeadFeetLine&, const HeadFeetLine&) = default;
};

// Width over height. Pedestrian boxes use values in (0, 1); any positive
// finite value is accepted so that arbitrary boxes can round-trip.
class AspectRatio {
 public:
  static constexpr double kDefault = 0.41;

  constexpr AspectRatio() = default;
  explicit AspectRatio(double value);

  double value() const noexcept { return value_; }

 private:
  double value_ = kDefault;
};

// Throws Error(input) when the box is degenerate or non-finite.
void require_valid(const BBox& box, const char* what);

// Intersection of two boxes, or nullopt when their interiors are disjoint.
std::optional<BBox> intersect(const BBox& a, const BBox& b) noexcept;

double intersection_area(const BBox& a, const BBox& b) noexcept;

double iou(const BBox& a, const BBox& b) noexcept;

// area(det ∩ region) / area(det); the ignore-region criterion.
double overlap_over_detection(const BBox& det, const BBox& region) noexcept;

// Box of height = line length and width = aspect * height, centred on the
// line midpoint. Tilted lines use their Euclidean length.
BBox line_to_bbox(const HeadFeetLine& line, AspectRatio aspect = {});

// Vertical line through the box centre from the top edge to the bottom edge.
HeadFeetLine bbox_to_line(const BBox& box) noexcept;

// Rescales the width to aspect * h about the horizontal centre. Boxes already
// at the target width come back unchanged, which makes the operation
// idempotent bit-for-bit.
BBox normalize_aspect(const BBox& box, AspectRatio aspect = {}) noexcept;

// 1 - area(visible ∩ full) / area(full); 0 when visible is absent. A visible
// box that sticks out of the full box is clipped and reported through diag.
double occlusion_fraction(const BBox& full, const std::optional<BBox>& visible,
                          Diagnostics* diag = nullptr);

bool contains(const BBox& outer, const BBox& inner) noexcept;

}  // namespace pedeval
