#include "pedeval/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace pedeval {

namespace {

// Length of [a0, a0+aw] ∩ [b0, b0+bw]. Containment returns the inner extent
// unchanged so that identical or nested boxes give exact area ratios.
double overlap_1d(double a0, double aw, double b0, double bw) noexcept {
  const double a1 = a0 + aw;
  const double b1 = b0 + bw;
  if (a0 >= b0 && a1 <= b1) return aw;
  if (b0 >= a0 && b1 <= a1) return bw;
  return std::max(0.0, std::min(a1, b1) - std::max(a0, b0));
}

// Left edge that keeps the computed centre bit-identical to `center` when
// possible.
double left_for_center(double center, double width) noexcept {
  const double half = width / 2.0;
  double x = center - half;
  for (int step = 0; step < 4 && x + half != center; ++step) {
    x = std::nextafter(x, x + half < center ? HUGE_VAL : -HUGE_VAL);
  }
  return x + half == center ? x : center - half;
}

}  // namespace

bool BBox::valid() const noexcept {
  return std::isfinite(x) && std::isfinite(y) && std::isfinite(w) &&
         std::isfinite(h) && w > 0.0 && h > 0.0 && std::isfinite(w * h);
}

double HeadFeetLine::length() const noexcept {
  return std::hypot(feet.x - head.x, feet.y - head.y);
}

AspectRatio::AspectRatio(double value) : value_(value) {
  if (!(std::isfinite(value) && value > 0.0)) {
    throw Error(ErrorCategory::input, "aspect ratio must be positive and finite");
  }
}

void require_valid(const BBox& box, const char* what) {
  if (!box.valid()) {
    std::ostringstream os;
    os << what << ": invalid box (" << box.x << ", " << box.y << ", " << box.w
       << ", " << box.h << ")";
    throw Error(ErrorCategory::input, os.str());
  }
}

std::optional<BBox> intersect(const BBox& a, const BBox& b) noexcept {
  const double iw = overlap_1d(a.x, a.w, b.x, b.w);
  const double ih = overlap_1d(a.y, a.h, b.y, b.h);
  if (iw <= 0.0 || ih <= 0.0) return std::nullopt;
  return BBox{std::max(a.x, b.x), std::max(a.y, b.y), iw, ih};
}

double intersection_area(const BBox& a, const BBox& b) noexcept {
  return overlap_1d(a.x, a.w, b.x, b.w) * overlap_1d(a.y, a.h, b.y, b.h);
}

double iou(const BBox& a, const BBox& b) noexcept {
  const double inter = intersection_area(a, b);
  if (inter <= 0.0) return 0.0;
  const double uni = a.area() + b.area() - inter;
  return std::clamp(inter / uni, 0.0, 1.0);
}

double overlap_over_detection(const BBox& det, const BBox& region) noexcept {
  return std::clamp(intersection_area(det, region) / det.area(), 0.0, 1.0);
}

BBox line_to_bbox(const HeadFeetLine& line, AspectRatio aspect) {
  const double height = line.length();
  if (!(height > 0.0) || !std::isfinite(height)) {
    throw Error(ErrorCategory::input, "head-feet line has zero length");
  }
  const double width = aspect.value() * height;
  const double cx = (line.head.x + line.feet.x) / 2.0;
  const double cy = (line.head.y + line.feet.y) / 2.0;
  return BBox{cx - width / 2.0, cy - height / 2.0, width, height};
}

HeadFeetLine bbox_to_line(const BBox& box) noexcept {
  const double cx = box.center_x();
  return HeadFeetLine{{cx, box.y}, {cx, box.bottom()}};
}

BBox normalize_aspect(const BBox& box, AspectRatio aspect) noexcept {
  const double width = aspect.value() * box.h;
  if (box.w == width) return box;
  return BBox{left_for_center(box.center_x(), width), box.y, width, box.h};
}

double occlusion_fraction(const BBox& full, const std::optional<BBox>& visible,
                          Diagnostics* diag) {
  if (!visible) return 0.0;
  if (!contains(full, *visible)) {
    warn(diag, "visible region extends outside its box; clipped");
  }
  const double seen = intersection_area(*visible, full);
  return std::clamp(1.0 - seen / full.area(), 0.0, 1.0);
}

bool contains(const BBox& outer, const BBox& inner) noexcept {
  return inner.x >= outer.x && inner.y >= outer.y &&
         inner.right() <= outer.right() && inner.bottom() <= outer.bottom();
}

}  // namespace pedeval
