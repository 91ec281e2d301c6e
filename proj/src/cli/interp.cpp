#include "pedeval/cli/interp.hpp"

#include <cmath>
#include <numbers>

#include "pedeval/dataio.hpp"
#include "pedeval/error.hpp"

namespace pedeval::cli {

std::vector<WalkSample> interpolation_walk(const WalkParams& p) {
  if (!(p.amplitude >= 0.0) || !std::isfinite(p.amplitude)) throw Error(ErrorCategory::config, "amplitude must be >= 0");
  if (p.period < 1 || p.stride < 1 || p.frames < 1) throw Error(ErrorCategory::config, "period, stride and frames must be >= 1");
  if (!(p.height > 0.0) || !(p.aspect > 0.0)) throw Error(ErrorCategory::config, "height and aspect must be positive");

  const double base_y = 2.0 * p.height;
  const double w = p.aspect * p.height;
  auto truth = [&](std::int64_t f) {
    const double y = base_y + p.amplitude * std::sin(2.0 * std::numbers::pi * static_cast<double>(f) / p.period);
    return BBox{100.0, y, w, p.height};
  };

  Track track;
  track.video = "walk";
  track.id = 1;
  const std::int64_t last = p.frames - 1;
  for (std::int64_t f = 0; f <= last; f += p.stride) track.keys.push_back({f, truth(f), std::nullopt, false});
  if (track.keys.back().frame != last) track.keys.push_back({last, truth(last), std::nullopt, false});

  const auto interpolated = interpolate_keyframes(track, 0, last);
  std::vector<WalkSample> out;
  out.reserve(interpolated.size());
  for (const auto& a : interpolated) {
    const BBox t = truth(a.frame.index);
    out.push_back({a.frame.index, t.y, a.box.y, iou(t, a.box)});
  }
  return out;
}

}  // namespace pedeval::cli
