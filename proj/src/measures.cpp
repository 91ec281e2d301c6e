#include "pedeval/measures.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

#include "pedeval/error.hpp"

namespace pedeval {

namespace {

// Re-blur along one axis; `horizontal` filters along x.
std::vector<double> box_filter(const Patch& p, int taps, bool horizontal) {
  const int w = p.width();
  const int h = p.height();
  const int before = (taps - 1) / 2;
  std::vector<double> out(p.values().size());
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double sum = 0.0;
      for (int k = -before; k < taps - before; ++k) {
        const int xx = horizontal ? std::clamp(x + k, 0, w - 1) : x;
        const int yy = horizontal ? y : std::clamp(y + k, 0, h - 1);
        sum += p.at(xx, yy);
      }
      out[static_cast<std::size_t>(y) * static_cast<std::size_t>(w) + static_cast<std::size_t>(x)] = sum / taps;
    }
  }
  return out;
}

// Blur along one axis, or nullopt when the patch has no variation along it.
std::optional<double> directional_blur(const Patch& p, int taps, bool horizontal) {
  const auto blurred = box_filter(p, taps, horizontal);
  const int w = p.width();
  const int h = p.height();
  auto b = [&](int x, int y) {
    return blurred[static_cast<std::size_t>(y) * static_cast<std::size_t>(w) + static_cast<std::size_t>(x)];
  };
  double variation = 0.0;
  double lost = 0.0;
  // Pixel (x, y) against its successor along the axis, over the interior.
  for (int y = 1; y + 1 < h; ++y) {
    for (int x = 1; x + 1 < w; ++x) {
      const int nx = horizontal ? x + 1 : x;
      const int ny = horizontal ? y : y + 1;
      const double d_orig = std::abs(p.at(x, y) - p.at(nx, ny));
      const double d_blur = std::abs(b(x, y) - b(nx, ny));
      variation += d_orig;
      lost += std::max(0.0, d_orig - d_blur);
    }
  }
  if (variation <= 0.0) return std::nullopt;
  return (variation - lost) / variation;
}

}  // namespace

double blur_score(const Patch& patch, int taps) {
  if (patch.width() < 3 || patch.height() < 3) {
    throw Error(ErrorCategory::input, "blur needs a patch of at least 3x3 pixels");
  }
  if (taps < 2) throw Error(ErrorCategory::config, "blur filter needs at least 2 taps");
  const auto along_x = directional_blur(patch, taps, true);
  const auto along_y = directional_blur(patch, taps, false);
  if (!along_x && !along_y) return 1.0;
  return std::max(along_x.value_or(0.0), along_y.value_or(0.0));
}

double quantile_sorted(const std::vector<double>& sorted, double level) {
  if (sorted.empty()) throw Error(ErrorCategory::input, "quantile of an empty sample");
  if (!(level >= 0.0 && level <= 1.0)) throw Error(ErrorCategory::config, "quantile level must lie in [0, 1]");
  const double h = static_cast<double>(sorted.size() - 1) * level;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

double contrast_score(const Patch& patch, QuantileLevels levels) {
  if (!(levels.low <= levels.high)) throw Error(ErrorCategory::config, "contrast levels need low <= high");
  std::vector<double> values = patch.values();
  if (values.empty()) throw Error(ErrorCategory::input, "contrast of an empty patch");
  std::sort(values.begin(), values.end());
  return std::clamp(quantile_sorted(values, levels.high) - quantile_sorted(values, levels.low), 0.0, 1.0);
}

}  // namespace pedeval
