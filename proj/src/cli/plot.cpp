#include "pedeval/cli/plot.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>

namespace pedeval::cli {
namespace {

constexpr double kWidth = 560.0;
constexpr double kHeight = 480.0;
constexpr double kLeft = 60.0;
constexpr double kRight = 20.0;
constexpr double kTop = 20.0;
constexpr double kBottom = 50.0;
constexpr double kMissLo = 0.05;
constexpr double kMissHi = 1.0;

constexpr std::array<const char*, 8> kColors{"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                             "#9467bd", "#8c564b", "#e377c2", "#17becf"};
constexpr std::array<double, 9> kMissTicks{0.05, 0.10, 0.20, 0.30, 0.40, 0.50, 0.64, 0.80, 1.0};

std::string fmt(const char* pattern, double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, pattern, value);
  return buf;
}

std::string escape(std::string_view text) {
  std::string out;
  for (char c : text) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

struct Axes {
  FppiRange range;

  double x(double fppi) const {
    const double lo = std::log10(range.lo), hi = std::log10(range.hi);
    const double v = std::clamp(std::log10(std::max(fppi, range.lo)), lo, hi);
    return kLeft + (v - lo) / (hi - lo) * (kWidth - kLeft - kRight);
  }
  double y(double miss) const {
    const double lo = std::log10(kMissLo), hi = std::log10(kMissHi);
    const double v = std::clamp(std::log10(std::max(miss, kMissLo)), lo, hi);
    return kTop + (hi - v) / (hi - lo) * (kHeight - kTop - kBottom);
  }
};

std::string point(double x, double y) { return fmt("%.2f", x) + "," + fmt("%.2f", y); }

std::string step_polyline(const Curve& curve, const Axes& axes) {
  std::string pts;
  bool first = true;
  double prev_y = 0.0;
  const auto& points = curve.points;
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (points[i].fppi > axes.range.hi) break;
    const double x = axes.x(points[i].fppi);
    const double y = axes.y(points[i].miss_rate);
    if (!first) pts += " " + point(x, prev_y);
    pts += (first ? "" : " ") + point(x, y);
    first = false;
    prev_y = y;
  }
  if (first) {
    const double y = axes.y(1.0);
    pts = point(axes.x(axes.range.lo), y);
    prev_y = y;
  }
  pts += " " + point(axes.x(axes.range.hi), prev_y);
  return pts;
}

}  // namespace

std::string render_svg(std::span<const PlotCurve> curves, FppiRange range) {
  if (curves.empty()) throw Error(ErrorCategory::input, "plot needs at least one curve");
  if (!(range.lo > 0.0 && range.lo < range.hi)) throw Error(ErrorCategory::config, "invalid plot FPPI range");
  const Axes axes{range};
  std::string svg;
  svg += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt("%.0f", kWidth) + "\" height=\"" +
         fmt("%.0f", kHeight) + "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  svg += "<rect x=\"0\" y=\"0\" width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg += "<g class=\"grid\" stroke=\"#dddddd\" stroke-width=\"1\">\n";
  for (double miss : kMissTicks) {
    const double y = axes.y(miss);
    svg += "<line x1=\"" + fmt("%.2f", kLeft) + "\" y1=\"" + fmt("%.2f", y) + "\" x2=\"" +
           fmt("%.2f", kWidth - kRight) + "\" y2=\"" + fmt("%.2f", y) + "\"/>\n";
  }
  const int first_decade = static_cast<int>(std::ceil(std::log10(range.lo) - 1e-9));
  const int last_decade = static_cast<int>(std::floor(std::log10(range.hi) + 1e-9));
  for (int d = first_decade; d <= last_decade; ++d) {
    const double x = axes.x(std::pow(10.0, d));
    svg += "<line x1=\"" + fmt("%.2f", x) + "\" y1=\"" + fmt("%.2f", kTop) + "\" x2=\"" + fmt("%.2f", x) +
           "\" y2=\"" + fmt("%.2f", kHeight - kBottom) + "\"/>\n";
  }
  svg += "</g>\n<g class=\"ticks\" fill=\"black\">\n";
  for (double miss : kMissTicks) {
    svg += "<text x=\"" + fmt("%.2f", kLeft - 6) + "\" y=\"" + fmt("%.2f", axes.y(miss) + 4) +
           "\" text-anchor=\"end\">" + fmt("%.2f", miss) + "</text>\n";
  }
  for (int d = first_decade; d <= last_decade; ++d) {
    svg += "<text x=\"" + fmt("%.2f", axes.x(std::pow(10.0, d))) + "\" y=\"" + fmt("%.2f", kHeight - kBottom + 16) +
           "\" text-anchor=\"middle\">10^" + std::to_string(d) + "</text>\n";
  }
  svg += "<text x=\"" + fmt("%.2f", (kLeft + kWidth - kRight) / 2) + "\" y=\"" + fmt("%.2f", kHeight - 10) +
         "\" text-anchor=\"middle\">false positives per image</text>\n";
  svg += "<text transform=\"translate(14," + fmt("%.2f", (kTop + kHeight - kBottom) / 2) +
         ") rotate(-90)\" text-anchor=\"middle\">miss rate</text>\n";
  svg += "</g>\n<rect class=\"frame\" x=\"" + fmt("%.2f", kLeft) + "\" y=\"" + fmt("%.2f", kTop) + "\" width=\"" +
         fmt("%.2f", kWidth - kLeft - kRight) + "\" height=\"" + fmt("%.2f", kHeight - kTop - kBottom) +
         "\" fill=\"none\" stroke=\"black\"/>\n";

  svg += "<g class=\"curves\" fill=\"none\" stroke-width=\"2\">\n";
  for (std::size_t i = 0; i < curves.size(); ++i) {
    svg += "<polyline stroke=\"" + std::string(kColors[i % kColors.size()]) + "\" points=\"" +
           step_polyline(curves[i].curve, axes) + "\"/>\n";
  }
  svg += "</g>\n<g class=\"legend\">\n";
  const double legend_x = kWidth - kRight - 200;
  for (std::size_t i = 0; i < curves.size(); ++i) {
    const double mr2 = 100.0 * log_average_miss_rate(curves[i].curve, kMr2Range);
    const double mr4 = 100.0 * log_average_miss_rate(curves[i].curve, kMr4Range);
    const double y = kHeight - kBottom - 12 - 16.0 * static_cast<double>(curves.size() - 1 - i);
    const char* color = kColors[i % kColors.size()];
    svg += "<line x1=\"" + fmt("%.2f", legend_x) + "\" y1=\"" + fmt("%.2f", y - 4) + "\" x2=\"" +
           fmt("%.2f", legend_x + 20) + "\" y2=\"" + fmt("%.2f", y - 4) + "\" stroke=\"" + color +
           "\" stroke-width=\"2\"/>\n";
    svg += "<text x=\"" + fmt("%.2f", legend_x + 26) + "\" y=\"" + fmt("%.2f", y) + "\">" + fmt("%.2f", mr2) +
           " (" + fmt("%.2f", mr4) + ") " + escape(curves[i].label) + "</text>\n";
  }
  svg += "</g>\n</svg>\n";
  return svg;
}

}  // namespace pedeval::cli
