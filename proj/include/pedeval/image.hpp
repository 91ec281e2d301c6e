#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "pedeval/geometry.hpp"
#include "pedeval/types.hpp"

namespace pedeval {

// 8-bit grayscale image, row-major.
class GrayImage {
 public:
  GrayImage() = default;
  GrayImage(int width, int height, std::uint8_t fill = 0);
  GrayImage(int width, int height, std::vector<std::uint8_t> pixels);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  bool empty() const noexcept { return pixels_.empty(); }

  std::uint8_t at(int x, int y) const { return pixels_[index(x, y)]; }
  std::uint8_t& at(int x, int y) { return pixels_[index(x, y)]; }
  const std::vector<std::uint8_t>& pixels() const noexcept { return pixels_; }

  friend bool operator==(const GrayImage&, const GrayImage&) = default;

 private:
  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x);
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> pixels_;
};

// Intensities scaled to [0, 1].
class Patch {
 public:
  Patch() = default;
  Patch(int width, int height, std::vector<double> values);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  double at(int x, int y) const {
    return values_[static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x)];
  }
  const std::vector<double>& values() const noexcept { return values_; }

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<double> values_;
};

Patch to_patch(const GrayImage& image);

// Pixels touched by the box, clipped to the image. Throws Error(input) when
// nothing of the box lies inside.
Patch crop(const GrayImage& image, const BBox& box);

// Binary PGM (P5, maxval <= 255).
GrayImage read_pgm(const std::filesystem::path& path);
void write_pgm(const GrayImage& image, const std::filesystem::path& path);

// PNG decoded to 8-bit gray (color inputs are converted).
GrayImage read_png(const std::filesystem::path& path);
void write_png(const GrayImage& image, const std::filesystem::path& path);

// Dispatches on the file signature.
GrayImage read_image(const std::filesystem::path& path);

// Looks up <root>/<video>_I<index:05>.png, then .pgm.
class ImageDirectory {
 public:
  explicit ImageDirectory(std::filesystem::path root) : root_(std::move(root)) {}

  std::optional<std::filesystem::path> locate(const FrameId& frame) const;
  std::optional<GrayImage> load(const FrameId& frame) const;

 private:
  std::filesystem::path root_;
};

}  // namespace pedeval
