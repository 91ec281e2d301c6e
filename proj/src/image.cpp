#include "pedeval/image.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>

#include "pedeval/dataio.hpp"
#include "pedeval/error.hpp"

namespace pedeval {

namespace {

void check_dims(int width, int height) {
  if (width <= 0 || height <= 0) throw Error(ErrorCategory::input, "image dimensions must be positive");
}

// Reads the next whitespace-delimited PGM header token, skipping comments.
std::string header_token(const std::string& data, std::size_t& pos, const std::filesystem::path& path) {
  while (pos < data.size()) {
    if (data[pos] == '#') {
      while (pos < data.size() && data[pos] != '\n') ++pos;
    } else if (std::isspace(static_cast<unsigned char>(data[pos]))) {
      ++pos;
    } else {
      break;
    }
  }
  const std::size_t start = pos;
  while (pos < data.size() && !std::isspace(static_cast<unsigned char>(data[pos]))) ++pos;
  if (start == pos) throw Error(ErrorCategory::parse, path.string() + ": truncated PGM header");
  return data.substr(start, pos - start);
}

int header_int(const std::string& data, std::size_t& pos, const std::filesystem::path& path) {
  const std::string tok = header_token(data, pos, path);
  try {
    std::size_t used = 0;
    const int v = std::stoi(tok, &used);
    if (used != tok.size()) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    throw Error(ErrorCategory::parse, path.string() + ": bad PGM header field '" + tok + "'");
  }
}

// Frees the png_image state on every exit path.
struct PngImage {
  png_image image{};
  PngImage() { image.version = PNG_IMAGE_VERSION; }
  ~PngImage() { png_image_free(&image); }
  PngImage(const PngImage&) = delete;
  PngImage& operator=(const PngImage&) = delete;
};

}  // namespace

GrayImage::GrayImage(int width, int height, std::uint8_t fill)
    : width_(width), height_(height) {
  check_dims(width, height);
  pixels_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill);
}

GrayImage::GrayImage(int width, int height, std::vector<std::uint8_t> pixels)
    : width_(width), height_(height), pixels_(std::move(pixels)) {
  check_dims(width, height);
  if (pixels_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
    throw Error(ErrorCategory::input, "pixel count does not match image dimensions");
  }
}

Patch::Patch(int width, int height, std::vector<double> values)
    : width_(width), height_(height), values_(std::move(values)) {
  check_dims(width, height);
  if (values_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
    throw Error(ErrorCategory::input, "value count does not match patch dimensions");
  }
}

Patch to_patch(const GrayImage& image) {
  std::vector<double> values(image.pixels().size());
  std::transform(image.pixels().begin(), image.pixels().end(), values.begin(),
                 [](std::uint8_t p) { return p / 255.0; });
  return Patch(image.width(), image.height(), std::move(values));
}

Patch crop(const GrayImage& image, const BBox& box) {
  const int x0 = static_cast<int>(std::max(0.0, std::floor(box.x)));
  const int y0 = static_cast<int>(std::max(0.0, std::floor(box.y)));
  const int x1 = static_cast<int>(std::min<double>(image.width(), std::ceil(box.right())));
  const int y1 = static_cast<int>(std::min<double>(image.height(), std::ceil(box.bottom())));
  if (x1 <= x0 || y1 <= y0) throw Error(ErrorCategory::input, "crop lies outside the image");
  std::vector<double> values;
  values.reserve(static_cast<std::size_t>(x1 - x0) * static_cast<std::size_t>(y1 - y0));
  for (int y = y0; y < y1; ++y) {
    for (int x = x0; x < x1; ++x) values.push_back(image.at(x, y) / 255.0);
  }
  return Patch(x1 - x0, y1 - y0, std::move(values));
}

GrayImage read_pgm(const std::filesystem::path& path) {
  const std::string data = read_file(path);
  std::size_t pos = 0;
  if (header_token(data, pos, path) != "P5") {
    throw Error(ErrorCategory::parse, path.string() + ": not a binary PGM (P5)");
  }
  const int width = header_int(data, pos, path);
  const int height = header_int(data, pos, path);
  const int maxval = header_int(data, pos, path);
  if (width <= 0 || height <= 0) throw Error(ErrorCategory::parse, path.string() + ": bad PGM size");
  if (maxval <= 0 || maxval > 255) {
    throw Error(ErrorCategory::parse, path.string() + ": only 8-bit PGM is supported");
  }
  ++pos;  // single whitespace after maxval
  const std::size_t count = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  if (data.size() < pos + count) throw Error(ErrorCategory::parse, path.string() + ": truncated PGM data");
  std::vector<std::uint8_t> pixels(data.begin() + static_cast<std::ptrdiff_t>(pos),
                                   data.begin() + static_cast<std::ptrdiff_t>(pos + count));
  if (maxval != 255) {
    for (auto& p : pixels) {
      p = static_cast<std::uint8_t>(std::lround(std::min<int>(p, maxval) * 255.0 / maxval));
    }
  }
  return GrayImage(width, height, std::move(pixels));
}

void write_pgm(const GrayImage& image, const std::filesystem::path& path) {
  std::string out = "P5\n" + std::to_string(image.width()) + " " + std::to_string(image.height()) + "\n255\n";
  out.append(image.pixels().begin(), image.pixels().end());
  write_file(path, out);
}

GrayImage read_png(const std::filesystem::path& path) {
  PngImage png;
  if (!png_image_begin_read_from_file(&png.image, path.c_str())) {
    throw Error(ErrorCategory::io, path.string() + ": " + png.image.message);
  }
  png.image.format = PNG_FORMAT_GRAY;
  const int width = static_cast<int>(png.image.width);
  const int height = static_cast<int>(png.image.height);
  std::vector<std::uint8_t> pixels(PNG_IMAGE_SIZE(png.image));
  if (!png_image_finish_read(&png.image, nullptr, pixels.data(), 0, nullptr)) {
    throw Error(ErrorCategory::parse, path.string() + ": " + png.image.message);
  }
  return GrayImage(width, height, std::move(pixels));
}

void write_png(const GrayImage& image, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  PngImage png;
  png.image.width = static_cast<png_uint_32>(image.width());
  png.image.height = static_cast<png_uint_32>(image.height());
  png.image.format = PNG_FORMAT_GRAY;
  if (!png_image_write_to_file(&png.image, path.c_str(), 0, image.pixels().data(), 0, nullptr)) {
    throw Error(ErrorCategory::io, path.string() + ": " + png.image.message);
  }
}

GrayImage read_image(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCategory::io, "cannot open " + path.string());
  char magic[8] = {};
  in.read(magic, sizeof magic);
  if (in.gcount() >= 2 && magic[0] == 'P' && magic[1] == '5') return read_pgm(path);
  if (in.gcount() == 8 && png_sig_cmp(reinterpret_cast<png_const_bytep>(magic), 0, 8) == 0) {
    return read_png(path);
  }
  throw Error(ErrorCategory::parse, path.string() + ": unsupported image format (need PGM P5 or PNG)");
}

std::optional<std::filesystem::path> ImageDirectory::locate(const FrameId& frame) const {
  char stem[64];
  std::snprintf(stem, sizeof stem, "_I%05lld", static_cast<long long>(frame.index));
  for (const char* ext : {".png", ".pgm"}) {
    auto candidate = root_ / (frame.video + stem + ext);
    if (std::filesystem::is_regular_file(candidate)) return candidate;
  }
  return std::nullopt;
}

std::optional<GrayImage> ImageDirectory::load(const FrameId& frame) const {
  const auto path = locate(frame);
  if (!path) return std::nullopt;
  return read_image(*path);
}

}  // namespace pedeval
