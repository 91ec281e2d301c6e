#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pedeval/error.hpp"
#include "pedeval/types.hpp"

namespace pedeval {

enum class AnnotationFormat { canonical, caltech_text };

std::optional<AnnotationFormat> parse_annotation_format(std::string_view text);

// Shortest decimal string that parses back to the same double.
std::string format_number(double value);

// Canonical text format, one record per line:
//   # <meta note>
//   F <video>/<frame>
//   A <video>/<frame> <id> <label> <x> <y> <w> <h> [V <vx> <vy> <vw> <vh>] <ignore> <source>
//   D <video>/<frame> <x> <y> <w> <h> <score>
// F records declare frames without annotations. The writer emits every frame
// as an F record followed by its A records.
std::string format_annotation_record(const Annotation& annotation);
Annotation parse_annotation_record(std::string_view line,
                                   std::string_view origin = "<record>",
                                   std::size_t line_number = 1,
                                   Diagnostics* diag = nullptr);
std::string format_canonical(const Dataset& dataset);
Dataset parse_canonical(std::string_view text, std::string_view origin,
                        Diagnostics* diag = nullptr);

// caltech-text: 12 space-separated fields per object
//   label x y w h occluded vx vy vw vh ignore angle
// Accepts a directory of per-frame files named <video>_I<index>.txt (nested
// directories are joined into the video name with '_'), a single per-frame
// file, or a single file holding "% frame <video>/<index>" blocks.
Dataset parse_caltech_text(std::string_view text, std::string_view origin,
                           Diagnostics* diag = nullptr);
std::string format_caltech_frame(const Dataset& dataset, const FrameId& frame);

Dataset read_annotations(const std::filesystem::path& path,
                         AnnotationFormat format, Diagnostics* diag = nullptr);

// Canonical goes to a single file; caltech-text goes to a directory with one
// file per frame.
void write_annotations(const Dataset& dataset, const std::filesystem::path& path,
                       AnnotationFormat format);

// Reads canonical "D" records or caltech CSV rows "frame,x,y,w,h,score" with a
// 1-based frame index. For CSV the video is `video` when given, otherwise the
// path relative to the root with separators replaced by '_' and the extension
// dropped (so res/set06/V000.txt inside res/ is video "set06_V000"). A
// directory is read recursively. The result is stably sorted by frame.
std::vector<Detection> read_detections(const std::filesystem::path& path,
                                       std::optional<std::string> video = std::nullopt,
                                       Diagnostics* diag = nullptr);
std::vector<Detection> parse_detections(std::string_view text,
                                        std::string_view origin,
                                        const std::string& video);
std::string format_detections(const std::vector<Detection>& detections);
void write_detections(const std::vector<Detection>& detections,
                      const std::filesystem::path& path);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);

struct Keyframe {
  std::int64_t frame = 0;
  BBox box;
  std::optional<BBox> visible;
  bool ignore = false;
};

// One object track with sparse keyframes, strictly increasing in frame.
struct Track {
  std::string video;
  std::int64_t id = 0;
  Label label = Label::person;
  Source source = Source::original;
  std::vector<Keyframe> keys;
};

// Per-frame annotations for frames first..last (inclusive). Box coordinates
// are linearly interpolated between the bracketing keyframes and exact at
// keyframes; outside the keyframe span the nearest keyframe is held.
std::vector<Annotation> interpolate_keyframes(const Track& track,
                                              std::int64_t first,
                                              std::int64_t last);

}  // namespace pedeval
