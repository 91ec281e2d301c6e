#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pedeval/geometry.hpp"

namespace pedeval {

// Video identifier plus 0-based frame index. Written as "<video>/<index>".
struct FrameId {
  std::string video;
  std::int64_t index = 0;

  std::string str() const;
  static std::optional<FrameId> parse(std::string_view text);

  friend auto operator<=>(const FrameId&, const FrameId&) = default;
  friend bool operator==(const FrameId&, const FrameId&) = default;
};

enum class Label { person, people, person_uncertain, other };

std::string_view to_string(Label label);
std::optional<Label> parse_label(std::string_view text);

enum class Source { original, new_set, pruned, aligned, human_baseline };

std::string_view to_string(Source source);
std::optional<Source> parse_source(std::string_view text);

// Ground-truth record. `id` is unique within its frame (track ids may repeat
// across frames). `visible` is stored as given; consumers clip it to `box`.
struct Annotation {
  std::int64_t id = 0;
  FrameId frame;
  Label label = Label::person;
  BBox box;
  std::optional<BBox> visible;
  bool ignore = false;
  Source source = Source::original;
  // Angle column of the caltech text export; carried through, never used.
  double angle = 0.0;

  friend bool operator==(const Annotation&, const Annotation&) = default;
};

struct Detection {
  FrameId frame;
  BBox box;
  double score = 0.0;

  friend bool operator==(const Detection&, const Detection&) = default;
};

// Frame universe plus annotations. `frames` is kept sorted and unique; it
// includes empty frames because it is the FPPI denominator.
struct Dataset {
  std::vector<FrameId> frames;
  std::vector<Annotation> annotations;
  std::vector<std::string> meta;

  // Sorts frames, adds frames referenced by annotations, and orders
  // annotations by (frame, id).
  void normalize();
  bool has_frame(const FrameId& frame) const;

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

}  // namespace pedeval
