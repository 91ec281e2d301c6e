#include "pedeval/types.hpp"

#include <algorithm>
#include <charconv>

namespace pedeval {

std::string FrameId::str() const { return video + "/" + std::to_string(index); }

std::optional<FrameId> FrameId::parse(std::string_view text) {
  const auto slash = text.rfind('/');
  if (slash == std::string_view::npos || slash == 0 || slash + 1 == text.size()) {
    return std::nullopt;
  }
  FrameId id;
  id.video = std::string(text.substr(0, slash));
  const auto digits = text.substr(slash + 1);
  const auto [ptr, ec] =
      std::from_chars(digits.data(), digits.data() + digits.size(), id.index);
  if (ec != std::errc{} || ptr != digits.data() + digits.size() || id.index < 0) {
    return std::nullopt;
  }
  return id;
}

std::string_view to_string(Label label) {
  switch (label) {
    case Label::person: return "person";
    case Label::people: return "people";
    case Label::person_uncertain: return "person?";
    case Label::other: return "other";
  }
  return "other";
}

std::optional<Label> parse_label(std::string_view text) {
  if (text == "person") return Label::person;
  if (text == "people") return Label::people;
  if (text == "person?") return Label::person_uncertain;
  if (text == "other") return Label::other;
  return std::nullopt;
}

std::string_view to_string(Source source) {
  switch (source) {
    case Source::original: return "original";
    case Source::new_set: return "new";
    case Source::pruned: return "pruned";
    case Source::aligned: return "aligned";
    case Source::human_baseline: return "human-baseline";
  }
  return "original";
}

std::optional<Source> parse_source(std::string_view text) {
  if (text == "original") return Source::original;
  if (text == "new") return Source::new_set;
  if (text == "pruned") return Source::pruned;
  if (text == "aligned") return Source::aligned;
  if (text == "human-baseline") return Source::human_baseline;
  return std::nullopt;
}

void Dataset::normalize() {
  for (const auto& a : annotations) frames.push_back(a.frame);
  std::sort(frames.begin(), frames.end());
  frames.erase(std::unique(frames.begin(), frames.end()), frames.end());
  std::stable_sort(annotations.begin(), annotations.end(),
                   [](const Annotation& l, const Annotation& r) {
                     if (l.frame != r.frame) return l.frame < r.frame;
                     return l.id < r.id;
                   });
}

bool Dataset::has_frame(const FrameId& frame) const {
  return std::binary_search(frames.begin(), frames.end(), frame);
}

}  // namespace pedeval
