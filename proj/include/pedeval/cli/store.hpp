#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include "pedeval/types.hpp"

namespace pedeval::cli {

struct FrameState {
  std::uint64_t revision = 0;
  std::vector<Annotation> annotations;
};

enum class PutStatus { ok, conflict, not_found };

struct PutResult {
  PutStatus status = PutStatus::ok;
  std::uint64_t revision = 0;  // current revision after the call
  std::vector<std::string> warnings;
};

// Single-writer annotation store with a revision counter per frame. Every
// accepted write is appended to the journal (one JSON object per line)
// before it becomes visible; opening a store replays the journal.
class AnnotationStore {
 public:
  explicit AnnotationStore(const Dataset& base, std::optional<std::filesystem::path> journal = std::nullopt);

  std::vector<FrameId> frames() const;
  std::optional<FrameState> get(const FrameId& frame) const;

  // Replaces the frame's annotations when `expected_revision` is current.
  // Annotations must belong to `frame` and have unique ids; visible boxes
  // are clipped to their box. Throws Error(input) for invalid content.
  PutResult put(const FrameId& frame, std::uint64_t expected_revision, std::vector<Annotation> annotations);

  Dataset snapshot() const;

 private:
  void apply(const FrameId& frame, std::vector<Annotation> annotations);

  mutable std::shared_mutex mutex_;
  std::vector<std::string> meta_;
  std::map<FrameId, FrameState> frames_;
  std::optional<std::filesystem::path> journal_path_;
  std::ofstream journal_;
};

// Records of one frame in the canonical text format, one per line.
std::string format_records(const std::vector<Annotation>& annotations);
std::vector<Annotation> parse_records(std::string_view text, std::string_view origin);

}  // namespace pedeval::cli
