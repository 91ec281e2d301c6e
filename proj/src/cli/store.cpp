#include "pedeval/cli/store.hpp"

#include <algorithm>
#include <mutex>
#include <set>

#include <json.hpp>

#include "pedeval/dataio.hpp"
#include "pedeval/error.hpp"

namespace pedeval::cli {

namespace fs = std::filesystem;

namespace {

std::vector<std::string> clip_visible(std::vector<Annotation>& annotations) {
  std::vector<std::string> warnings;
  for (auto& a : annotations) {
    if (!a.visible) continue;
    const auto clipped = intersect(*a.visible, a.box);
    if (!clipped) {
      warnings.push_back("annotation " + std::to_string(a.id) + ": visible box outside its box, dropped");
      a.visible.reset();
    } else if (!(*clipped == *a.visible)) {
      warnings.push_back("annotation " + std::to_string(a.id) + ": visible box clipped to its box");
      a.visible = clipped;
    }
  }
  return warnings;
}

void validate(const FrameId& frame, const std::vector<Annotation>& annotations) {
  std::set<std::int64_t> ids;
  for (const auto& a : annotations) {
    if (a.frame != frame) {
      throw Error(ErrorCategory::input, "record for frame " + a.frame.str() + " sent to frame " + frame.str());
    }
    if (!ids.insert(a.id).second) {
      throw Error(ErrorCategory::input, "duplicate annotation id " + std::to_string(a.id) + " in " + frame.str());
    }
    require_valid(a.box, "annotation box");
  }
}

}  // namespace

std::string format_records(const std::vector<Annotation>& annotations) {
  std::string out;
  for (const auto& a : annotations) out += format_annotation_record(a) + "\n";
  return out;
}

std::vector<Annotation> parse_records(std::string_view text, std::string_view origin) {
  std::vector<Annotation> out;
  std::size_t line_number = 0;
  while (!text.empty()) {
    const auto end = text.find('\n');
    std::string_view line = text.substr(0, end);
    text = end == std::string_view::npos ? std::string_view{} : text.substr(end + 1);
    ++line_number;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(" \t") == std::string_view::npos) continue;
    out.push_back(parse_annotation_record(line, origin, line_number));
  }
  return out;
}

AnnotationStore::AnnotationStore(const Dataset& base, std::optional<fs::path> journal)
    : meta_(base.meta), journal_path_(std::move(journal)) {
  Dataset normalized = base;
  normalized.normalize();
  for (const auto& f : normalized.frames) frames_[f];
  for (const auto& a : normalized.annotations) frames_[a.frame].annotations.push_back(a);

  if (!journal_path_) return;
  if (fs::exists(*journal_path_)) {
    const std::string origin = journal_path_->string();
    const std::string text = read_file(*journal_path_);
    std::size_t line_number = 0;
    std::size_t start = 0;
    while (start < text.size()) {
      auto end = text.find('\n', start);
      if (end == std::string::npos) end = text.size();
      const std::string line = text.substr(start, end - start);
      start = end + 1;
      ++line_number;
      if (line.empty()) continue;
      const auto entry = nlohmann::json::parse(line, nullptr, false);
      if (entry.is_discarded() || !entry.is_object() || !entry.contains("frame") || !entry.contains("revision") ||
          !entry.contains("records")) {
        throw ParseError(origin, line_number, 1, "malformed journal entry");
      }
      const auto frame = FrameId::parse(entry["frame"].get<std::string>());
      if (!frame || !frames_.count(*frame)) throw ParseError(origin, line_number, 1, "journal names an unknown frame");
      auto& state = frames_[*frame];
      if (entry["revision"].get<std::uint64_t>() != state.revision + 1) {
        throw ParseError(origin, line_number, 1, "journal revision out of sequence for " + frame->str());
      }
      auto annotations = parse_records(entry["records"].get<std::string>(), origin);
      validate(*frame, annotations);
      clip_visible(annotations);
      apply(*frame, std::move(annotations));
    }
  }
  journal_.open(*journal_path_, std::ios::app | std::ios::binary);
  if (!journal_) throw Error(ErrorCategory::io, "cannot open journal for writing: " + journal_path_->string());
}

std::vector<FrameId> AnnotationStore::frames() const {
  std::shared_lock lock(mutex_);
  std::vector<FrameId> out;
  out.reserve(frames_.size());
  for (const auto& [id, state] : frames_) out.push_back(id);
  return out;
}

std::optional<FrameState> AnnotationStore::get(const FrameId& frame) const {
  std::shared_lock lock(mutex_);
  const auto it = frames_.find(frame);
  if (it == frames_.end()) return std::nullopt;
  return it->second;
}

void AnnotationStore::apply(const FrameId& frame, std::vector<Annotation> annotations) {
  std::sort(annotations.begin(), annotations.end(),
            [](const Annotation& a, const Annotation& b) { return a.id < b.id; });
  auto& state = frames_[frame];
  state.annotations = std::move(annotations);
  ++state.revision;
}

PutResult AnnotationStore::put(const FrameId& frame, std::uint64_t expected_revision,
                               std::vector<Annotation> annotations) {
  validate(frame, annotations);
  PutResult result;
  result.warnings = clip_visible(annotations);

  std::unique_lock lock(mutex_);
  const auto it = frames_.find(frame);
  if (it == frames_.end()) return {PutStatus::not_found, 0, {}};
  if (it->second.revision != expected_revision) return {PutStatus::conflict, it->second.revision, {}};

  if (journal_.is_open()) {
    nlohmann::ordered_json entry;
    entry["frame"] = frame.str();
    entry["revision"] = expected_revision + 1;
    entry["records"] = format_records(annotations);
    journal_ << entry.dump() << '\n';
    journal_.flush();
    if (!journal_) throw Error(ErrorCategory::io, "journal write failed: " + journal_path_->string());
  }
  apply(frame, std::move(annotations));
  result.revision = it->second.revision;
  return result;
}

Dataset AnnotationStore::snapshot() const {
  std::shared_lock lock(mutex_);
  Dataset out;
  out.meta = meta_;
  for (const auto& [id, state] : frames_) {
    out.frames.push_back(id);
    out.annotations.insert(out.annotations.end(), state.annotations.begin(), state.annotations.end());
  }
  out.normalize();
  return out;
}

}  // namespace pedeval::cli
