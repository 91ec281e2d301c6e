#include "pedeval/dataio.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace pedeval {

namespace fs = std::filesystem;

namespace {

struct Token {
  std::string_view text;
  std::size_t column = 1;  // 1-based
};

std::vector<Token> split(std::string_view line, char sep) {
  std::vector<Token> tokens;
  std::size_t i = 0;
  if (sep == ' ') {
    while (i < line.size()) {
      while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
      if (i >= line.size()) break;
      const std::size_t start = i;
      while (i < line.size() && line[i] != ' ' && line[i] != '\t') ++i;
      tokens.push_back({line.substr(start, i - start), start + 1});
    }
    return tokens;
  }
  std::size_t start = 0;
  for (i = 0; i <= line.size(); ++i) {
    if (i == line.size() || line[i] == sep) {
      auto field = line.substr(start, i - start);
      std::size_t lead = 0;
      while (lead < field.size() && (field[lead] == ' ' || field[lead] == '\t')) ++lead;
      field.remove_prefix(lead);
      while (!field.empty() && (field.back() == ' ' || field.back() == '\t')) {
        field.remove_suffix(1);
      }
      tokens.push_back({field, start + lead + 1});
      start = i + 1;
    }
  }
  return tokens;
}

std::string_view strip_cr(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  return line;
}

template <typename Fn>
void for_each_line(std::string_view text, Fn&& fn) {
  std::size_t line_number = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    ++line_number;
    fn(strip_cr(text.substr(pos, end - pos)), line_number);
    pos = end + 1;
  }
}

bool is_blank(std::string_view line) {
  return line.find_first_not_of(" \t") == std::string_view::npos;
}

class LineParser {
 public:
  LineParser(std::string_view origin, std::size_t line) : origin_(origin), line_(line) {}

  [[noreturn]] void fail(std::size_t column, const std::string& reason) const {
    throw ParseError(std::string(origin_), line_, column, reason);
  }

  double number(const Token& token, const char* field) const {
    double value = 0.0;
    const auto* first = token.text.data();
    const auto* last = first + token.text.size();
    if (first != last && *first == '+') ++first;
    const auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc{} || ptr != last || !std::isfinite(value)) {
      fail(token.column, std::string("expected number for ") + field + ", got '" +
                             std::string(token.text) + "'");
    }
    return value;
  }

  std::int64_t integer(const Token& token, const char* field) const {
    std::int64_t value = 0;
    const auto* last = token.text.data() + token.text.size();
    const auto [ptr, ec] = std::from_chars(token.text.data(), last, value);
    if (ec != std::errc{} || ptr != last) {
      fail(token.column, std::string("expected integer for ") + field + ", got '" +
                             std::string(token.text) + "'");
    }
    return value;
  }

  FrameId frame(const Token& token) const {
    auto id = FrameId::parse(token.text);
    if (!id) fail(token.column, "expected <video>/<frame>, got '" + std::string(token.text) + "'");
    if (id->video.find_first_of(" \t") != std::string::npos) fail(token.column, "bad video id");
    return *id;
  }

  BBox box(const std::vector<Token>& tokens, std::size_t at, const char* what) const {
    BBox b{number(tokens[at], "x"), number(tokens[at + 1], "y"),
           number(tokens[at + 2], "w"), number(tokens[at + 3], "h")};
    if (!b.valid()) fail(tokens[at].column, std::string(what) + " must have positive width and height");
    return b;
  }

  void expect_count(const std::vector<Token>& tokens, std::size_t n, const char* what) const {
    if (tokens.size() != n) {
      const std::size_t column = tokens.size() > n ? tokens[n].column : 1;
      fail(column, std::string(what) + ": expected " + std::to_string(n) +
                       " fields, got " + std::to_string(tokens.size()));
    }
  }

 private:
  std::string_view origin_;
  std::size_t line_;
};

std::string slashes_to_underscores(const fs::path& relative) {
  std::string out;
  for (const auto& part : relative) {
    if (!out.empty()) out += '_';
    out += part.string();
  }
  return out;
}

// "<video>_I<index>" -> FrameId.
std::optional<FrameId> frame_from_stem(const std::string& stem) {
  const auto marker = stem.rfind("_I");
  if (marker == std::string::npos || marker == 0) return std::nullopt;
  const std::string digits = stem.substr(marker + 2);
  std::int64_t index = 0;
  const auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), index);
  if (ec != std::errc{} || ptr != digits.data() + digits.size() || digits.empty()) {
    return std::nullopt;
  }
  return FrameId{stem.substr(0, marker), index};
}

std::vector<fs::path> sorted_files(const fs::path& dir, std::string_view extension) {
  std::vector<fs::path> files;
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == extension) {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  return files;
}

void append_caltech_row(Dataset& ds, const FrameId& frame,
                        const std::vector<Token>& tokens, const LineParser& p,
                        std::int64_t id, Diagnostics* diag, std::string_view where) {
  p.expect_count(tokens, 12, "caltech-text row");
  Annotation a;
  a.id = id;
  a.frame = frame;
  a.source = Source::original;
  if (auto label = parse_label(tokens[0].text)) {
    a.label = *label;
  } else {
    a.label = Label::other;
    warn(diag, std::string(where) + ": unknown label '" + std::string(tokens[0].text) +
                   "' kept as other");
  }
  a.box = p.box(tokens, 1, "box");
  const auto occluded = p.integer(tokens[5], "occluded flag");
  const BBox v{p.number(tokens[6], "vx"), p.number(tokens[7], "vy"),
               p.number(tokens[8], "vw"), p.number(tokens[9], "vh")};
  const bool v_zero = v.x == 0.0 && v.y == 0.0 && v.w == 0.0 && v.h == 0.0;
  if (occluded != 0) {
    if (v_zero) {
      warn(diag, std::string(where) + ": occluded flag set without a visible box; treated as unoccluded");
    } else if (!v.valid()) {
      p.fail(tokens[6].column, "visible box must have positive width and height");
    } else {
      a.visible = v;
      if (!contains(a.box, v)) {
        warn(diag, std::string(where) + ": visible box extends outside its box; clipped when used");
      }
    }
  }
  a.ignore = p.integer(tokens[10], "ignore flag") != 0;
  a.angle = p.number(tokens[11], "angle");
  ds.annotations.push_back(std::move(a));
}

}  // namespace

std::optional<AnnotationFormat> parse_annotation_format(std::string_view text) {
  if (text == "canonical") return AnnotationFormat::canonical;
  if (text == "caltech-text") return AnnotationFormat::caltech_text;
  return std::nullopt;
}

std::string format_number(double value) {
  if (value == 0.0) return "0";  // also folds -0
  std::array<char, 64> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  return std::string(buf.data(), ptr);
}

std::string format_annotation_record(const Annotation& a) {
  std::string out = "A " + a.frame.str() + " " + std::to_string(a.id) + " " +
                    std::string(to_string(a.label)) + " " + format_number(a.box.x) +
                    " " + format_number(a.box.y) + " " + format_number(a.box.w) + " " +
                    format_number(a.box.h);
  if (a.visible) {
    out += " V " + format_number(a.visible->x) + " " + format_number(a.visible->y) +
           " " + format_number(a.visible->w) + " " + format_number(a.visible->h);
  }
  out += a.ignore ? " 1 " : " 0 ";
  out += to_string(a.source);
  return out;
}

Annotation parse_annotation_record(std::string_view line, std::string_view origin,
                                   std::size_t line_number, Diagnostics* diag) {
  const LineParser p(origin, line_number);
  const auto tokens = split(line, ' ');
  if (tokens.empty() || tokens[0].text != "A") p.fail(1, "expected annotation record 'A'");
  if (tokens.size() != 10 && tokens.size() != 15) {
    p.fail(tokens.back().column, "annotation record: expected 10 or 15 fields, got " +
                                     std::to_string(tokens.size()));
  }
  Annotation a;
  a.frame = p.frame(tokens[1]);
  a.id = p.integer(tokens[2], "id");
  if (auto label = parse_label(tokens[3].text)) {
    a.label = *label;
  } else {
    a.label = Label::other;
    warn(diag, std::string(origin) + ":" + std::to_string(line_number) + ": unknown label '" +
                   std::string(tokens[3].text) + "' kept as other");
  }
  a.box = p.box(tokens, 4, "box");
  std::size_t at = 8;
  if (tokens.size() == 15) {
    if (tokens[8].text != "V") p.fail(tokens[8].column, "expected 'V' before visible box");
    a.visible = p.box(tokens, 9, "visible box");
    if (!contains(a.box, *a.visible)) {
      warn(diag, std::string(origin) + ":" + std::to_string(line_number) +
                     ": visible box extends outside its box; clipped when used");
    }
    at = 13;
  }
  if (tokens[at].text == "0") {
    a.ignore = false;
  } else if (tokens[at].text == "1") {
    a.ignore = true;
  } else {
    p.fail(tokens[at].column, "ignore flag must be 0 or 1");
  }
  auto source = parse_source(tokens[at + 1].text);
  if (!source) p.fail(tokens[at + 1].column, "unknown source '" + std::string(tokens[at + 1].text) + "'");
  a.source = *source;
  return a;
}

std::string format_canonical(const Dataset& input) {
  Dataset ds = input;
  ds.normalize();
  std::string out;
  for (const auto& note : ds.meta) out += "# " + note + "\n";
  auto it = ds.annotations.begin();
  for (const auto& frame : ds.frames) {
    out += "F " + frame.str() + "\n";
    for (; it != ds.annotations.end() && it->frame == frame; ++it) {
      out += format_annotation_record(*it) + "\n";
    }
  }
  return out;
}

Dataset parse_canonical(std::string_view text, std::string_view origin, Diagnostics* diag) {
  Dataset ds;
  for_each_line(text, [&](std::string_view line, std::size_t n) {
    if (is_blank(line)) return;
    if (line[0] == '#') {
      auto note = line.substr(1);
      if (!note.empty() && note[0] == ' ') note.remove_prefix(1);
      ds.meta.emplace_back(note);
      return;
    }
    const LineParser p(origin, n);
    if (line.starts_with("F ")) {
      const auto tokens = split(line, ' ');
      p.expect_count(tokens, 2, "frame record");
      ds.frames.push_back(p.frame(tokens[1]));
    } else if (line.starts_with("A ")) {
      ds.annotations.push_back(parse_annotation_record(line, origin, n, diag));
    } else {
      p.fail(1, "unknown record type");
    }
  });
  ds.normalize();
  for (std::size_t i = 1; i < ds.annotations.size(); ++i) {
    const auto& prev = ds.annotations[i - 1];
    const auto& cur = ds.annotations[i];
    if (prev.frame == cur.frame && prev.id == cur.id) {
      throw Error(ErrorCategory::input, std::string(origin) + ": duplicate annotation id " +
                                            std::to_string(cur.id) + " in frame " + cur.frame.str());
    }
  }
  return ds;
}

namespace {

Dataset parse_caltech_impl(std::string_view text, std::string_view origin,
                           std::optional<FrameId> file_frame, Diagnostics* diag) {
  Dataset ds;
  std::optional<FrameId> current;
  const bool has_blocks = text.find("% frame ") != std::string_view::npos;
  if (!has_blocks) {
    current = file_frame ? file_frame : frame_from_stem(fs::path(std::string(origin)).stem().string());
    if (!current) {
      throw Error(ErrorCategory::input, std::string(origin) +
                                            ": cannot derive frame from file name (expected <video>_I<index>.txt)");
    }
    ds.frames.push_back(*current);
  }
  std::int64_t next_id = 0;
  for_each_line(text, [&](std::string_view line, std::size_t n) {
    if (is_blank(line)) return;
    const LineParser p(origin, n);
    if (line[0] == '%') {
      if (line.starts_with("% frame ")) {
        const auto tokens = split(line, ' ');
        p.expect_count(tokens, 3, "frame header");
        current = p.frame(tokens[2]);
        ds.frames.push_back(*current);
        next_id = 0;
      }
      return;  // bbGt version header and other comments
    }
    if (!current) p.fail(1, "object row before any '% frame' header");
    const std::string where = std::string(origin) + ":" + std::to_string(n);
    append_caltech_row(ds, *current, split(line, ' '), p, next_id++, diag, where);
  });
  ds.normalize();
  return ds;
}

}  // namespace

Dataset parse_caltech_text(std::string_view text, std::string_view origin, Diagnostics* diag) {
  return parse_caltech_impl(text, origin, std::nullopt, diag);
}

std::string format_caltech_frame(const Dataset& ds, const FrameId& frame) {
  std::vector<const Annotation*> rows;
  for (const auto& a : ds.annotations) {
    if (a.frame == frame) rows.push_back(&a);
  }
  std::stable_sort(rows.begin(), rows.end(),
                   [](const Annotation* l, const Annotation* r) { return l->id < r->id; });
  std::string out = "% bbGt version=3\n";
  for (const auto* a : rows) {
    const std::string label =
        a->label == Label::other ? std::string("other") : std::string(to_string(a->label));
    out += label + " " + format_number(a->box.x) + " " + format_number(a->box.y) + " " +
           format_number(a->box.w) + " " + format_number(a->box.h);
    if (a->visible) {
      out += " 1 " + format_number(a->visible->x) + " " + format_number(a->visible->y) + " " +
             format_number(a->visible->w) + " " + format_number(a->visible->h);
    } else {
      out += " 0 0 0 0 0";
    }
    out += a->ignore ? " 1 " : " 0 ";
    out += format_number(a->angle) + "\n";
  }
  return out;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCategory::io, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw Error(ErrorCategory::io, "read failed: " + path.string());
  return ss.str();
}

void write_file(const fs::path& path, std::string_view contents) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCategory::io, "cannot write " + path.string());
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!out) throw Error(ErrorCategory::io, "write failed: " + path.string());
}

Dataset read_annotations(const fs::path& path, AnnotationFormat format, Diagnostics* diag) {
  if (!fs::exists(path)) throw Error(ErrorCategory::io, "no such file or directory: " + path.string());
  Dataset ds;
  if (format == AnnotationFormat::canonical) {
    ds = parse_canonical(read_file(path), path.string(), diag);
  } else if (fs::is_directory(path)) {
    for (const auto& file : sorted_files(path, ".txt")) {
      const auto rel = fs::relative(file, path);
      const auto stem = slashes_to_underscores(rel.parent_path() / rel.stem());
      auto frame = frame_from_stem(stem);
      if (!frame) {
        throw Error(ErrorCategory::input, file.string() + ": cannot derive frame from file name");
      }
      Dataset part = parse_caltech_impl(read_file(file), file.string(), frame, diag);
      ds.frames.insert(ds.frames.end(), part.frames.begin(), part.frames.end());
      ds.annotations.insert(ds.annotations.end(), part.annotations.begin(),
                            part.annotations.end());
    }
    ds.normalize();
  } else {
    ds = parse_caltech_text(read_file(path), path.string(), diag);
  }
  if (ds.frames.empty()) {
    throw Error(ErrorCategory::input, path.string() + ": dataset declares no frames");
  }
  return ds;
}

void write_annotations(const Dataset& input, const fs::path& path, AnnotationFormat format) {
  if (format == AnnotationFormat::canonical) {
    write_file(path, format_canonical(input));
    return;
  }
  Dataset ds = input;
  ds.normalize();
  std::error_code ec;
  fs::create_directories(path, ec);
  if (ec) throw Error(ErrorCategory::io, "cannot create " + path.string());
  for (const auto& frame : ds.frames) {
    char name[32];
    std::snprintf(name, sizeof name, "_I%05lld.txt", static_cast<long long>(frame.index));
    write_file(path / (frame.video + name), format_caltech_frame(ds, frame));
  }
}

std::vector<Detection> parse_detections(std::string_view text, std::string_view origin,
                                        const std::string& video) {
  std::vector<Detection> dets;
  for_each_line(text, [&](std::string_view line, std::size_t n) {
    if (is_blank(line) || line[0] == '#' || line[0] == '%') return;
    const LineParser p(origin, n);
    if (line.starts_with("D ")) {
      const auto tokens = split(line, ' ');
      p.expect_count(tokens, 7, "detection record");
      dets.push_back({p.frame(tokens[1]), p.box(tokens, 2, "detection box"),
                      p.number(tokens[6], "score")});
      return;
    }
    const auto tokens = split(line, ',');
    p.expect_count(tokens, 6, "detection row");
    const auto frame = p.integer(tokens[0], "frame");
    if (frame < 1) p.fail(tokens[0].column, "frame index is 1-based");
    dets.push_back({FrameId{video, frame - 1}, p.box(tokens, 1, "detection box"),
                    p.number(tokens[5], "score")});
  });
  return dets;
}

std::vector<Detection> read_detections(const fs::path& path, std::optional<std::string> video,
                                       Diagnostics* diag) {
  (void)diag;
  if (!fs::exists(path)) throw Error(ErrorCategory::io, "no such file or directory: " + path.string());
  std::vector<Detection> dets;
  if (fs::is_directory(path)) {
    for (const auto& file : sorted_files(path, ".txt")) {
      const auto rel = fs::relative(file, path);
      const auto name = video ? *video : slashes_to_underscores(rel.parent_path() / rel.stem());
      auto part = parse_detections(read_file(file), file.string(), name);
      dets.insert(dets.end(), part.begin(), part.end());
    }
  } else {
    dets = parse_detections(read_file(path), path.string(),
                            video ? *video : path.stem().string());
  }
  std::stable_sort(dets.begin(), dets.end(),
                   [](const Detection& l, const Detection& r) { return l.frame < r.frame; });
  return dets;
}

std::string format_detections(const std::vector<Detection>& detections) {
  std::string out;
  for (const auto& d : detections) {
    out += "D " + d.frame.str() + " " + format_number(d.box.x) + " " + format_number(d.box.y) +
           " " + format_number(d.box.w) + " " + format_number(d.box.h) + " " +
           format_number(d.score) + "\n";
  }
  return out;
}

void write_detections(const std::vector<Detection>& detections, const fs::path& path) {
  write_file(path, format_detections(detections));
}

namespace {

BBox lerp_box(const BBox& a, const BBox& b, double t) {
  return BBox{std::lerp(a.x, b.x, t), std::lerp(a.y, b.y, t), std::lerp(a.w, b.w, t),
              std::lerp(a.h, b.h, t)};
}

}  // namespace

std::vector<Annotation> interpolate_keyframes(const Track& track, std::int64_t first,
                                              std::int64_t last) {
  if (track.keys.empty()) throw Error(ErrorCategory::input, "track has no keyframes");
  for (std::size_t i = 1; i < track.keys.size(); ++i) {
    if (track.keys[i].frame <= track.keys[i - 1].frame) {
      throw Error(ErrorCategory::input, "keyframes must be strictly increasing in frame");
    }
  }
  std::vector<Annotation> out;
  const auto& keys = track.keys;
  for (std::int64_t f = first; f <= last; ++f) {
    Annotation a;
    a.id = track.id;
    a.frame = FrameId{track.video, f};
    a.label = track.label;
    a.source = track.source;
    const auto upper = std::lower_bound(keys.begin(), keys.end(), f,
                                        [](const Keyframe& k, std::int64_t v) { return k.frame < v; });
    if (upper != keys.end() && upper->frame == f) {
      a.box = upper->box;
      a.visible = upper->visible;
      a.ignore = upper->ignore;
    } else if (upper == keys.begin() || upper == keys.end()) {
      const Keyframe& held = upper == keys.begin() ? keys.front() : keys.back();
      a.box = held.box;
      a.visible = held.visible;
      a.ignore = held.ignore;
    } else {
      const Keyframe& lo = *(upper - 1);
      const Keyframe& hi = *upper;
      const double t = static_cast<double>(f - lo.frame) / static_cast<double>(hi.frame - lo.frame);
      a.box = lerp_box(lo.box, hi.box, t);
      if (lo.visible && hi.visible) {
        a.visible = lerp_box(*lo.visible, *hi.visible, t);
      } else {
        a.visible = t <= 0.5 ? lo.visible : hi.visible;
      }
      a.ignore = lo.ignore;
    }
    out.push_back(std::move(a));
  }
  return out;
}

}  // namespace pedeval
