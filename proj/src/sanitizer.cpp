#include "pedeval/sanitizer.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <numeric>

#include "pedeval/dataio.hpp"
#include "pedeval/error.hpp"

namespace pedeval {

namespace {

using FrameIndex = std::map<FrameId, std::vector<std::size_t>>;

FrameIndex by_frame(const Dataset& ds) {
  FrameIndex out;
  for (const auto& f : ds.frames) out[f];
  for (std::size_t i = 0; i < ds.annotations.size(); ++i) out[ds.annotations[i].frame].push_back(i);
  return out;
}

void require_same_frames(const Dataset& a, const Dataset& b, const char* what) {
  Dataset na = a;
  Dataset nb = b;
  na.normalize();
  nb.normalize();
  if (na.frames != nb.frames) {
    throw Error(ErrorCategory::input, std::string(what) + ": the two datasets cover different frames (" +
                                          std::to_string(na.frames.size()) + " vs " +
                                          std::to_string(nb.frames.size()) + ")");
  }
}

std::vector<std::size_t> select(const Dataset& ds, const std::vector<std::size_t>& ids, bool ignore) {
  std::vector<std::size_t> out;
  for (auto i : ids) {
    if (ds.annotations[i].ignore == ignore) out.push_back(i);
  }
  return out;
}

std::vector<BBox> boxes_of(const Dataset& ds, const std::vector<std::size_t>& ids) {
  std::vector<BBox> out;
  out.reserve(ids.size());
  for (auto i : ids) out.push_back(ds.annotations[i].box);
  return out;
}

// Pairs between two index lists, mapped back to dataset indices.
std::vector<BoxPair> match_lists(const Dataset& a, const std::vector<std::size_t>& ia, const Dataset& b,
                                 const std::vector<std::size_t>& ib, double threshold) {
  auto pairs = greedy_iou_pairs(boxes_of(a, ia), boxes_of(b, ib), threshold);
  for (auto& p : pairs) {
    p.a = ia[p.a];
    p.b = ib[p.b];
  }
  return pairs;
}

std::optional<BBox> map_visible(const std::optional<BBox>& visible, const BBox& from, const BBox& to) {
  if (!visible) return std::nullopt;
  const double sx = to.w / from.w;
  const double sy = to.h / from.h;
  return BBox{to.x + (visible->x - from.x) * sx, to.y + (visible->y - from.y) * sy, visible->w * sx,
              visible->h * sy};
}

}  // namespace

std::vector<BoxPair> greedy_iou_pairs(std::span<const BBox> a, std::span<const BBox> b, double threshold) {
  std::vector<BoxPair> candidates;
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < b.size(); ++j) {
      const double o = iou(a[i], b[j]);
      if (o >= threshold && o > 0.0) candidates.push_back({i, j, o});
    }
  }
  std::sort(candidates.begin(), candidates.end(), [](const BoxPair& l, const BoxPair& r) {
    if (l.iou != r.iou) return l.iou > r.iou;
    if (l.a != r.a) return l.a < r.a;
    return l.b < r.b;
  });
  std::vector<bool> used_a(a.size(), false);
  std::vector<bool> used_b(b.size(), false);
  std::vector<BoxPair> out;
  for (const auto& c : candidates) {
    if (used_a[c.a] || used_b[c.b]) continue;
    used_a[c.a] = used_b[c.b] = true;
    out.push_back(c);
  }
  return out;
}

Dataset prune(const Dataset& original, const Dataset& fresh, double iou_threshold) {
  require_same_frames(original, fresh, "prune");
  Dataset out = original;
  const FrameIndex orig_frames = by_frame(original);
  const FrameIndex new_frames = by_frame(fresh);

  for (const auto& [frame, orig_ids] : orig_frames) {
    const auto& new_ids = new_frames.at(frame);
    std::int64_t next_id = 0;
    for (auto i : orig_ids) next_id = std::max(next_id, original.annotations[i].id + 1);

    for (bool ignore : {false, true}) {
      const auto oi = select(original, orig_ids, ignore);
      const auto ni = select(fresh, new_ids, ignore);
      const auto pairs = match_lists(original, oi, fresh, ni, iou_threshold);
      std::vector<bool> orig_matched(original.annotations.size(), false);
      std::vector<bool> new_matched(fresh.annotations.size(), false);
      for (const auto& p : pairs) {
        orig_matched[p.a] = true;
        new_matched[p.b] = true;
      }
      for (auto i : oi) {
        if (orig_matched[i] || ignore) continue;
        out.annotations[i].ignore = true;
        out.annotations[i].source = Source::pruned;
      }
      for (auto j : ni) {
        if (new_matched[j]) continue;
        Annotation added = fresh.annotations[j];
        added.id = next_id++;
        added.source = Source::pruned;
        out.annotations.push_back(added);
      }
    }
  }
  out.normalize();
  return out;
}

void AlignConfig::validate() const {
  if (!(iou_min > 0.0 && iou_min < 1.0)) throw Error(ErrorCategory::config, "align: iou min must lie in (0, 1)");
}

Dataset align(const Dataset& annotations, std::span<const Detection> detections, const AlignConfig& config) {
  config.validate();
  Dataset out = annotations;

  std::map<FrameId, std::vector<std::size_t>> dets_by_frame;
  for (std::size_t i = 0; i < detections.size(); ++i) {
    if (detections[i].score >= config.score_min) dets_by_frame[detections[i].frame].push_back(i);
  }

  for (const auto& [frame, ann_ids_all] : by_frame(annotations)) {
    const auto found = dets_by_frame.find(frame);
    if (found == dets_by_frame.end()) continue;
    const auto ann_ids = select(annotations, ann_ids_all, false);
    std::vector<std::size_t> det_ids = found->second;
    std::stable_sort(det_ids.begin(), det_ids.end(),
                     [&](std::size_t l, std::size_t r) { return detections[l].score > detections[r].score; });

    std::vector<BBox> targets;
    for (auto d : det_ids) targets.push_back(normalize_aspect(detections[d].box, config.aspect));
    const auto sources = boxes_of(annotations, ann_ids);

    // (annotation slot, detection slot)
    std::vector<std::pair<std::size_t, std::size_t>> assignment;
    if (config.one_to_one && !config.score_greedy) {
      for (const auto& p : greedy_iou_pairs(sources, targets, config.iou_min)) assignment.push_back({p.a, p.b});
    } else if (config.one_to_one) {
      std::vector<bool> taken(sources.size(), false);
      for (std::size_t t = 0; t < targets.size(); ++t) {
        std::optional<std::size_t> best;
        double best_iou = 0.0;
        for (std::size_t s = 0; s < sources.size(); ++s) {
          if (taken[s]) continue;
          const double o = iou(sources[s], targets[t]);
          if (o >= config.iou_min && o > best_iou) {
            best = s;
            best_iou = o;
          }
        }
        if (best) {
          taken[*best] = true;
          assignment.push_back({*best, t});
        }
      }
    } else {
      // Shared candidates: each annotation takes its best (or, score-greedy,
      // its highest-scoring) qualifying detection.
      for (std::size_t s = 0; s < sources.size(); ++s) {
        std::optional<std::size_t> best;
        double best_iou = 0.0;
        for (std::size_t t = 0; t < targets.size(); ++t) {
          const double o = iou(sources[s], targets[t]);
          if (o < config.iou_min) continue;
          if (config.score_greedy ? !best : o > best_iou) {
            best = t;
            best_iou = o;
          }
        }
        if (best) assignment.push_back({s, *best});
      }
    }

    for (const auto& [s, t] : assignment) {
      Annotation& a = out.annotations[ann_ids[s]];
      if (a.box == targets[t]) continue;
      a.visible = map_visible(a.visible, a.box, targets[t]);
      a.box = targets[t];
      a.source = Source::aligned;
    }
  }
  return out;
}

DiffReport diff(const Dataset& a, const Dataset& b, double iou_threshold) {
  require_same_frames(a, b, "diff");
  DiffReport report;
  const FrameIndex fa = by_frame(a);
  const FrameIndex fb = by_frame(b);
  std::size_t count_a = 0;
  std::size_t count_b = 0;
  for (const auto& [frame, ids_a_all] : fa) {
    const auto ia = select(a, ids_a_all, false);
    const auto ib = select(b, fb.at(frame), false);
    count_a += ia.size();
    count_b += ib.size();
    const auto pairs = match_lists(a, ia, b, ib, iou_threshold);
    std::vector<bool> ma(a.annotations.size(), false);
    std::vector<bool> mb(b.annotations.size(), false);
    for (const auto& p : pairs) {
      ma[p.a] = true;
      mb[p.b] = true;
      report.matched.push_back(p);
    }
    for (auto i : ia) {
      if (!ma[i]) report.a_only.push_back(i);
    }
    for (auto j : ib) {
      if (!mb[j]) report.b_only.push_back(j);
    }
  }
  const std::size_t total = count_a + count_b;
  report.agreement = total == 0 ? 1.0 : 2.0 * static_cast<double>(report.matched.size()) / static_cast<double>(total);
  return report;
}

std::string diff_report_text(const DiffReport& r, const Dataset& a, const Dataset& b) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "[diff]\nmatched %zu\na-only %zu\nb-only %zu\nagreement %.6f\n", r.matched.size(),
                r.a_only.size(), r.b_only.size(), r.agreement);
  std::string out = buf;
  for (auto i : r.a_only) out += "a-only " + format_annotation_record(a.annotations[i]) + "\n";
  for (auto j : r.b_only) out += "b-only " + format_annotation_record(b.annotations[j]) + "\n";
  return out;
}

std::vector<ReviewItem> consolidate_flags(const Dataset& fresh, const Dataset& old, double iou_threshold) {
  require_same_frames(fresh, old, "consolidate");
  std::vector<ReviewItem> items;
  const FrameIndex fn = by_frame(fresh);
  for (const auto& [frame, old_all] : by_frame(old)) {
    const auto io = select(old, old_all, false);
    const auto in = select(fresh, fn.at(frame), false);
    std::vector<bool> matched(old.annotations.size(), false);
    for (const auto& p : match_lists(old, io, fresh, in, iou_threshold)) matched[p.a] = true;
    for (auto i : io) {
      if (matched[i]) continue;
      double best = 0.0;
      for (auto j : in) best = std::max(best, iou(old.annotations[i].box, fresh.annotations[j].box));
      items.push_back({i, frame, old.annotations[i].box, best});
    }
  }
  return items;
}

std::string review_items_csv(std::span<const ReviewItem> items) {
  std::string out = "video/frame,x,y,w,h,max_iou_to_new\n";
  for (const auto& it : items) {
    out += it.frame.str() + "," + format_number(it.box.x) + "," + format_number(it.box.y) + "," +
           format_number(it.box.w) + "," + format_number(it.box.h) + "," + format_number(it.max_iou_to_new) + "\n";
  }
  return out;
}

}  // namespace pedeval
