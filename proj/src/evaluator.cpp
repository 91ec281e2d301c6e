#include "pedeval/evaluator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <thread>

#include "pedeval/dataio.hpp"

namespace pedeval {

SubsetSpec SubsetSpec::reasonable() {
  SubsetSpec spec;
  spec.height_min = 50.0;
  spec.occlusion_max = 0.35;
  spec.aspect_normalize = true;
  return spec;
}

SubsetSpec SubsetSpec::all() { return SubsetSpec{}; }

void SubsetSpec::validate() const {
  auto fail = [](const char* what) { throw Error(ErrorCategory::config, what); };
  if (!(height_min >= 0.0)) fail("subset: height min must be >= 0");
  if (!(height_max >= height_min)) fail("subset: height max must be >= height min");
  if (!(occlusion_min >= 0.0 && occlusion_min <= occlusion_max && occlusion_max <= 1.0)) {
    fail("subset: need 0 <= occlusion min <= occlusion max <= 1");
  }
  if (!(iou_threshold > 0.0 && iou_threshold < 1.0)) fail("subset: iou threshold must lie in (0, 1)");
  if (detection_height_expansion && !(*detection_height_expansion >= 1.0)) {
    fail("subset: detection height expansion must be >= 1");
  }
}

Dataset apply_subset(const Dataset& dataset, const SubsetSpec& spec, Diagnostics* diag) {
  spec.validate();
  Dataset out = dataset;
  for (auto& a : out.annotations) {
    if (a.ignore) continue;
    const double occlusion = occlusion_fraction(a.box, a.visible, diag);
    const bool keep = spec.labels.contains(a.label) && a.box.h >= spec.height_min &&
                      a.box.h <= spec.height_max && occlusion >= spec.occlusion_min &&
                      occlusion <= spec.occlusion_max;
    if (!keep) a.ignore = true;
  }
  return out;
}

FrameMatch match_frame(std::span<const Annotation> annotations,
                       std::span<const Detection> detections, double iou_threshold) {
  std::vector<std::size_t> order(detections.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t l, std::size_t r) {
    return detections[l].score > detections[r].score;
  });

  std::vector<bool> taken(annotations.size(), false);
  FrameMatch result;
  for (const std::size_t d : order) {
    const BBox& box = detections[d].box;
    std::optional<std::size_t> best;
    double best_iou = -1.0;
    for (std::size_t a = 0; a < annotations.size(); ++a) {
      if (annotations[a].ignore || taken[a]) continue;
      const double o = iou(box, annotations[a].box);
      if (o > best_iou || (o == best_iou && annotations[a].id < annotations[*best].id)) {
        best = a;
        best_iou = o;
      }
    }
    if (best && best_iou >= iou_threshold) {
      taken[*best] = true;
      result.true_positives.push_back({d, *best, best_iou});
      continue;
    }
    const bool absorbed = std::any_of(annotations.begin(), annotations.end(), [&](const Annotation& a) {
      return a.ignore && overlap_over_detection(box, a.box) >= iou_threshold;
    });
    (absorbed ? result.ignored : result.false_positives).push_back(d);
  }
  for (std::size_t a = 0; a < annotations.size(); ++a) {
    if (!annotations[a].ignore && !taken[a]) result.false_negatives.push_back(a);
  }
  return result;
}

Curve build_curve(std::span<const ScoredOutcome> outcomes, std::size_t frames,
                  std::size_t positives) {
  if (positives == 0) throw Error(ErrorCategory::empty_positive_set, "empty positive set");
  if (frames == 0) throw Error(ErrorCategory::input, "curve needs at least one frame");

  std::vector<std::size_t> order(outcomes.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t l, std::size_t r) {
    return outcomes[l].score > outcomes[r].score;
  });

  Curve curve;
  curve.frames = frames;
  curve.positives = positives;
  const double n_frames = static_cast<double>(frames);
  const double n_pos = static_cast<double>(positives);
  auto make_point = [&](double threshold, std::size_t tp, std::size_t fp) {
    return CurvePoint{threshold, static_cast<double>(fp) / n_frames,
                      static_cast<double>(positives - tp) / n_pos, tp, fp};
  };

  std::size_t tp = 0;
  std::size_t fp = 0;
  std::vector<CurvePoint> points;
  for (std::size_t i = 0; i < order.size(); ++i) {
    const auto& o = outcomes[order[i]];
    if (o.outcome == Outcome::true_positive) ++tp;
    if (o.outcome == Outcome::false_positive) ++fp;
    const bool level_end = i + 1 == order.size() || outcomes[order[i + 1]].score != o.score;
    if (level_end) points.push_back(make_point(o.score, tp, fp));
  }
  if (points.empty() || points.front().fppi > 0.0) {
    curve.points.push_back(make_point(std::numeric_limits<double>::infinity(), 0, 0));
  }
  curve.points.insert(curve.points.end(), points.begin(), points.end());
  return curve;
}

MatchedDataset match_dataset(const Dataset& dataset, std::span<const Detection> detections,
                             const SubsetSpec& spec, const EvalOptions& options,
                             Diagnostics* diag) {
  MatchedDataset m;
  m.dataset = apply_subset(dataset, spec, diag);
  m.dataset.normalize();
  if (spec.aspect_normalize) {
    for (auto& a : m.dataset.annotations) {
      if (!a.ignore) a.box = normalize_aspect(a.box, spec.aspect);
    }
  }

  std::map<FrameId, std::size_t> frame_slot;
  m.frames.resize(m.dataset.frames.size());
  for (std::size_t i = 0; i < m.dataset.frames.size(); ++i) {
    m.frames[i].id = m.dataset.frames[i];
    frame_slot.emplace(m.dataset.frames[i], i);
  }
  for (std::size_t i = 0; i < m.dataset.annotations.size(); ++i) {
    const auto& a = m.dataset.annotations[i];
    m.frames[frame_slot.at(a.frame)].annotations.push_back(i);
    if (!a.ignore) ++m.positives;
  }

  std::size_t dropped_frame = 0;
  std::size_t dropped_height = 0;
  for (std::size_t i = 0; i < detections.size(); ++i) {
    Detection d = detections[i];
    require_valid(d.box, "detection");
    if (!std::isfinite(d.score)) throw Error(ErrorCategory::input, "detection score must be finite");
    const auto slot = frame_slot.find(d.frame);
    if (slot == frame_slot.end()) {
      ++dropped_frame;
      continue;
    }
    if (spec.detection_height_expansion) {
      const double e = *spec.detection_height_expansion;
      if (d.box.h < spec.height_min / e || d.box.h > spec.height_max * e) {
        ++dropped_height;
        continue;
      }
    }
    if (spec.aspect_normalize) d.box = normalize_aspect(d.box, spec.aspect);
    m.frames[slot->second].detections.push_back(m.detections.size());
    m.detections.push_back(d);
    m.source_index.push_back(i);
  }
  if (dropped_frame > 0) {
    warn(diag, std::to_string(dropped_frame) + " detections on frames outside the dataset were dropped");
  }
  if (dropped_height > 0) {
    warn(diag, std::to_string(dropped_height) + " detections removed by the height prefilter");
  }

  auto run_frame = [&](MatchedDataset::Frame& frame) {
    std::vector<Annotation> anns;
    anns.reserve(frame.annotations.size());
    for (auto i : frame.annotations) anns.push_back(m.dataset.annotations[i]);
    std::vector<Detection> dets;
    dets.reserve(frame.detections.size());
    for (auto i : frame.detections) dets.push_back(m.detections[i]);
    frame.match = match_frame(anns, dets, spec.iou_threshold);
  };
  const unsigned workers = std::max(1u, options.workers);
  if (workers == 1 || m.frames.size() < 2) {
    for (auto& frame : m.frames) run_frame(frame);
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        for (std::size_t i = w; i < m.frames.size(); i += workers) run_frame(m.frames[i]);
      });
    }
    for (auto& t : pool) t.join();
  }

  m.outcomes.assign(m.detections.size(), Outcome::ignored);
  m.matched_annotation.assign(m.detections.size(), std::nullopt);
  m.matched_iou.assign(m.detections.size(), 0.0);
  for (const auto& frame : m.frames) {
    for (const auto& tp : frame.match.true_positives) {
      const auto d = frame.detections[tp.detection];
      m.outcomes[d] = Outcome::true_positive;
      m.matched_annotation[d] = frame.annotations[tp.annotation];
      m.matched_iou[d] = tp.iou;
    }
    for (auto d : frame.match.false_positives) m.outcomes[frame.detections[d]] = Outcome::false_positive;
  }
  return m;
}

Curve curve_from_outcomes(const MatchedDataset& matched, std::span<const Outcome> outcomes) {
  std::vector<ScoredOutcome> scored(outcomes.size());
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    scored[i] = {matched.detections[i].score, outcomes[i]};
  }
  return build_curve(scored, matched.dataset.frames.size(), matched.positives);
}

Curve compute_curve(const Dataset& dataset, std::span<const Detection> detections,
                    const SubsetSpec& spec, const EvalOptions& options, Diagnostics* diag) {
  const auto matched = match_dataset(dataset, detections, spec, options, diag);
  return curve_from_outcomes(matched, matched.outcomes);
}

std::vector<double> reference_fppi(FppiRange range, double decade_step) {
  if (!(range.lo > 0.0 && range.lo < range.hi)) {
    throw Error(ErrorCategory::config, "fppi range needs 0 < lo < hi");
  }
  if (!(decade_step > 0.0)) throw Error(ErrorCategory::config, "decade step must be positive");
  const double lo_exp = std::log10(range.lo);
  const double hi_exp = std::log10(range.hi);
  const auto steps = static_cast<std::size_t>(std::llround((hi_exp - lo_exp) / decade_step));
  std::vector<double> refs;
  refs.reserve(steps + 1);
  for (std::size_t i = 0; i <= steps; ++i) {
    refs.push_back(i == steps ? range.hi : std::pow(10.0, lo_exp + decade_step * static_cast<double>(i)));
  }
  if (!refs.empty()) refs.front() = range.lo;
  return refs;
}

std::vector<double> reference_miss_rates(const Curve& curve, FppiRange range, double decade_step) {
  const auto refs = reference_fppi(range, decade_step);
  std::vector<double> miss(refs.size(), 1.0);
  for (std::size_t i = 0; i < refs.size(); ++i) {
    for (const auto& p : curve.points) {
      if (p.fppi > refs[i]) break;
      miss[i] = p.miss_rate;
    }
  }
  return miss;
}

double log_average_miss_rate(const Curve& curve, FppiRange range, const LamrOptions& options) {
  const auto miss = reference_miss_rates(curve, range, options.decade_step);
  double sum = 0.0;
  for (double m : miss) sum += std::log(std::max(m, options.epsilon));
  return std::exp(sum / static_cast<double>(miss.size()));
}

char variant_letter(Variant variant) { return variant == Variant::original ? 'O' : 'N'; }

std::optional<Variant> parse_variant(std::string_view text) {
  if (text == "O" || text == "o") return Variant::original;
  if (text == "N" || text == "n") return Variant::new_set;
  return std::nullopt;
}

EvalSummary summarize(Curve curve, Variant variant, std::optional<FppiRange> custom_range,
                      const LamrOptions& lamr) {
  EvalSummary s;
  s.variant = variant;
  s.mr2 = log_average_miss_rate(curve, kMr2Range, lamr);
  s.mr4 = log_average_miss_rate(curve, kMr4Range, lamr);
  if (custom_range) {
    s.custom_range = custom_range;
    s.custom_mr = log_average_miss_rate(curve, *custom_range, lamr);
  }
  for (const auto& p : curve.points) {
    if (p.fppi > 1.0) break;
    s.true_positives = p.true_positives;
    s.false_positives = p.false_positives;
  }
  s.false_negatives = curve.positives - s.true_positives;
  s.curve = std::move(curve);
  return s;
}

EvalSummary evaluate(const Dataset& dataset, std::span<const Detection> detections,
                     const SubsetSpec& spec, Variant variant, const EvalOptions& options,
                     Diagnostics* diag) {
  return summarize(compute_curve(dataset, detections, spec, options, diag), variant);
}

double median_tp_iou(const Dataset& dataset, std::span<const Detection> detections,
                     const SubsetSpec& spec, double min_score, const EvalOptions& options) {
  const auto m = match_dataset(dataset, detections, spec, options);
  std::vector<double> ious;
  for (std::size_t i = 0; i < m.detections.size(); ++i) {
    if (m.outcomes[i] == Outcome::true_positive && m.detections[i].score > min_score) {
      ious.push_back(m.matched_iou[i]);
    }
  }
  if (ious.empty()) throw Error(ErrorCategory::input, "no true positives at the operating point");
  std::sort(ious.begin(), ious.end());
  return ious[(ious.size() - 1) / 2];
}

std::vector<SweepPoint> mr_vs_iou_sweep(const Dataset& dataset, std::span<const Detection> detections,
                                        const SubsetSpec& spec, std::span<const double> thresholds,
                                        const EvalOptions& options) {
  std::vector<SweepPoint> out;
  for (double t : thresholds) {
    SubsetSpec s = spec;
    s.iou_threshold = t;
    const auto summary = evaluate(dataset, detections, s, Variant::original, options);
    out.push_back({t, summary.mr2, summary.mr4});
  }
  return out;
}

double fppi_at_recall(const Curve& curve, double recall) {
  if (!(recall > 0.0 && recall < 1.0)) throw Error(ErrorCategory::config, "recall must lie in (0, 1)");
  const double target = 1.0 - recall + 1e-12;
  double best_miss = 1.0;
  for (const auto& p : curve.points) {
    if (p.miss_rate <= target) return p.fppi;
    best_miss = std::min(best_miss, p.miss_rate);
  }
  char buf[128];
  std::snprintf(buf, sizeof buf, "recall %.4f unreachable; max recall %.4f", recall, 1.0 - best_miss);
  throw Error(ErrorCategory::unreachable, buf);
}

double operating_threshold(const Curve& curve, double fppi) {
  for (const auto& p : curve.points) {
    if (p.fppi >= fppi) return p.threshold;
  }
  return curve.points.empty() ? std::numeric_limits<double>::infinity() : curve.points.back().threshold;
}

std::string curve_csv(const Curve& curve) {
  std::string out = "threshold,fppi,missrate\n";
  for (const auto& p : curve.points) {
    out += format_number(p.threshold) + "," + format_number(p.fppi) + "," + format_number(p.miss_rate) + "\n";
  }
  return out;
}

std::string summary_text(const EvalSummary& s) {
  const char v = variant_letter(s.variant);
  char buf[256];
  std::string out = "[summary]\n";
  std::snprintf(buf, sizeof buf, "variant %c\nframes %zu\npositives %zu\n", v, s.curve.frames,
                s.curve.positives);
  out += buf;
  std::snprintf(buf, sizeof buf, "MR-2(%c) %.2f\nMR-4(%c) %.2f\n", v, 100.0 * s.mr2, v, 100.0 * s.mr4);
  out += buf;
  if (s.custom_mr && s.custom_range) {
    out += "MR[" + format_number(s.custom_range->lo) + "," + format_number(s.custom_range->hi) + "](" + v + ") ";
    std::snprintf(buf, sizeof buf, "%.2f\n", 100.0 * *s.custom_mr);
    out += buf;
  }
  out += "mr-2 " + format_number(s.mr2) + "\nmr-4 " + format_number(s.mr4) + "\n";
  std::snprintf(buf, sizeof buf, "tp@fppi1 %zu\nfp@fppi1 %zu\nfn@fppi1 %zu\n", s.true_positives,
                s.false_positives, s.false_negatives);
  out += buf;
  return out;
}

}  // namespace pedeval
