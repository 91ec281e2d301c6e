#include "pedeval/evaluator.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <set>

#include "naive_matcher.hpp"
#include "pedeval/synthetic.hpp"

namespace pedeval {
namespace {

Annotation person(std::int64_t id, BBox box, bool ignore = false) {
  return {id, {"v", 0}, ignore ? Label::people : Label::person, box, std::nullopt, ignore,
          Source::original, 0.0};
}

Detection det(BBox box, double score, FrameId frame = {"v", 0}) { return {frame, box, score}; }

// Frames with integer coordinates and few score levels so IoU ties and
// equal scores actually occur.
struct RandomFrame {
  std::vector<Annotation> annotations;
  std::vector<Detection> detections;
};

RandomFrame random_frame(std::mt19937_64& rng, FrameId frame = {"v", 0}) {
  std::uniform_int_distribution<int> n_ann(0, 8), n_det(0, 16), pos(0, 12), size(2, 8),
      level(0, 5);
  std::bernoulli_distribution ignore(0.25), near(0.7);
  RandomFrame out;
  const int na = n_ann(rng);
  std::vector<std::int64_t> ids(static_cast<std::size_t>(na));
  std::iota(ids.begin(), ids.end(), 0);
  std::shuffle(ids.begin(), ids.end(), rng);
  for (int i = 0; i < na; ++i) {
    const BBox box{double(pos(rng)), double(pos(rng)), double(size(rng)), double(size(rng))};
    Annotation a = person(ids[static_cast<std::size_t>(i)], box, ignore(rng));
    a.frame = frame;
    out.annotations.push_back(a);
  }
  const int nd = n_det(rng);
  for (int i = 0; i < nd; ++i) {
    BBox box{double(pos(rng)), double(pos(rng)), double(size(rng)), double(size(rng))};
    if (!out.annotations.empty() && near(rng)) {
      const BBox& t = out.annotations[rng() % out.annotations.size()].box;
      std::uniform_int_distribution<int> shift(-1, 1);
      box = {t.x + shift(rng), t.y + shift(rng), t.w, t.h};
    }
    out.detections.push_back(det(box, 0.1 * level(rng), frame));
  }
  return out;
}

using naive::NaiveMatch;

NaiveMatch to_naive(const FrameMatch& m) {
  NaiveMatch out;
  for (const auto& tp : m.true_positives) out.true_positives.insert({tp.detection, tp.annotation});
  out.false_positives.insert(m.false_positives.begin(), m.false_positives.end());
  out.false_negatives.insert(m.false_negatives.begin(), m.false_negatives.end());
  out.ignored.insert(m.ignored.begin(), m.ignored.end());
  return out;
}

TEST(MatchFrame, SingleTruePositive) {
  // IoU 0.6: detection is the top 60% of the person.
  const std::vector<Annotation> gt{person(0, {0, 0, 100, 100})};
  const std::vector<Detection> dets{det({0, 0, 100, 60}, 0.9)};
  const auto m = match_frame(gt, dets, 0.5);
  ASSERT_EQ(m.true_positives.size(), 1u);
  EXPECT_DOUBLE_EQ(m.true_positives[0].iou, 0.6);
  EXPECT_TRUE(m.false_positives.empty());
  EXPECT_TRUE(m.false_negatives.empty());
}

TEST(MatchFrame, DoubleDetectionIsFalsePositive) {
  const std::vector<Annotation> gt{person(0, {0, 0, 40, 100})};
  const std::vector<Detection> dets{det({2, 0, 40, 100}, 0.4), det({0, 1, 40, 100}, 0.8)};
  const auto m = match_frame(gt, dets, 0.5);
  ASSERT_EQ(m.true_positives.size(), 1u);
  EXPECT_EQ(m.true_positives[0].detection, 1u);
  EXPECT_EQ(m.false_positives, std::vector<std::size_t>{0});
}

TEST(MatchFrame, IgnoreRegionAbsorbsDetections) {
  const std::vector<Annotation> gt{person(0, {0, 0, 40, 100}), person(1, {200, 0, 200, 100}, true)};
  // 90% of the detection lies inside the crowd box.
  const std::vector<Detection> dets{det({190, 10, 100, 50}, 0.9), det({250, 10, 40, 80}, 0.8)};
  const auto m = match_frame(gt, dets, 0.5);
  EXPECT_TRUE(m.true_positives.empty());
  EXPECT_TRUE(m.false_positives.empty());
  EXPECT_EQ(m.ignored.size(), 2u);
  EXPECT_EQ(m.false_negatives, std::vector<std::size_t>{0});
}

TEST(MatchFrame, EqualIouGoesToSmallestId) {
  // Detection straddles two people symmetrically.
  const std::vector<Annotation> gt{person(5, {0, 0, 10, 10}), person(2, {2, 0, 10, 10})};
  const std::vector<Detection> dets{det({1, 0, 10, 10}, 1.0)};
  const auto m = match_frame(gt, dets, 0.5);
  ASSERT_EQ(m.true_positives.size(), 1u);
  EXPECT_EQ(gt[m.true_positives[0].annotation].id, 2);
}

TEST(MatchFrame, AgreesWithNaiveMatcherOnRandomFrames) {
  std::mt19937_64 rng(2024);
  const auto start = std::chrono::steady_clock::now();
  for (int i = 0; i < 1000; ++i) {
    const auto frame = random_frame(rng);
    for (double threshold : {0.5, 0.3}) {
      const auto fast = to_naive(match_frame(frame.annotations, frame.detections, threshold));
      const auto slow = naive::match(frame.annotations, frame.detections, threshold);
      ASSERT_EQ(fast, slow) << "frame " << i << " threshold " << threshold;
    }
  }
  EXPECT_LT(std::chrono::steady_clock::now() - start, std::chrono::seconds(5));
}

TEST(MatchFrame, ConservationAndAnnotationOrderInvariance) {
  std::mt19937_64 rng(77);
  for (int i = 0; i < 300; ++i) {
    auto frame = random_frame(rng);
    const auto m = match_frame(frame.annotations, frame.detections, 0.5);
    const auto positives = std::count_if(frame.annotations.begin(), frame.annotations.end(),
                                         [](const Annotation& a) { return !a.ignore; });
    EXPECT_EQ(m.true_positives.size() + m.false_negatives.size(), std::size_t(positives));
    EXPECT_EQ(m.true_positives.size() + m.false_positives.size() + m.ignored.size(),
              frame.detections.size());

    auto to_ids = [](const FrameMatch& fm, const std::vector<Annotation>& anns) {
      std::set<std::pair<std::size_t, std::int64_t>> tps;
      for (const auto& tp : fm.true_positives) tps.insert({tp.detection, anns[tp.annotation].id});
      return tps;
    };
    auto shuffled = frame.annotations;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    const auto again = match_frame(shuffled, frame.detections, 0.5);
    EXPECT_EQ(to_ids(m, frame.annotations), to_ids(again, shuffled));
    EXPECT_EQ(m.false_positives, again.false_positives);
    EXPECT_EQ(m.ignored, again.ignored);
  }
}

TEST(ApplySubset, RulesAndStickyIgnore) {
  Dataset ds;
  ds.frames = {{"v", 0}};
  ds.annotations = {person(0, {0, 0, 16, 40}), person(1, {50, 0, 30, 80}),
                    person(2, {100, 0, 100, 80}, true)};
  ds.annotations[1].visible = BBox{50, 0, 30, 40};
  const Dataset r = apply_subset(ds, SubsetSpec::reasonable());
  EXPECT_TRUE(r.annotations[0].ignore);  // 40 px tall
  EXPECT_TRUE(r.annotations[1].ignore);  // half occluded
  EXPECT_TRUE(r.annotations[2].ignore);
  EXPECT_EQ(r.annotations[0].box, ds.annotations[0].box);

  SubsetSpec everything = SubsetSpec::all();
  everything.labels = {Label::person, Label::people, Label::person_uncertain, Label::other};
  EXPECT_EQ(apply_subset(ds, everything), ds);
}

TEST(ApplySubset, InvalidSpecRejected) {
  SubsetSpec spec;
  spec.iou_threshold = 1.0;
  EXPECT_THROW(apply_subset(Dataset{}, spec), Error);
  spec = {};
  spec.occlusion_min = 0.5;
  spec.occlusion_max = 0.2;
  EXPECT_THROW(spec.validate(), Error);
}

// Curve built from first principles: for every distinct score level, rerun the
// naive matcher on the detections at or above it and count.
std::vector<std::pair<double, double>> brute_force_curve(const std::vector<RandomFrame>& frames,
                                                         double threshold) {
  std::set<double, std::greater<>> levels;
  std::size_t positives = 0;
  for (const auto& f : frames) {
    for (const auto& d : f.detections) levels.insert(d.score);
    for (const auto& a : f.annotations) positives += a.ignore ? 0 : 1;
  }
  std::vector<std::pair<double, double>> out;
  for (double s : levels) {
    std::size_t tp = 0, fp = 0;
    for (const auto& f : frames) {
      std::vector<Detection> kept;
      for (const auto& d : f.detections) {
        if (d.score >= s) kept.push_back(d);
      }
      const auto m = naive::match(f.annotations, kept, threshold);
      tp += m.true_positives.size();
      fp += m.false_positives.size();
    }
    out.push_back({double(fp) / double(frames.size()), double(positives - tp) / double(positives)});
  }
  return out;
}

TEST(ComputeCurve, MatchesBruteForceRematching) {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<RandomFrame> frames;
    Dataset ds;
    std::vector<Detection> dets;
    for (int f = 0; f < 12; ++f) {
      const FrameId id{"v", f};
      frames.push_back(random_frame(rng, id));
      ds.frames.push_back(id);
      for (const auto& a : frames.back().annotations) ds.annotations.push_back(a);
      for (const auto& d : frames.back().detections) dets.push_back(d);
    }
    const bool any_positive = std::any_of(ds.annotations.begin(), ds.annotations.end(),
                                          [](const Annotation& a) { return !a.ignore; });
    SubsetSpec spec = SubsetSpec::all();
    spec.labels = {Label::person, Label::people};
    if (!any_positive) {
      EXPECT_THROW(compute_curve(ds, dets, spec), Error);
      continue;
    }
    const Curve curve = compute_curve(ds, dets, spec);
    const auto expected = brute_force_curve(frames, 0.5);
    std::vector<std::pair<double, double>> got;
    for (const auto& p : curve.points) {
      if (!std::isinf(p.threshold)) got.push_back({p.fppi, p.miss_rate});
    }
    EXPECT_EQ(got, expected) << "trial " << trial;
    for (std::size_t i = 1; i < curve.points.size(); ++i) {
      EXPECT_LT(curve.points[i].threshold, curve.points[i - 1].threshold);
      EXPECT_GE(curve.points[i].fppi, curve.points[i - 1].fppi);
    }
  }
}

TEST(ComputeCurve, EmptyPositiveSetIsAnError) {
  Dataset ds;
  ds.frames = {{"v", 0}};
  ds.annotations = {person(0, {0, 0, 10, 10}, true)};
  try {
    compute_curve(ds, {}, SubsetSpec::all());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.category(), ErrorCategory::empty_positive_set);
  }
}

TEST(ComputeCurve, NoDetectionsGivesAnchorOnly) {
  Dataset ds;
  ds.frames = {{"v", 0}};
  ds.annotations = {person(0, {0, 0, 10, 10})};
  const Curve c = compute_curve(ds, {}, SubsetSpec::all());
  ASSERT_EQ(c.points.size(), 1u);
  EXPECT_EQ(c.points[0].fppi, 0.0);
  EXPECT_EQ(c.points[0].miss_rate, 1.0);
}

TEST(ComputeCurve, DetectionsOnUnknownFramesDroppedWithWarning) {
  Dataset ds;
  ds.frames = {{"v", 0}};
  ds.annotations = {person(0, {0, 0, 10, 10})};
  const std::vector<Detection> dets{det({0, 0, 10, 10}, 1.0), det({0, 0, 10, 10}, 1.0, {"v", 9})};
  Diagnostics diag;
  const Curve c = compute_curve(ds, dets, SubsetSpec::all(), {}, &diag);
  EXPECT_EQ(c.points.back().false_positives, 0u);
  EXPECT_FALSE(diag.warnings.empty());
}

Curve two_point_curve(double miss) {
  Curve c;
  c.frames = 1;
  c.positives = 1;
  c.points = {{std::numeric_limits<double>::infinity(), 0.0, miss, 0, 0}, {0.0, 5.0, miss, 0, 5}};
  return c;
}

TEST(Lamr, ReferenceGrid) {
  const auto r2 = reference_fppi(kMr2Range);
  ASSERT_EQ(r2.size(), 9u);
  EXPECT_EQ(r2.front(), 1e-2);
  EXPECT_EQ(r2.back(), 1.0);
  EXPECT_EQ(reference_fppi(kMr4Range).size(), 17u);
  EXPECT_THROW(reference_fppi({1.0, 0.1}), Error);
}

TEST(Lamr, ConstantCurveGivesTheConstant) {
  for (double m : {1.0, 0.5, 0.3, 0.123456789, 0.01}) {
    EXPECT_NEAR(log_average_miss_rate(two_point_curve(m), kMr2Range), m, 1e-12);
    EXPECT_NEAR(log_average_miss_rate(two_point_curve(m), kMr4Range), m, 1e-12);
  }
}

TEST(Lamr, ZeroMissClampsToEpsilon) {
  EXPECT_NEAR(log_average_miss_rate(two_point_curve(0.0), kMr2Range), 1e-10, 1e-22);
}

TEST(Lamr, TwoLevelCurve) {
  Curve c;
  c.frames = 10;
  c.positives = 10;
  c.points = {{0.9, 0.0, 0.4, 6, 0}, {0.8, 0.1, 0.4, 6, 1}, {0.7, 0.15, 0.1, 9, 2}};
  const auto miss = reference_miss_rates(c, kMr2Range);
  EXPECT_EQ(std::count(miss.begin(), miss.end(), 0.4), 5);
  EXPECT_EQ(std::count(miss.begin(), miss.end(), 0.1), 4);
  const double expected = std::exp((5 * std::log(0.4) + 4 * std::log(0.1)) / 9);
  EXPECT_DOUBLE_EQ(log_average_miss_rate(c, kMr2Range), expected);
}

SceneParams clean_scene(int frames = 10) {
  SceneParams p;
  p.frames = frames;
  p.people_per_frame = 1;
  p.tp_scores = {1.0, 1.0};
  return p;
}

TEST(Evaluate, PerfectDetector) {
  const auto scene = generate_synthetic_scene(1, clean_scene());
  const auto s = evaluate(scene.dataset, scene.detections, SubsetSpec::reasonable(), Variant::original);
  ASSERT_EQ(s.curve.points.size(), 1u);
  EXPECT_EQ(s.curve.points[0].fppi, 0.0);
  EXPECT_EQ(s.curve.points[0].miss_rate, 0.0);
  EXPECT_LT(s.mr2, 1e-9);
  EXPECT_LT(s.mr4, 1e-9);
  EXPECT_EQ(fppi_at_recall(s.curve, 0.95), 0.0);
}

TEST(Evaluate, BackgroundFalsePositivesAboveTruePositives) {
  for (int k : {1, 2, 5}) {
    SceneParams p = clean_scene(20);
    p.tp_scores = {0.1, 0.4};
    p.fp_scores = {0.5, 1.0};
    p.background_fps_per_frame = k;
    const auto scene = generate_synthetic_scene(k, p);
    const Curve c = compute_curve(scene.dataset, scene.detections, SubsetSpec::all());
    EXPECT_EQ(c.points.back().fppi, double(k));
    EXPECT_EQ(c.points.back().miss_rate, 0.0);
    // Every false positive arrives before the first true positive.
    for (const auto& p : c.points) {
      if (p.fppi < k) EXPECT_EQ(p.miss_rate, 1.0);
    }
  }
}

SceneParams busy_scene() {
  SceneParams p;
  p.frames = 60;
  p.people_per_frame = 3;
  p.recall = 0.85;
  p.jitter = 0.12;
  p.scale_jitter = 0.1;
  p.double_detections_per_frame = 1;
  p.localisation_fps_per_frame = 1;
  p.background_fps_per_frame = 2;
  p.ignore_regions_per_frame = 1;
  p.ignored_detections_per_frame = 1;
  p.tp_scores = {0.2, 1.0};
  p.fp_scores = {0.0, 0.9};
  return p;
}

TEST(Evaluate, InvariantUnderPositiveScoreScaling) {
  const auto scene = generate_synthetic_scene(8, busy_scene());
  auto scaled = scene.detections;
  for (auto& d : scaled) d.score = d.score * 3.5 + 0.0;
  const auto a = evaluate(scene.dataset, scene.detections, SubsetSpec::reasonable(), Variant::original);
  const auto b = evaluate(scene.dataset, scaled, SubsetSpec::reasonable(), Variant::original);
  EXPECT_EQ(a.mr2, b.mr2);
  EXPECT_EQ(a.mr4, b.mr4);
  ASSERT_EQ(a.curve.points.size(), b.curve.points.size());
  for (std::size_t i = 0; i < a.curve.points.size(); ++i) {
    EXPECT_EQ(a.curve.points[i].fppi, b.curve.points[i].fppi);
    EXPECT_EQ(a.curve.points[i].miss_rate, b.curve.points[i].miss_rate);
  }
}

TEST(Evaluate, BitIdenticalAcrossWorkerCounts) {
  const auto scene = generate_synthetic_scene(9, busy_scene());
  const auto base = evaluate(scene.dataset, scene.detections, SubsetSpec::reasonable(),
                             Variant::original, {1});
  for (unsigned workers : {2u, 3u, 8u}) {
    const auto other = evaluate(scene.dataset, scene.detections, SubsetSpec::reasonable(),
                                Variant::original, {workers});
    EXPECT_EQ(other.curve, base.curve);
    EXPECT_EQ(summary_text(other), summary_text(base));
    EXPECT_EQ(curve_csv(other.curve), curve_csv(base.curve));
  }
}

Dataset square_people(int n) {
  Dataset ds;
  for (int f = 0; f < n; ++f) {
    ds.frames.push_back({"v", f});
    Annotation a = person(0, {0, 0, 100, 100});
    a.frame = {"v", f};
    ds.annotations.push_back(a);
  }
  return ds;
}

TEST(MedianTpIou, Examples) {
  const Dataset ds = square_people(4);
  std::vector<Detection> exact;
  for (const auto& a : ds.annotations) exact.push_back({a.frame, a.box, 1.0});
  EXPECT_EQ(median_tp_iou(ds, exact, SubsetSpec::all()), 1.0);

  // Two at IoU 0.6 and two at 0.9 (shortened from the bottom).
  std::vector<Detection> mixed;
  for (int f = 0; f < 4; ++f) mixed.push_back({{"v", f}, {0, 0, 100, f < 2 ? 60.0 : 90.0}, 1.0});
  EXPECT_DOUBLE_EQ(median_tp_iou(ds, mixed, SubsetSpec::all()), 0.6);

  EXPECT_THROW(median_tp_iou(ds, {}, SubsetSpec::all()), Error);
}

TEST(Sweep, PerfectAndJitteredDetectors) {
  const Dataset ds = square_people(50);
  const std::vector<double> thresholds{0.5, 0.6, 0.7, 0.8};
  std::vector<Detection> exact, jittered;
  for (int f = 0; f < 50; ++f) {
    exact.push_back({{"v", f}, {0, 0, 100, 100}, 1.0});
    // Height 70 of 100 inside the person: IoU 0.7.
    jittered.push_back({{"v", f}, {0, f % 2 ? 0.0 : 30.0, 100, 70}, 1.0});
  }
  for (const auto& p : mr_vs_iou_sweep(ds, exact, SubsetSpec::all(), thresholds)) {
    EXPECT_LT(p.mr2, 1e-9);
  }
  const auto sweep = mr_vs_iou_sweep(ds, jittered, SubsetSpec::all(), thresholds);
  EXPECT_LT(sweep[0].mr2, 1e-9);
  EXPECT_EQ(sweep[3].mr2, 1.0);
}

TEST(Sweep, MonotoneInThreshold) {
  for (std::uint64_t seed : {3u, 4u, 5u}) {
    const auto scene = generate_synthetic_scene(seed, busy_scene());
    std::vector<double> thresholds;
    for (double t = 0.3; t < 0.951; t += 0.05) thresholds.push_back(t);
    const auto sweep = mr_vs_iou_sweep(scene.dataset, scene.detections, SubsetSpec::all(), thresholds);
    for (std::size_t i = 1; i < sweep.size(); ++i) {
      EXPECT_GE(sweep[i].mr2, sweep[i - 1].mr2) << "seed " << seed << " t " << thresholds[i];
      EXPECT_GE(sweep[i].mr4, sweep[i - 1].mr4);
    }
  }
}

std::vector<Detection> detector_with_fps(int frames, int fps_per_frame) {
  std::vector<Detection> dets;
  for (int f = 0; f < frames; ++f) {
    const double score = 1.0 - f / double(frames);
    dets.push_back({{"v", f}, {0, 0, 100, 100}, score});
    for (int k = 0; k < fps_per_frame; ++k) dets.push_back({{"v", f}, {300.0 + 50 * k, 0, 40, 100}, score});
  }
  return dets;
}

TEST(FppiAtRecall, TenTimesTheBackgroundFalsePositives) {
  const Dataset ds = square_people(100);
  const Curve a = compute_curve(ds, detector_with_fps(100, 10), SubsetSpec::all());
  const Curve b = compute_curve(ds, detector_with_fps(100, 1), SubsetSpec::all());
  EXPECT_NEAR(fppi_at_recall(a, 0.95) / fppi_at_recall(b, 0.95), 10.0, 1e-12);
}

TEST(FppiAtRecall, UnreachableRecallNamesMaximum) {
  const Dataset ds = square_people(10);
  auto dets = detector_with_fps(4, 1);
  const Curve c = compute_curve(ds, dets, SubsetSpec::all());
  try {
    fppi_at_recall(c, 0.5);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.category(), ErrorCategory::unreachable);
    EXPECT_NE(std::string(e.what()).find("max recall 0.4000"), std::string::npos) << e.what();
  }
}

TEST(OperatingThreshold, FirstPointReachingTarget) {
  Curve c;
  c.frames = 10;
  c.positives = 10;
  c.points = {{0.9, 0.0, 0.5, 5, 0}, {0.8, 0.1, 0.4, 6, 1}, {0.7, 0.3, 0.3, 7, 3}};
  EXPECT_EQ(operating_threshold(c, 0.1), 0.8);
  EXPECT_EQ(operating_threshold(c, 0.2), 0.7);
  EXPECT_EQ(operating_threshold(c, 5.0), 0.7);
}

TEST(Export, CsvAndSummaryBlock) {
  const auto scene = generate_synthetic_scene(1, clean_scene());
  const auto s = evaluate(scene.dataset, scene.detections, SubsetSpec::reasonable(), Variant::new_set);
  EXPECT_EQ(curve_csv(s.curve), "threshold,fppi,missrate\n1,0,0\n");
  const std::string text = summary_text(s);
  EXPECT_NE(text.find("MR-2(N) 0.00\n"), std::string::npos) << text;
  EXPECT_NE(text.find("positives 10\n"), std::string::npos);
  EXPECT_NE(text.find("fp@fppi1 0\n"), std::string::npos);
}

}  // namespace
}  // namespace pedeval
