#include "pedeval/sanitizer.hpp"

#include <gtest/gtest.h>

#include <random>

#include "pedeval/dataio.hpp"
#include "pedeval/synthetic.hpp"
#include "test_util.hpp"

namespace pedeval {
namespace {

namespace fs = std::filesystem;

const fs::path kData = PEDEVAL_TEST_DATA;

Annotation person(std::int64_t id, BBox box, bool ignore = false, FrameId frame = {"v", 0}) {
  return {id, frame, ignore ? Label::people : Label::person, box, std::nullopt, ignore, Source::original, 0.0};
}

Dataset one_frame(std::vector<Annotation> anns) {
  Dataset ds;
  ds.frames = {{"v", 0}};
  ds.annotations = std::move(anns);
  ds.normalize();
  return ds;
}

TEST(GreedyPairs, HighestIouFirstOneToOne) {
  const std::vector<BBox> a{{0, 0, 10, 10}, {1, 0, 10, 10}};
  const std::vector<BBox> b{{1, 0, 10, 10}};
  const auto pairs = greedy_iou_pairs(a, b, 0.5);
  ASSERT_EQ(pairs.size(), 1u);
  EXPECT_EQ(pairs[0].a, 1u);
  EXPECT_EQ(pairs[0].iou, 1.0);
}

TEST(Prune, IdenticalSetsAreAFixedPoint) {
  std::mt19937_64 rng(8);
  for (int i = 0; i < 100; ++i) {
    const Dataset ds = random_dataset(rng, 4, 6);
    EXPECT_EQ(prune(ds, ds), ds);
  }
}

TEST(Prune, ExtraOriginalBecomesIgnore) {
  const Dataset orig = one_frame({person(0, {0, 0, 41, 100}), person(1, {300, 0, 41, 100})});
  const Dataset fresh = one_frame({person(0, {2, 1, 41, 100})});
  const Dataset out = prune(orig, fresh);
  ASSERT_EQ(out.annotations.size(), 2u);
  EXPECT_EQ(out.annotations[0], orig.annotations[0]);
  EXPECT_TRUE(out.annotations[1].ignore);
  EXPECT_EQ(out.annotations[1].box, orig.annotations[1].box);
  EXPECT_EQ(out.annotations[1].source, Source::pruned);
}

TEST(Prune, ExtraNewIsAppended) {
  const Dataset orig = one_frame({person(0, {0, 0, 41, 100})});
  const Dataset fresh = one_frame({person(0, {0, 0, 41, 100}), person(1, {500, 20, 30, 75})});
  const Dataset out = prune(orig, fresh);
  ASSERT_EQ(out.annotations.size(), 2u);
  EXPECT_EQ(out.annotations[1].box, (BBox{500, 20, 30, 75}));
  EXPECT_EQ(out.annotations[1].source, Source::pruned);
  EXPECT_EQ(out.annotations[1].id, 1);
  EXPECT_FALSE(out.annotations[1].ignore);
}

std::size_t unmatched_new(const Dataset& orig, const Dataset& fresh) {
  std::size_t n = 0;
  for (const auto& frame : orig.frames) {
    for (bool ignore : {false, true}) {
      std::vector<BBox> o, f;
      for (const auto& a : orig.annotations) {
        if (a.frame == frame && a.ignore == ignore) o.push_back(a.box);
      }
      for (const auto& a : fresh.annotations) {
        if (a.frame == frame && a.ignore == ignore) f.push_back(a.box);
      }
      n += f.size() - greedy_iou_pairs(o, f, 0.5).size();
    }
  }
  return n;
}

TEST(Prune, NeverDeletesAndKeepsMatchedGeometry) {
  std::mt19937_64 rng(15);
  for (int i = 0; i < 50; ++i) {
    const Dataset orig = random_dataset(rng, 5, 6);
    const Dataset fresh = random_dataset(rng, 5, 6);
    const Dataset out = prune(orig, fresh);
    EXPECT_EQ(out.annotations.size(), orig.annotations.size() + unmatched_new(orig, fresh));
    for (const auto& a : orig.annotations) {
      const auto it = std::find_if(out.annotations.begin(), out.annotations.end(), [&](const Annotation& b) {
        return b.frame == a.frame && b.id == a.id;
      });
      ASSERT_NE(it, out.annotations.end());
      EXPECT_EQ(it->box, a.box);
      EXPECT_EQ(it->visible, a.visible);
      if (a.ignore) EXPECT_TRUE(it->ignore);
    }
  }
}

TEST(Prune, DifferentFramesRejected) {
  Dataset a = one_frame({});
  Dataset b = one_frame({});
  b.frames.push_back({"v", 1});
  EXPECT_THROW(prune(a, b), Error);
  EXPECT_THROW(diff(a, b), Error);
}

TEST(Align, ExactCopiesAreANoOp) {
  const Dataset ds = one_frame({person(0, {10, 10, 41, 100}), person(1, {300, 0, 200, 80}, true)});
  std::vector<Detection> dets;
  for (const auto& a : ds.annotations) dets.push_back({a.frame, a.box, 1.0});
  EXPECT_EQ(align(ds, dets), ds);
}

TEST(Align, NonNormalizedCopiesBecomeNormalized) {
  const Dataset ds = one_frame({person(0, {0, 0, 60, 100})});
  const std::vector<Detection> dets{{{"v", 0}, {0, 0, 60, 100}, 1.0}};
  const Dataset out = align(ds, dets);
  EXPECT_EQ(out.annotations[0].box, normalize_aspect({0, 0, 60, 100}));
  EXPECT_EQ(out.annotations[0].source, Source::aligned);
}

TEST(Align, JitteredCopiesRecoveredBitwise) {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(-0.1, 0.1);
  SceneParams params;
  params.frames = 50;
  params.people_per_frame = 4;
  params.ignore_regions_per_frame = 1;
  const Dataset ds = generate_synthetic_scene(12, params).dataset;
  std::vector<Detection> dets;
  std::map<std::pair<FrameId, std::int64_t>, BBox> expected;
  for (const auto& a : ds.annotations) {
    if (a.ignore) continue;
    const BBox j = normalize_aspect({a.box.x + u(rng) * a.box.w, a.box.y + u(rng) * a.box.h, a.box.w, a.box.h});
    dets.push_back({a.frame, j, 0.9});
    if (iou(j, a.box) >= 0.5) expected[{a.frame, a.id}] = j;
  }
  const Dataset out = align(ds, dets);
  std::size_t recovered = 0;
  for (const auto& a : out.annotations) {
    const auto it = expected.find({a.frame, a.id});
    if (it == expected.end()) continue;
    EXPECT_EQ(a.box, it->second);
    recovered += a.box == it->second;
  }
  EXPECT_EQ(recovered, expected.size());
  EXPECT_EQ(recovered, 200u);
}

TEST(Align, OneCandidateGoesToHigherIou) {
  const Dataset ds = one_frame({person(0, {0, 0, 41, 100}), person(1, {20, 0, 41, 100})});
  const std::vector<Detection> dets{{{"v", 0}, {16, 0, 41, 100}, 1.0}};
  const Dataset out = align(ds, dets);
  EXPECT_EQ(out.annotations[0].box, ds.annotations[0].box);
  EXPECT_EQ(out.annotations[1].box, (BBox{16, 0, 41, 100}));
}

TEST(Align, VisibleFollowsBoxAndIgnoreUntouched) {
  Dataset ds = one_frame({person(0, {0, 0, 41, 100}), person(1, {0, 0, 41, 100}, true)});
  ds.annotations[0].visible = BBox{0, 0, 41, 50};
  const std::vector<Detection> dets{{{"v", 0}, {10, 4, 41, 100}, 1.0}, {{"v", 0}, {5, 0, 41, 100}, 0.1}};
  AlignConfig cfg;
  cfg.score_min = 0.5;
  const Dataset out = align(ds, dets, cfg);
  EXPECT_EQ(out.annotations[0].box, (BBox{10, 4, 41, 100}));
  EXPECT_EQ(*out.annotations[0].visible, (BBox{10, 4, 41, 50}));
  EXPECT_EQ(out.annotations[1], ds.annotations[1]);
  EXPECT_EQ(out.annotations.size(), ds.annotations.size());
}

TEST(Align, ScoreGreedyAndSharedModes) {
  const Dataset ds = one_frame({person(0, {0, 0, 41, 100}), person(1, {20, 0, 41, 100})});
  const std::vector<Detection> dets{{{"v", 0}, {12, 0, 41, 100}, 1.0}};
  AlignConfig cfg;
  cfg.one_to_one = false;
  const Dataset shared = align(ds, dets, cfg);
  EXPECT_EQ(shared.annotations[0].box, (BBox{12, 0, 41, 100}));
  EXPECT_EQ(shared.annotations[1].box, (BBox{12, 0, 41, 100}));
  cfg.one_to_one = true;
  EXPECT_EQ(align(ds, dets, cfg).annotations[0].box, ds.annotations[0].box);
  cfg.score_greedy = true;
  const Dataset by_score = align(ds, dets, cfg);
  EXPECT_EQ(by_score.annotations[0].box, ds.annotations[0].box);
  EXPECT_EQ(by_score.annotations[1].box, (BBox{12, 0, 41, 100}));
  cfg.iou_min = 1.0;
  EXPECT_THROW(align(ds, dets, cfg), Error);
}

TEST(Diff, IdenticalAndDisjoint) {
  const Dataset a = one_frame({person(0, {0, 0, 41, 100}), person(1, {200, 0, 41, 100})});
  const auto same = diff(a, a);
  EXPECT_EQ(same.agreement, 1.0);
  EXPECT_TRUE(same.a_only.empty());
  EXPECT_TRUE(same.b_only.empty());
  const Dataset b = one_frame({person(0, {500, 0, 41, 100})});
  const auto apart = diff(a, b);
  EXPECT_EQ(apart.agreement, 0.0);
  EXPECT_EQ(apart.a_only.size(), 2u);
  EXPECT_EQ(apart.b_only.size(), 1u);
}

TEST(Diff, DuplicateAnnotatorFixture) {
  const Dataset a = read_annotations(kData / "annotator_a.canonical", AnnotationFormat::canonical);
  const Dataset b = read_annotations(kData / "annotator_b.canonical", AnnotationFormat::canonical);
  const auto ab = diff(a, b);
  EXPECT_EQ(ab.a_only.size() + ab.b_only.size(), 1u);
  ASSERT_EQ(ab.a_only.size(), 1u);
  EXPECT_EQ(a.annotations[ab.a_only[0]].frame, (FrameId{"set03_V004", 60}));
  const auto ba = diff(b, a);
  EXPECT_EQ(ba.b_only.size(), 1u);
  EXPECT_EQ(ba.matched.size(), ab.matched.size());
  EXPECT_EQ(ab.agreement, ba.agreement);
  EXPECT_DOUBLE_EQ(ab.agreement, 2.0 * 11 / (12 + 11));
}

TEST(Diff, CoversBothSets) {
  std::mt19937_64 rng(21);
  for (int i = 0; i < 50; ++i) {
    const Dataset a = random_dataset(rng, 4, 5);
    const Dataset b = random_dataset(rng, 4, 5);
    const auto r = diff(a, b);
    const auto count = [](const Dataset& d) {
      return std::size_t(std::count_if(d.annotations.begin(), d.annotations.end(),
                                       [](const Annotation& x) { return !x.ignore; }));
    };
    EXPECT_EQ(r.matched.size() + r.a_only.size(), count(a));
    EXPECT_EQ(r.matched.size() + r.b_only.size(), count(b));
    EXPECT_EQ(r.agreement == 1.0, r.a_only.empty() && r.b_only.empty());
  }
}

TEST(Consolidate, FlagsOnlyUnmatchedOldPeople) {
  const Dataset fresh = one_frame({person(0, {0, 0, 41, 100})});
  EXPECT_TRUE(consolidate_flags(fresh, fresh).empty());

  // The new box covers the top fifth of the old one: IoU 0.2.
  const Dataset with_new = one_frame({person(0, {0, 0, 41, 100}), person(1, {300, 0, 50, 20})});
  const Dataset old = one_frame({person(0, {0, 0, 41, 100}), person(1, {300, 0, 50, 100}),
                                 person(2, {600, 0, 100, 100}, true)});
  const auto items = consolidate_flags(with_new, old);
  ASSERT_EQ(items.size(), 1u);
  EXPECT_DOUBLE_EQ(items[0].max_iou_to_new, 0.2);
  EXPECT_EQ(items[0].box, (BBox{300, 0, 50, 100}));
  EXPECT_EQ(review_items_csv(items), "video/frame,x,y,w,h,max_iou_to_new\nv/0,300,0,50,100,0.2\n");
}

}  // namespace
}  // namespace pedeval
