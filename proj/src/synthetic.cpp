#include "pedeval/synthetic.hpp"

#include <algorithm>
#include <random>
#include <string>

namespace pedeval {

namespace {

constexpr double kFrameHeight = 480.0;
constexpr double kBandSplit = 240.0;
constexpr int kMaxResample = 64;

class Sampler {
 public:
  explicit Sampler(std::uint64_t seed) : rng_(seed) {}

  double uniform(double lo, double hi) {
    if (lo >= hi) return lo;
    return std::uniform_real_distribution<double>(lo, hi)(rng_);
  }
  double uniform(const ScoreRange& r) { return uniform(r.lo, r.hi); }
  bool bernoulli(double p) { return uniform(0.0, 1.0) < p; }
  std::size_t index(std::size_t n) {
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng_);
  }

 private:
  std::mt19937_64 rng_;
};

void check(bool ok, const char* what) {
  if (!ok) throw Error(ErrorCategory::config, std::string("synthetic scene: ") + what);
}

void validate(const SceneParams& p) {
  check(p.frames >= 1, "frames must be >= 1");
  for (int count : {p.people_per_frame, p.double_detections_per_frame,
                    p.localisation_fps_per_frame, p.background_fps_per_frame,
                    p.ignore_regions_per_frame, p.ignored_detections_per_frame}) {
    check(count >= 0 && count <= 16, "per-frame counts must lie in [0, 16]");
  }
  check(p.recall >= 0.0 && p.recall <= 1.0, "recall must lie in [0, 1]");
  check(p.jitter >= 0.0 && p.jitter <= 0.15, "jitter must lie in [0, 0.15]");
  check(p.scale_jitter >= 0.0 && p.scale_jitter <= 0.15, "scale_jitter must lie in [0, 0.15]");
  check(p.tp_scores.lo <= p.tp_scores.hi && p.fp_scores.lo <= p.fp_scores.hi,
        "score ranges need lo <= hi");
  check(p.min_height > 0.0 && p.min_height <= p.max_height && p.max_height <= 200.0,
        "heights must satisfy 0 < min <= max <= 200");
  check(p.aspect > 0.0 && p.aspect <= 1.0, "aspect must lie in (0, 1]");
  check(p.ignored_detections_per_frame == 0 || p.ignore_regions_per_frame > 0,
        "ignored detections need at least one ignore region");
}

BBox person_box(double cx, double bottom, double height, double aspect) {
  const double w = aspect * height;
  return BBox{cx - w / 2.0, bottom - height, w, height};
}

}  // namespace

std::string_view to_string(DetectionRole role) {
  switch (role) {
    case DetectionRole::true_positive: return "tp";
    case DetectionRole::double_detection: return "double";
    case DetectionRole::localisation: return "localisation";
    case DetectionRole::background: return "background";
    case DetectionRole::ignore_absorbed: return "ignored";
  }
  return "unknown";
}

SyntheticScene generate_synthetic_scene(std::uint64_t seed, const SceneParams& p) {
  validate(p);
  Sampler rng(seed);
  const AspectRatio aspect(p.aspect);
  const double max_w = p.aspect * p.max_height;
  const double slot_w = 4.0 * max_w;
  const int slots = std::max(1, p.people_per_frame + p.ignore_regions_per_frame);
  const double frame_w = std::max(640.0, slots * slot_w);

  SyntheticScene scene;
  scene.dataset.meta.push_back("synthetic seed=" + std::to_string(seed));

  auto emit = [&](const FrameId& frame, const BBox& box, double score, DetectionRole role) {
    scene.detections.push_back({frame, box, score});
    scene.roles.push_back(role);
  };

  for (int f = 0; f < p.frames; ++f) {
    const FrameId frame{"synth", f};
    scene.dataset.frames.push_back(frame);
    std::int64_t next_id = 0;

    struct Person {
      BBox box;
      std::optional<double> tp_score;
    };
    std::vector<Person> people;
    std::vector<BBox> regions;

    for (int s = 0; s < slots; ++s) {
      const double slot_cx = (s + 0.5) * slot_w;
      if (s < p.people_per_frame) {
        const double h = rng.uniform(p.min_height, p.max_height);
        const double cx = slot_cx + rng.uniform(-0.25, 0.25) * max_w;
        const double bottom = rng.uniform(kBandSplit + h, kFrameHeight);
        const BBox box = person_box(cx, bottom, h, p.aspect);
        scene.dataset.annotations.push_back(
            {next_id++, frame, Label::person, box, std::nullopt, false, Source::original, 0.0});
        people.push_back({box, std::nullopt});
      } else if (s < slots && p.ignore_regions_per_frame > 0) {
        const BBox region{slot_cx - max_w, kFrameHeight - p.max_height - 1.0, 2.0 * max_w,
                          p.max_height};
        scene.dataset.annotations.push_back(
            {next_id++, frame, Label::people, region, std::nullopt, true, Source::original, 0.0});
        regions.push_back(region);
      }
    }

    for (auto& person : people) {
      if (!rng.bernoulli(p.recall)) continue;
      BBox det = person.box;
      for (int attempt = 0; attempt < kMaxResample; ++attempt) {
        const double h = person.box.h * (1.0 + rng.uniform(-p.scale_jitter, p.scale_jitter));
        const double cx = person.box.center_x() + rng.uniform(-p.jitter, p.jitter) * person.box.w;
        const double bottom = person.box.bottom() + rng.uniform(-p.jitter, p.jitter) * person.box.h;
        const BBox candidate = normalize_aspect(person_box(cx, bottom, h, p.aspect), aspect);
        if (iou(candidate, person.box) >= 0.5) {
          det = candidate;
          break;
        }
      }
      person.tp_score = rng.uniform(p.tp_scores);
      emit(frame, det, *person.tp_score, DetectionRole::true_positive);
    }

    std::vector<const Person*> detected;
    for (const auto& person : people) {
      if (person.tp_score) detected.push_back(&person);
    }
    for (int i = 0; i < p.double_detections_per_frame && !detected.empty(); ++i) {
      const Person& target = *detected[rng.index(detected.size())];
      BBox det = target.box;
      for (int attempt = 0; attempt < kMaxResample; ++attempt) {
        const double dx = rng.uniform(-0.1, 0.1) * target.box.w;
        const double dy = rng.uniform(-0.1, 0.1) * target.box.h;
        const BBox candidate{target.box.x + dx, target.box.y + dy, target.box.w, target.box.h};
        if (iou(candidate, target.box) >= 0.5) {
          det = candidate;
          break;
        }
      }
      const double score = *target.tp_score - rng.uniform(1e-3, 0.5);
      emit(frame, det, score, DetectionRole::double_detection);
    }

    for (int i = 0; i < p.localisation_fps_per_frame && !people.empty(); ++i) {
      const BBox& target = people[rng.index(people.size())].box;
      const double side = rng.bernoulli(0.5) ? 1.0 : -1.0;
      const double shift = rng.uniform(0.6, 0.8) * target.w * side;
      const BBox det{target.x + shift, target.y + rng.uniform(-0.05, 0.05) * target.h,
                     target.w, target.h};
      emit(frame, det, rng.uniform(p.fp_scores), DetectionRole::localisation);
    }

    for (int i = 0; i < p.background_fps_per_frame; ++i) {
      const double h = rng.uniform(p.min_height, std::min(p.max_height, kBandSplit - 1.0));
      const double w = p.aspect * h;
      const BBox det{rng.uniform(0.0, frame_w - w), rng.uniform(0.0, kBandSplit - h), w, h};
      emit(frame, det, rng.uniform(p.fp_scores), DetectionRole::background);
    }

    for (int i = 0; i < p.ignored_detections_per_frame; ++i) {
      const BBox& region = regions[rng.index(regions.size())];
      const double h = rng.uniform(0.5, 1.0) * region.h;
      const double w = std::min(p.aspect * h, region.w);
      const BBox det{region.x + rng.uniform(0.0, region.w - w),
                     region.y + rng.uniform(0.0, region.h - h), w, h};
      emit(frame, det, rng.uniform(p.fp_scores), DetectionRole::ignore_absorbed);
    }
  }
  scene.dataset.normalize();
  return scene;
}

}  // namespace pedeval
