#include "pedeval/measures.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "pedeval/dataio.hpp"
#include "test_util.hpp"

namespace pedeval {
namespace {

namespace fs = std::filesystem;

const fs::path kBlur = fs::path(PEDEVAL_TEST_DATA) / "blur";

Patch constant_patch(int w, int h, double v) {
  return Patch(w, h, std::vector<double>(static_cast<std::size_t>(w * h), v));
}

TEST(Contrast, ConstantPatchIsZero) {
  EXPECT_EQ(contrast_score(constant_patch(8, 8, 0.3)), 0.0);
}

TEST(Contrast, HalfBlackHalfWhiteIsOne) {
  std::vector<double> v(100, 0.0);
  std::fill(v.begin() + 50, v.end(), 1.0);
  EXPECT_EQ(contrast_score(Patch(10, 10, v)), 1.0);
}

TEST(Contrast, UniformRamp) {
  std::vector<double> v(101);
  for (int i = 0; i <= 100; ++i) v[static_cast<std::size_t>(i)] = i / 100.0;
  // 0.95 - 0.05 is one ulp below 0.9 in binary floating point.
  EXPECT_NEAR(contrast_score(Patch(101, 1, v)), 0.9, 1e-12);
  EXPECT_NEAR(contrast_score(Patch(101, 1, v), {0.25, 0.75}), 0.5, 1e-12);
}

TEST(Contrast, DependsOnlyOnTheHistogram) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> v(30 * 20);
  for (auto& x : v) x = u(rng);
  const double base = contrast_score(Patch(30, 20, v));
  for (int i = 0; i < 10; ++i) {
    std::shuffle(v.begin(), v.end(), rng);
    EXPECT_EQ(contrast_score(Patch(20, 30, v)), base);
  }
}

TEST(Blur, ConstantPatchIsOne) {
  EXPECT_EQ(blur_score(constant_patch(5, 5, 0.5)), 1.0);
  EXPECT_EQ(blur_score(constant_patch(3, 3, 0.0)), 1.0);
}

TEST(Blur, RejectsTinyPatch) {
  EXPECT_THROW(blur_score(constant_patch(2, 5, 0.5)), Error);
}

// Values from tests/reference/blur_reference.py on the bundled images.
struct Reference {
  const char* file;
  double blur;
};
constexpr Reference kReference[] = {
    {"camera_s0.pgm", 0.2876573987903982}, {"camera_s1.pgm", 0.4757976403804889},
    {"camera_s2.pgm", 0.6715352469428095}, {"camera_s4.pgm", 0.8461962620172092},
    {"step.pgm", 0.11111111111111119},     {"step_box5.pgm", 0.5555555555555556},
};

TEST(Blur, MatchesReferenceImplementation) {
  for (const auto& ref : kReference) {
    const double got = blur_score(to_patch(read_pgm(kBlur / ref.file)));
    EXPECT_NEAR(got, ref.blur, 1e-12) << ref.file;
    EXPECT_GE(got, 0.0);
    EXPECT_LE(got, 1.0);
  }
}

TEST(Blur, IncreasesWithGaussianSmoothing) {
  double previous = -1.0;
  for (const char* file : {"camera_s0.pgm", "camera_s1.pgm", "camera_s2.pgm", "camera_s4.pgm"}) {
    const double b = blur_score(to_patch(read_pgm(kBlur / file)));
    EXPECT_GT(b, previous) << file;
    previous = b;
  }
}

TEST(Blur, HardStepSharperThanBoxFiltered) {
  EXPECT_LT(blur_score(to_patch(read_pgm(kBlur / "step.pgm"))),
            blur_score(to_patch(read_pgm(kBlur / "step_box5.pgm"))));
}

TEST(Blur, StripesAlongOneAxisOnly) {
  // Vertical stripes vary along x only; the flat axis must not dominate.
  std::vector<double> v;
  for (int y = 0; y < 16; ++y) {
    for (int x = 0; x < 16; ++x) v.push_back(x % 2 ? 1.0 : 0.0);
  }
  EXPECT_LT(blur_score(Patch(16, 16, v)), 0.2);
}

TEST(Image, PgmRoundTrip) {
  GrayImage img(7, 3);
  for (int y = 0; y < 3; ++y) {
    for (int x = 0; x < 7; ++x) img.at(x, y) = static_cast<std::uint8_t>(x * 30 + y);
  }
  TempDir tmp;
  write_pgm(img, tmp.path() / "a.pgm");
  EXPECT_EQ(read_pgm(tmp.path() / "a.pgm"), img);
  EXPECT_EQ(read_image(tmp.path() / "a.pgm"), img);
}

TEST(Image, PngRoundTripAndDispatch) {
  const GrayImage camera = read_pgm(kBlur / "camera_s0.pgm");
  TempDir tmp;
  write_png(camera, tmp.path() / "c.png");
  EXPECT_EQ(read_png(tmp.path() / "c.png"), camera);
  EXPECT_EQ(read_image(tmp.path() / "c.png"), camera);
}

TEST(Image, PgmWithCommentAndBadHeader) {
  TempDir tmp;
  write_file(tmp.path() / "c.pgm", std::string("P5\n# made by hand\n2 1\n255\n") + char(10) + char(200));
  const GrayImage img = read_pgm(tmp.path() / "c.pgm");
  EXPECT_EQ(img.at(0, 0), 10);
  EXPECT_EQ(img.at(1, 0), 200);
  write_file(tmp.path() / "bad.pgm", "P2\n2 1\n255\n1 2\n");
  EXPECT_THROW(read_pgm(tmp.path() / "bad.pgm"), Error);
  write_file(tmp.path() / "short.pgm", "P5\n4 4\n255\nab");
  EXPECT_THROW(read_pgm(tmp.path() / "short.pgm"), Error);
  EXPECT_THROW(read_image(tmp.path() / "missing.png"), Error);
}

TEST(Image, CropClipsToBounds) {
  GrayImage img(10, 10, 255);
  const Patch p = crop(img, {-5, 8.5, 8, 10});
  EXPECT_EQ(p.width(), 3);
  EXPECT_EQ(p.height(), 2);
  EXPECT_EQ(p.at(0, 0), 1.0);
  EXPECT_THROW(crop(img, {20, 20, 5, 5}), Error);
}

TEST(Image, DirectoryLookup) {
  TempDir tmp;
  write_pgm(GrayImage(4, 4, 9), tmp.path() / "set00_V000_I00029.pgm");
  ImageDirectory dir(tmp.path());
  ASSERT_TRUE(dir.load({"set00_V000", 29}).has_value());
  EXPECT_EQ(dir.load({"set00_V000", 29})->at(3, 3), 9);
  EXPECT_FALSE(dir.locate({"set00_V000", 30}).has_value());
}

}  // namespace
}  // namespace pedeval
