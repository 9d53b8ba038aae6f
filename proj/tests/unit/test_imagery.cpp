#include <gtest/gtest.h>

#include "test_support.hpp"
#include "typeblend/error.hpp"
#include "typeblend/imagery.hpp"

using namespace typeblend;
using namespace typeblend::imagery;
using backends::MockSegmenter;
using backends::SegmentPrompt;

namespace {

Image two_disks() {
  Image img = tbtest::disk_image(120, 60, 30, 30, 15, {200, 40, 40});
  const Mask second = tbtest::disk_mask(120, 60, 90, 30, 12);
  for (int y = 0; y < 60; ++y)
    for (int x = 0; x < 120; ++x)
      if (second.get(x, y)) img.set(x, y, {40, 40, 200});
  return img;
}

void expect_cutout_consistent(const ImagerySelection& sel) {
  ASSERT_TRUE(same_size(sel.source, sel.mask));
  for (int y = 0; y < sel.source.height(); ++y)
    for (int x = 0; x < sel.source.width(); ++x) {
      ASSERT_EQ(sel.cutout.alpha(x, y) > 0, sel.mask.get(x, y));
      if (sel.mask.get(x, y)) { ASSERT_EQ(sel.cutout.rgb(x, y), sel.source.rgb(x, y)); }
    }
}

}  // namespace

TEST(Imagery, ClickSelectsExactDisk) {
  const Image img = tbtest::disk_image(80, 60, 40, 30, 18);
  const SegmentPrompt p = SegmentPrompt::point(40, 30);
  const auto sel = add_selection(img, std::span(&p, 1), MockSegmenter());
  EXPECT_EQ(sel.mask, tbtest::disk_mask(80, 60, 40, 30, 18));
  expect_cutout_consistent(sel);
  EXPECT_EQ(sel.object_masks.size(), 1u);
}

TEST(Imagery, TwoClicksUnionDisks) {
  const Image img = two_disks();
  const std::vector<SegmentPrompt> ps = {SegmentPrompt::point(30, 30), SegmentPrompt::point(90, 30)};
  const auto sel = add_selection(img, ps, MockSegmenter());
  EXPECT_EQ(sel.mask, tbtest::disk_mask(120, 60, 30, 30, 15) | tbtest::disk_mask(120, 60, 90, 30, 12));
  EXPECT_EQ(sel.object_masks.size(), 2u);
  expect_cutout_consistent(sel);
}

TEST(Imagery, ExtendingNeverRemovesPixels) {
  const Image img = two_disks();
  const SegmentPrompt a = SegmentPrompt::point(30, 30);
  const auto sel = add_selection(img, std::span(&a, 1), MockSegmenter());
  const SegmentPrompt b = SegmentPrompt::point(90, 30);
  const auto more = extend_selection(sel, std::span(&b, 1), MockSegmenter());
  EXPECT_FALSE(sel.mask.minus(more.mask).any());
  EXPECT_GT(more.mask.count(), sel.mask.count());
  expect_cutout_consistent(more);
}

TEST(Imagery, OutOfBoundsClickRejected) {
  const Image img = two_disks();
  const SegmentPrompt p = SegmentPrompt::point(500, 5);
  try {
    add_selection(img, std::span(&p, 1), MockSegmenter());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::invalid_prompt);
  }
}

TEST(Imagery, BackgroundClickIsEmptySelectionWithHint) {
  const Image img = two_disks();
  const SegmentPrompt p = SegmentPrompt::point(2, 2);
  try {
    add_selection(img, std::span(&p, 1), MockSegmenter());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::empty_selection);
    EXPECT_NE(std::string(e.what()).find("click"), std::string::npos);
  }
}

TEST(Imagery, FullMaskImageIsOriginal) {
  const Image img = two_disks();
  const SegmentPrompt p = SegmentPrompt::box(0, 0, 120, 60);
  const auto sel = add_selection(img, std::span(&p, 1), MockSegmenter());
  EXPECT_EQ(imagery_image(sel, Background::white), img);
  EXPECT_EQ(imagery_image(sel, Background::transparent), img);
}

TEST(Imagery, DiskOnWhiteBackground) {
  const Image img = tbtest::disk_image(100, 100, 50, 50, 20, {10, 120, 30}, {90, 90, 90});
  const SegmentPrompt p = SegmentPrompt::point(50, 50);
  const auto sel = add_selection(img, std::span(&p, 1), MockSegmenter());
  const Image out = imagery_image(sel, Background::white);
  const Rect b = sel.mask.bounds();
  const int pad = static_cast<int>(std::ceil(b.width() * 0.05));
  EXPECT_EQ(out.width(), b.width() + 2 * pad);
  for (int y = 0; y < out.height(); ++y)
    for (int x = 0; x < out.width(); ++x) {
      const int sx = x + b.x0 - pad, sy = y + b.y0 - pad;
      const bool inside = sel.mask.get(sx, sy);
      ASSERT_EQ(out.rgb(x, y), (inside ? Rgb{10, 120, 30} : kWhite));
    }
  const Image clear = imagery_image(sel, Background::transparent);
  EXPECT_EQ(clear.alpha(0, 0), 0);
}

TEST(Imagery, EmptyMaskRejected) {
  ImagerySelection sel;
  sel.source = Image(10, 10);
  sel.mask = Mask(10, 10);
  EXPECT_THROW(imagery_image(sel, Background::white), Error);
}

TEST(Imagery, LargeImagesAreSegmentedDownscaled) {
  // 4096 wide: segmentation runs at 2048 and the mask comes back at full size
  const Image img = tbtest::disk_image(4096, 64, 2048, 32, 24);
  const SegmentPrompt p = SegmentPrompt::point(2048, 32);

  struct Recorder final : backends::Segmenter {
    mutable int width = 0;
    backends::SegmentResult segment(const Image& image, std::span<const SegmentPrompt> prompts) const override {
      width = image.width();
      return MockSegmenter().segment(image, prompts);
    }
  } rec;
  const auto sel = add_selection(img, std::span(&p, 1), rec);
  EXPECT_EQ(rec.width, 2048);
  EXPECT_EQ(sel.mask.width(), 4096);
  const Mask truth = tbtest::disk_mask(4096, 64, 2048, 32, 24);
  std::size_t agree = 0;
  for (int y = 0; y < 64; ++y)
    for (int x = 0; x < 4096; ++x) agree += sel.mask.get(x, y) == truth.get(x, y);
  EXPECT_GE(agree / (4096.0 * 64.0), 0.995);
}

TEST(Imagery, RandomPromptSetsKeepCutoutConsistent) {
  const Image img = two_disks();
  std::mt19937 rng(5);
  std::uniform_int_distribution<int> dx(0, 119), dy(0, 59);
  int checked = 0;
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<SegmentPrompt> ps = {SegmentPrompt::point(dx(rng), dy(rng)), SegmentPrompt::point(dx(rng), dy(rng))};
    try {
      expect_cutout_consistent(add_selection(img, ps, MockSegmenter()));
      ++checked;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::empty_selection);
    }
  }
  EXPECT_GT(checked, 0);
}
