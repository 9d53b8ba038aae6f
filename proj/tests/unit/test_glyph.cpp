#include <gtest/gtest.h>

#include "test_support.hpp"
#include "typeblend/error.hpp"

using namespace typeblend;
using namespace typeblend::glyph;
using tbtest::fonts;

namespace {

const RenderedTypeface& spring() {
  static const auto tf = render_typeface("春", "ipaexg", 512, fonts());
  return tf;
}

std::size_t brute_count(const Mask& ink, const Rect& box) {
  std::size_t n = 0;
  for (int y = box.y0; y < box.y1; ++y)
    for (int x = box.x0; x < box.x1; ++x) n += ink.get(x, y);
  return n;
}

Rect random_box(std::mt19937& rng, int size) {
  std::uniform_int_distribution<int> d(0, size);
  int a = d(rng), b = d(rng), c = d(rng), e = d(rng);
  if (a == b) b = std::min(size, a + 1), a = b - 1;
  if (c == e) e = std::min(size, c + 1), c = e - 1;
  return {std::min(a, b), std::min(c, e), std::max(a, b), std::max(c, e)};
}

}  // namespace

TEST(Glyph, FontLibraryListsBundledFonts) {
  const auto ids = fonts().available();
  EXPECT_NE(std::find(ids.begin(), ids.end(), "ipaexg"), ids.end());
  EXPECT_NE(std::find(ids.begin(), ids.end(), "DejaVuSansMono"), ids.end());
}

TEST(Glyph, UnknownFontListsAvailable) {
  try {
    render_typeface("A", "no-such-font", 128, fonts());
    FAIL() << "expected unknown_font";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::unknown_font);
    EXPECT_NE(std::string(e.what()).find("ipaexg"), std::string::npos);
  }
}

TEST(Glyph, EmptyTextRejected) {
  try {
    render_typeface("", "ipaexg", 512, fonts());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::empty_text);
  }
  EXPECT_THROW(render_typeface("  ", "ipaexg", 512, fonts()), Error);
}

TEST(Glyph, CjkCharacterHasInk) {
  const auto& tf = spring();
  EXPECT_EQ(tf.canvas.width(), 512);
  EXPECT_EQ(tf.canvas.height(), 512);
  EXPECT_GT(tf.ink_mask.count(), 1000u);
  EXPECT_EQ(tf.glyph_boxes.size(), 1u);
}

TEST(Glyph, OutlinesReproduceInkMask) {
  for (const auto* tf : {&spring()}) {
    const Mask r = rasterize(tf->outlines, 512, 512, FillRule::nonzero);
    std::size_t agree = 0;
    for (int y = 0; y < 512; ++y)
      for (int x = 0; x < 512; ++x) agree += r.get(x, y) == tf->ink_mask.get(x, y);
    EXPECT_GE(agree / (512.0 * 512.0), 0.99);
  }
}

TEST(Glyph, CanvasIsBlackInkOnWhite) {
  const auto& tf = spring();
  for (int y = 0; y < 512; ++y)
    for (int x = 0; x < 512; ++x) ASSERT_EQ(tf.canvas.rgb(x, y), tf.ink_mask.get(x, y) ? kBlack : kWhite);
}

TEST(Glyph, LatinGlyphKeepsMargin) {
  const auto tf = render_typeface("E", "DejaVuSansMono", 256, fonts());
  // measured directly on the mask
  int x0 = 256, y0 = 256, x1 = -1, y1 = -1;
  for (int y = 0; y < 256; ++y)
    for (int x = 0; x < 256; ++x)
      if (tf.ink_mask.get(x, y)) x0 = std::min(x0, x), y0 = std::min(y0, y), x1 = std::max(x1, x), y1 = std::max(y1, y);
  ASSERT_GE(x1, 0);
  EXPECT_GE(x0, 12);
  EXPECT_GE(y0, 12);
  EXPECT_GE(255 - x1, 12);
  EXPECT_GE(255 - y1, 12);
  // centred
  EXPECT_NEAR((x0 + x1) / 2.0, 127.5, 3.0);
  EXPECT_NEAR((y0 + y1) / 2.0, 127.5, 3.0);
}

TEST(Glyph, FullCanvasSelectionIsIdentity) {
  const auto& tf = spring();
  const Rect all{0, 0, 512, 512};
  const auto sel = select_region(tf, std::span(&all, 1));
  EXPECT_EQ(sel.selected_mask, tf.ink_mask);
  EXPECT_FALSE(sel.remainder_mask.any());
  EXPECT_EQ(typeface_image(sel, Part::selected), tf.canvas);
  EXPECT_THROW(typeface_image(sel, Part::remainder), Error);
}

TEST(Glyph, DisjointBoxesSelectUnion) {
  const auto& tf = spring();
  const Rect a{0, 0, 200, 512}, b{300, 0, 512, 512};
  const auto sa = select_region(tf, std::span(&a, 1));
  const auto sb = select_region(tf, std::span(&b, 1));
  const std::vector<Rect> both = {a, b};
  EXPECT_EQ(select_region(tf, both).selected_mask, sa.selected_mask | sb.selected_mask);
}

TEST(Glyph, LowerHalfSelectionMatchesPixelOracle) {
  const auto& tf = spring();
  const Rect lower{0, 256, 512, 512};
  const auto sel = select_region(tf, std::span(&lower, 1));
  EXPECT_EQ(sel.selected_mask.count(), brute_count(tf.ink_mask, lower));
  const Image rem = typeface_image(sel, Part::remainder);
  for (int y = lower.y0; y < lower.y1; ++y)
    for (int x = lower.x0; x < lower.x1; ++x) ASSERT_EQ(rem.rgb(x, y), kWhite);
}

TEST(Glyph, PartsCompositeToCanvas) {
  const auto& tf = spring();
  const Rect lower{0, 256, 512, 512};
  const auto sel = select_region(tf, std::span(&lower, 1));
  const Image a = typeface_image(sel, Part::selected);
  const Image b = typeface_image(sel, Part::remainder);
  Image comp(512, 512);
  for (int y = 0; y < 512; ++y)
    for (int x = 0; x < 512; ++x) comp.set(x, y, (a.rgb(x, y) == kBlack || b.rgb(x, y) == kBlack) ? kBlack : kWhite);
  EXPECT_EQ(comp, tf.canvas);
}

TEST(Glyph, RandomBoxesPartitionMonotoneIdempotent) {
  const auto& tf = spring();
  std::mt19937 rng(3);
  for (int trial = 0; trial < 40; ++trial) {
    std::vector<Rect> boxes = {random_box(rng, 512), random_box(rng, 512)};
    TypefaceSelection sel;
    try {
      sel = select_region(tf, boxes);
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::empty_selection);
      continue;
    }
    Mask in_boxes(512, 512);
    for (const auto& b : boxes) in_boxes = in_boxes | tbtest::rect_mask(512, 512, b);
    EXPECT_EQ(sel.selected_mask, tf.ink_mask & in_boxes);
    EXPECT_EQ(sel.selected_mask | sel.remainder_mask, tf.ink_mask);
    EXPECT_FALSE((sel.selected_mask & sel.remainder_mask).any());
    // idempotence
    EXPECT_EQ(select_region(tf, boxes).selected_mask, sel.selected_mask);
    // monotonicity
    boxes.push_back(random_box(rng, 512));
    const auto grown = select_region(tf, boxes);
    EXPECT_FALSE(sel.selected_mask.minus(grown.selected_mask).any());
  }
}

TEST(Glyph, EmptySelectionAndOutOfCanvasBoxes) {
  const auto& tf = spring();
  const Rect corner{0, 0, 4, 4};
  try {
    select_region(tf, std::span(&corner, 1));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::empty_selection);
  }
  const Rect outside{500, 500, 600, 600};
  try {
    select_region(tf, std::span(&outside, 1));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::invalid_argument);
  }
}

TEST(Glyph, GranularityTagging) {
  const auto tf = render_typeface("AB", "DejaVuSansMono", 256, fonts());
  ASSERT_EQ(tf.glyph_boxes.size(), 2u);
  const Rect all{0, 0, 256, 256};
  EXPECT_EQ(select_region(tf, std::span(&all, 1)).granularity, Granularity::multi_letter);
  const Rect first = tf.glyph_boxes[0];
  EXPECT_EQ(select_region(tf, std::span(&first, 1)).granularity, Granularity::letter);
  const Rect part{first.x0, first.y0, first.x1, (first.y0 + first.y1) / 2};
  EXPECT_EQ(select_region(tf, std::span(&part, 1)).granularity, Granularity::stroke);
  EXPECT_EQ(granularity_from_string(to_string(Granularity::multi_letter)), Granularity::multi_letter);
  EXPECT_EQ(mapping_from_string(to_string(Mapping::many_to_one)), Mapping::many_to_one);
}

TEST(Glyph, SelectionOutlinesCoverSelectedInk) {
  const auto& tf = spring();
  const Rect lower{0, 256, 512, 512};
  const auto sel = select_region(tf, std::span(&lower, 1));
  const auto outlines = selection_outlines(sel);
  ASSERT_FALSE(outlines.empty());
  const Mask r = rasterize(outlines, 512, 512, FillRule::even_odd);
  std::size_t agree = 0;
  for (int y = 0; y < 512; ++y)
    for (int x = 0; x < 512; ++x) agree += r.get(x, y) == sel.selected_mask.get(x, y);
  EXPECT_GE(agree / (512.0 * 512.0), 0.99);
}
