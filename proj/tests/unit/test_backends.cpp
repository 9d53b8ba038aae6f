#include <gtest/gtest.h>

#include <cmath>

#include "test_support.hpp"
#include "typeblend/error.hpp"

using namespace typeblend;
using namespace typeblend::backends;
using tbtest::fixtures;

namespace {

const Rgb kYellow{232, 192, 48};
const Rgb kPink{236, 120, 168};

Image vase_like() {
  Image img = tbtest::disk_image(64, 64, 32, 40, 16, kYellow);
  const Mask flowers = tbtest::disk_mask(64, 64, 32, 14, 7);
  for (int y = 0; y < 64; ++y)
    for (int x = 0; x < 64; ++x)
      if (flowers.get(x, y)) img.set(x, y, kPink);
  return img;
}

// Similar-colour 4-connected region grown by BFS
Mask region_oracle(const Image& img, int sx, int sy, int tol) {
  Mask m(img.width(), img.height());
  const Rgb s = img.rgb(sx, sy);
  std::vector<std::pair<int, int>> q{{sx, sy}};
  m.set(sx, sy, true);
  for (std::size_t i = 0; i < q.size(); ++i) {
    auto [x, y] = q[i];
    for (auto [dx, dy] : {std::pair{1, 0}, {-1, 0}, {0, 1}, {0, -1}}) {
      const int nx = x + dx, ny = y + dy;
      if (nx < 0 || ny < 0 || nx >= img.width() || ny >= img.height() || m.get(nx, ny)) continue;
      const Rgb c = img.rgb(nx, ny);
      if (std::abs(c.r - s.r) > tol || std::abs(c.g - s.g) > tol || std::abs(c.b - s.b) > tol) continue;
      m.set(nx, ny, true);
      q.push_back({nx, ny});
    }
  }
  return m;
}

}  // namespace

TEST(Backends, MockCaptionDefaultAndFixture) {
  const MockCaptioner plain;
  EXPECT_EQ(plain.caption(tbtest::disk_image(32, 32, 16, 16, 8)), "object at center");
  const MockCaptioner cap(fixtures().captions);
  EXPECT_EQ(cap.caption(vase_like()), "a yellow vase with pink flowers");
  EXPECT_THROW(cap.caption(Image()), Error);
  try {
    cap.caption(Image());
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::invalid_input);
  }
}

TEST(Backends, MockEmbeddingsAreUnitAndDeterministic) {
  const MockEmbedder emb(512, fixtures().pairings);
  const Image img = vase_like();
  const auto a = emb.embed_image(img);
  const auto b = emb.embed_image(img);
  EXPECT_EQ(a.values, b.values);
  EXPECT_EQ(a.dim(), 512);
  EXPECT_NEAR(a.l2_norm(), 1.0, 1e-6);
  EXPECT_NEAR(cosine(a, a), 1.0, 1e-9);
  const auto t = emb.embed_text("a tiny house");
  EXPECT_NEAR(t.l2_norm(), 1.0, 1e-6);
  for (double v : t.values) EXPECT_TRUE(std::isfinite(v));
  EXPECT_THROW(emb.embed_text(""), Error);
}

TEST(Backends, PairingTableForcesCaptionCosine) {
  const MockEmbedder emb(512, fixtures().pairings);
  const MockCaptioner cap(fixtures().captions);
  const Image img = vase_like();
  const double c = cosine(emb.embed_image(img), emb.embed_text(cap.caption(img)));
  EXPECT_GE(c, 0.9 - 1e-9);
  // every pairing for this signature is honoured exactly
  for (const auto& p : fixtures().pairings)
    if (signature_matches(*color_signature(img), p.color)) {
      EXPECT_NEAR(cosine(emb.embed_image(img), emb.embed_text(p.text)), p.cosine, 1e-9) << p.text;
    }
}

TEST(Backends, UnpairedVectorsAreNearlyOrthogonal) {
  const MockEmbedder emb;
  EXPECT_LT(std::abs(cosine(emb.embed_text("alpha"), emb.embed_text("beta"))), 0.25);
}

TEST(Backends, MockSegmenterSelectsExactDisk) {
  const Image img = tbtest::disk_image(80, 60, 40, 30, 18);
  const MockSegmenter seg;
  const SegmentPrompt p = SegmentPrompt::point(40, 30);
  const auto res = seg.segment(img, std::span(&p, 1));
  EXPECT_EQ(res.mask, region_oracle(img, 40, 30, 16));
  EXPECT_EQ(res.mask, tbtest::disk_mask(80, 60, 40, 30, 18));
  EXPECT_TRUE(res.warnings.empty());
}

TEST(Backends, BoxOverWholeImageSelectsEverything) {
  const Image img = tbtest::disk_image(40, 30, 20, 15, 8);
  const SegmentPrompt p = SegmentPrompt::box(0, 0, 40, 30);
  const auto res = MockSegmenter().segment(img, std::span(&p, 1));
  EXPECT_EQ(res.mask.count(), 40u * 30u);
}

TEST(Backends, BackgroundClickGivesEmptyMaskAndWarning) {
  const Image img = tbtest::disk_image(40, 30, 20, 15, 8);
  const SegmentPrompt p = SegmentPrompt::point(1, 1);
  const auto res = MockSegmenter().segment(img, std::span(&p, 1));
  EXPECT_FALSE(res.mask.any());
  EXPECT_FALSE(res.warnings.empty());
}

TEST(Backends, PromptValidation) {
  EXPECT_FALSE(SegmentPrompt::point(40, 0).valid_for(40, 30));
  EXPECT_FALSE(SegmentPrompt::box(5, 5, 5, 9).valid_for(40, 30));
  EXPECT_TRUE(SegmentPrompt::box(0, 0, 40, 30).valid_for(40, 30));
  const Image img(10, 10);
  const SegmentPrompt p = SegmentPrompt::point(12, 3);
  try {
    MockSegmenter().segment(img, std::span(&p, 1));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::invalid_prompt);
  }
}

TEST(Backends, MockGeneratorStrengthEndpoints) {
  const Image init = tbtest::disk_image(48, 32, 20, 16, 10);
  const MockGenerator gen;
  GenerationParams p;
  p.init_image = init;
  p.prompt = "x";
  p.strength = 0.0;
  p.count = 4;
  p.seed = 9;
  const auto zero = gen.generate(p);
  ASSERT_EQ(zero.size(), 4u);
  for (const auto& img : zero) EXPECT_EQ(img, init);

  p.strength = 1.0;
  const auto full = gen.generate(p);
  p.init_image = Image(48, 32, {1, 2, 3});
  const auto full2 = gen.generate(p);
  ASSERT_EQ(full.size(), 4u);
  for (int i = 0; i < 4; ++i) {
    EXPECT_EQ(full[i], full2[i]);
    EXPECT_EQ(full[i], MockGenerator::pattern(48, 32, 9 + i, std::nullopt));
  }
  EXPECT_NE(full[0], full[1]);
}

TEST(Backends, MockGeneratorDeterministicAndSized) {
  GenerationParams p;
  p.init_image = tbtest::disk_image(30, 20, 10, 10, 6);
  p.count = 4;
  p.seed = 123;
  const auto a = MockGenerator().generate(p);
  const auto b = MockGenerator().generate(p);
  ASSERT_EQ(a.size(), 4u);
  EXPECT_EQ(a, b);
  for (const auto& img : a) {
    EXPECT_EQ(img.width(), 30);
    EXPECT_EQ(img.height(), 20);
  }
}

TEST(Backends, GenerationParamsValidate) {
  GenerationParams p;
  p.init_image = Image(4, 4);
  p.strength = 1.5;
  EXPECT_THROW(p.validate(), Error);
  p.strength = 0.5;
  p.count = 0;
  EXPECT_THROW(p.validate(), Error);
  p.count = 1;
  EXPECT_NO_THROW(p.validate());
  EXPECT_DOUBLE_EQ(GenerationParams{}.strength, 0.75);
}

TEST(Backends, IdeationFixturesAndPadding) {
  const MockIdeator ideator(fixtures().ideas);
  const auto hawaii = ideator.ideate("Hawaii", 5);
  ASSERT_EQ(hawaii.size(), 5u);
  const Idea hula{"Hula Dancer", "Symbolizes the vibrant culture and traditional dance form of Hawaii"};
  EXPECT_NE(std::find(hawaii.begin(), hawaii.end(), hula), hawaii.end());

  const auto x = ideator.ideate("X", 3);
  ASSERT_EQ(x.size(), 3u);
  EXPECT_EQ(x, ideator.ideate("X", 3));
  for (const auto& i : x) EXPECT_FALSE(i.explanation.empty());
  try {
    ideator.ideate("X", 0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::invalid_argument);
  }
  EXPECT_THROW(ideator.ideate("   ", 2), Error);
}

TEST(Backends, IdeationReplyParsingIsStrict) {
  const auto ok = parse_ideas(R"([{"imagery":"Palm","explanation":"Tropical"},{"imagery":"Wave","explanation":"Surf"}])", 2);
  EXPECT_EQ(ok.size(), 2u);
  const std::string prose = "Sure! Here are some ideas: palm trees, waves.";
  try {
    parse_ideas(prose, 2);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::parse_error);
    EXPECT_NE(std::string(e.what()).find(prose), std::string::npos);
  }
  EXPECT_THROW(parse_ideas(R"([{"imagery":"Palm","explanation":""}])", 1), Error);
  EXPECT_THROW(parse_ideas(R"([{"imagery":"Palm","explanation":"x"}])", 2), Error);
  EXPECT_THROW(parse_ideas(R"({"imagery":"Palm","explanation":"x"})", 1), Error);
  const auto prompt = ideation_prompt("Hawaii", 4);
  EXPECT_NE(prompt.find("JSON array"), std::string::npos);
  EXPECT_NE(prompt.find("Hawaii"), std::string::npos);
}

TEST(Backends, PngAndBase64RoundTrip) {
  Image img = tbtest::disk_image(17, 9, 8, 4, 3);
  img.set(0, 0, {10, 20, 30}, 77);
  const Image back = image_from_base64(image_to_base64_png(img));
  EXPECT_EQ(back, img);
  const Mask m = tbtest::disk_mask(17, 9, 8, 4, 3);
  EXPECT_EQ(mask_from_base64(mask_to_base64_png(m)), m);
  EXPECT_EQ(image_from_base64("data:image/png;base64," + image_to_base64_png(img)), img);
  const std::string s = "hello, world";
  const std::vector<std::uint8_t> bytes(s.begin(), s.end());
  EXPECT_EQ(base64_encode(bytes), "aGVsbG8sIHdvcmxk");
  EXPECT_EQ(base64_decode("aGVsbG8sIHdvcmxk"), bytes);
}
