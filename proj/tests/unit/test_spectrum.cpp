#include <gtest/gtest.h>

#include <cmath>

#include "test_support.hpp"
#include "typeblend/blend.hpp"
#include "typeblend/error.hpp"
#include "typeblend/spectrum.hpp"

using namespace typeblend;
using namespace typeblend::spectrum;

namespace {

struct CaptureGenerator final : backends::Generator {
  mutable std::vector<backends::GenerationParams> calls;
  std::vector<Image> generate(const backends::GenerationParams& p) const override {
    calls.push_back(p);
    return backends::MockGenerator().generate(p);
  }
};

RefineContext test_context(const CaptureGenerator& gen, const backends::Embedder& emb, const Image& typeface) {
  RefineContext ctx;
  ctx.generator = &gen;
  ctx.embedder = &emb;
  ctx.typeface = typeface;
  ctx.prompt = "a yellow vase with pink flowers";
  ctx.typeface_text = "E";
  ctx.imagery_desc = "a yellow vase with pink flowers";
  ctx.seed = 3;
  return ctx;
}

Image typeface_e() { return glyph::render_typeface("E", "DejaVuSansMono", 96, tbtest::fonts()).canvas; }

Image noisy(int w, int h, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_int_distribution<int> u(0, 255);
  Image img(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      img.set(x, y, {static_cast<std::uint8_t>(u(rng)), static_cast<std::uint8_t>(u(rng)), static_cast<std::uint8_t>(u(rng))});
  return img;
}

}  // namespace

TEST(Spectrum, DisplayMapping) {
  EXPECT_DOUBLE_EQ(display_from_raw(0.5), 0.0);
  EXPECT_DOUBLE_EQ(display_from_raw(1.0), 1.0);
  EXPECT_DOUBLE_EQ(display_from_raw(0.0), -1.0);
  EXPECT_DOUBLE_EQ(display_from_raw(0.775), 0.55);
  EXPECT_DOUBLE_EQ(raw_from_display(0.55), 0.775);
  const auto p = SpectrumPosition::from_display(0.55);
  EXPECT_DOUBLE_EQ(p.raw_imagery, 0.775);
  EXPECT_DOUBLE_EQ(p.raw_type + p.raw_imagery, 1.0);
  EXPECT_THROW(SpectrumPosition::from_display(1.5), Error);
}

TEST(Spectrum, RoundTripIsIdentity) {
  std::mt19937 rng(2);
  std::uniform_real_distribution<double> u(0, 1);
  for (int i = 0; i < 1000; ++i) {
    const double r = u(rng);
    EXPECT_NEAR(raw_from_display(display_from_raw(r)), r, 1e-12);
    const double d = 2 * r - 1;
    EXPECT_NEAR(display_from_raw(raw_from_display(d)), d, 1e-12);
  }
}

TEST(Spectrum, SoftmaxAtTemperature) {
  EXPECT_DOUBLE_EQ(softmax_imagery(0.3, 0.3), 0.5);
  // oracle: exp(100*ci) / (exp(100*ct) + exp(100*ci))
  const double ct = 0.21, ci = 0.24;
  const double oracle = std::exp(100 * ci) / (std::exp(100 * ct) + std::exp(100 * ci));
  EXPECT_NEAR(softmax_imagery(ct, ci), oracle, 1e-12);
  EXPECT_GT(softmax_imagery(0.1, 0.2), 0.99);
}

TEST(Spectrum, EvaluateUsesAnchorAndDescription) {
  const backends::MockEmbedder emb;
  const Image img = tbtest::vase_image(64, 64);
  const auto pos = evaluate(emb, img, "E", "a vase");
  const auto v = emb.embed_image(img);
  const double ct = backends::cosine(v, emb.embed_text("the character 'E'"));
  const double ci = backends::cosine(v, emb.embed_text("a vase"));
  EXPECT_NEAR(pos.raw_imagery, 1.0 / (1.0 + std::exp(100 * (ct - ci))), 1e-12);
  EXPECT_GE(pos.display, -1.0);
  EXPECT_LE(pos.display, 1.0);
  EXPECT_THROW(evaluate(emb, img, "", "a vase"), Error);
}

TEST(Spectrum, QuantizeTiesAwayFromZero) {
  EXPECT_DOUBLE_EQ(quantize(0.56), 0.55);
  EXPECT_DOUBLE_EQ(quantize(0.025), 0.05);
  EXPECT_DOUBLE_EQ(quantize(-0.025), -0.05);
  EXPECT_DOUBLE_EQ(quantize(0.074), 0.05);
  EXPECT_DOUBLE_EQ(quantize(-1.0), -1.0);
  EXPECT_TRUE(is_quantized(0.55));
  EXPECT_FALSE(is_quantized(0.56));
  EXPECT_THROW(quantize(1.2), Error);
}

TEST(Spectrum, FortyOneValues) {
  const auto v = spectrum_values();
  ASSERT_EQ(v.size(), 41u);
  EXPECT_DOUBLE_EQ(v.front(), -1.0);
  EXPECT_DOUBLE_EQ(v.back(), 1.0);
  EXPECT_DOUBLE_EQ(v[20], 0.0);
  for (std::size_t i = 1; i < v.size(); ++i) EXPECT_NEAR(v[i] - v[i - 1], 0.05, 1e-12);
  std::mt19937 rng(8);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int i = 0; i < 1000; ++i) {
    const double q = quantize(u(rng));
    EXPECT_NE(std::find_if(v.begin(), v.end(), [&](double x) { return std::abs(x - q) < 1e-12; }), v.end());
  }
}

TEST(Refine, SamePositionIsNoOp) {
  CaptureGenerator gen;
  const backends::MockEmbedder emb;
  const Image tf = typeface_e();
  const auto ctx = test_context(gen, emb, tf);
  try {
    refine(tf, SpectrumPosition::from_display(0.3), 0.3, ctx);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::no_op);
  }
  EXPECT_TRUE(gen.calls.empty());
}

TEST(Refine, OffGridTargetRejected) {
  CaptureGenerator gen;
  const backends::MockEmbedder emb;
  const Image tf = typeface_e();
  EXPECT_THROW(refine(tf, SpectrumPosition::from_display(0.0), 0.33, test_context(gen, emb, tf)), Error);
  EXPECT_THROW(refine(tf, SpectrumPosition::from_display(0.0), 1.05, test_context(gen, emb, tf)), Error);
}

TEST(Refine, OneStepTowardImagery) {
  CaptureGenerator gen;
  const backends::MockEmbedder emb;
  const Image tf = typeface_e();
  const Image cand = noisy(96, 96, 4);
  const auto res = refine(cand, SpectrumPosition::from_display(0.5), 0.55, test_context(gen, emb, tf));
  ASSERT_EQ(gen.calls.size(), 1u);
  EXPECT_DOUBLE_EQ(gen.calls[0].strength, 0.05);
  EXPECT_EQ(gen.calls[0].init_image, cand);
  EXPECT_EQ(res.direction, Direction::imagery);
  EXPECT_EQ(res.image.width(), 96);
}

TEST(Refine, StrengthScalesAndClamps) {
  EXPECT_DOUBLE_EQ(step_strength(0.0, 0.25), 0.25);
  EXPECT_DOUBLE_EQ(step_strength(-1.0, 1.0), 0.95);
  EXPECT_DOUBLE_EQ(step_strength(0.5, 0.55), 0.05);
  std::mt19937 rng(1);
  std::uniform_int_distribution<int> s(-20, 20);
  for (int i = 0; i < 500; ++i) {
    int a = s(rng), b = s(rng);
    if (a == b) continue;
    if (a > b) std::swap(a, b);
    const double k = step_strength(a / 20.0, b / 20.0);
    EXPECT_NEAR(k, std::clamp((b - a) / 20.0, 0.05, 0.95), 1e-12);
  }
}

TEST(Refine, TowardTypefacePullsBackgroundToWhite) {
  CaptureGenerator gen;
  const backends::MockEmbedder emb;
  const Image tf = typeface_e();
  const Image cand = noisy(96, 96, 11);
  const auto res = refine(cand, SpectrumPosition::from_display(0.5), 0.25, test_context(gen, emb, tf));
  ASSERT_EQ(gen.calls.size(), 1u);
  EXPECT_DOUBLE_EQ(gen.calls[0].strength, 0.2);
  EXPECT_EQ(res.direction, Direction::typeface);
  // per-pixel oracle: 5 steps = factor 0.25 outside the glyph's saliency
  const Mask keep = blend::saliency(tf);
  const Image& init = gen.calls[0].init_image;
  for (int y = 0; y < 96; ++y)
    for (int x = 0; x < 96; ++x) {
      const Rgb c = cand.rgb(x, y), o = init.rgb(x, y);
      if (keep.get(x, y)) {
        ASSERT_EQ(o, c);
      } else {
        ASSERT_EQ(o.r, c.r + static_cast<int>(std::ceil(0.25 * (255 - c.r))));
        ASSERT_EQ(o.g, c.g + static_cast<int>(std::ceil(0.25 * (255 - c.g))));
        ASSERT_EQ(o.b, c.b + static_cast<int>(std::ceil(0.25 * (255 - c.b))));
      }
    }
}

TEST(Refine, PullNeverDarkens) {
  const Image img = noisy(32, 32, 21);
  Mask none(32, 32);
  for (double f : {0.0, 0.05, 0.5, 1.0}) {
    const Image out = pull_to_white(img, none, f);
    for (int y = 0; y < 32; ++y)
      for (int x = 0; x < 32; ++x) {
        EXPECT_GE(out.rgb(x, y).r, img.rgb(x, y).r);
        if (f == 1.0) { EXPECT_EQ(out.rgb(x, y), kWhite); }
        if (f == 0.0) { EXPECT_EQ(out.rgb(x, y), img.rgb(x, y)); }
      }
  }
}

TEST(Refine, ContextFromRequest) {
  blend::BlendRequest req;
  req.typeface = typeface_e();
  req.user_prompt = "bird";
  req.negative_prompt = "blurry";
  req.flags.use_color = true;
  req.priors.color = priors::ColorPrior{{kBlack}, Image(64, 64, kBlack)};
  const auto b = backends::make_mock_backends(tbtest::fixtures());
  const auto ctx = make_refine_context(req, b, "E", "a bird");
  EXPECT_EQ(ctx.prompt, "bird");
  EXPECT_EQ(ctx.negative_prompt, "blurry");
  ASSERT_TRUE(ctx.palette_image.has_value());
  EXPECT_EQ(ctx.typeface, req.typeface);
  EXPECT_EQ(ctx.generator, b.generator.get());
}

TEST(Feedback, KeepAndDiscardAreIdempotent) {
  FeedbackLog log;
  EXPECT_TRUE(log.keep("c1"));
  EXPECT_FALSE(log.keep("c1"));
  EXPECT_EQ(log.positives, std::vector<std::string>{"c1"});
  EXPECT_TRUE(log.discard("c2"));
  EXPECT_FALSE(log.discard("c2"));
  EXPECT_EQ(log.negatives, std::vector<std::string>{"c2"});
  // moving an id never leaves it in both
  EXPECT_TRUE(log.discard("c1"));
  EXPECT_TRUE(log.positives.empty());
  EXPECT_NO_THROW(log.validate());
}

TEST(Feedback, RandomSequencesStayDisjoint) {
  std::mt19937 rng(17);
  std::uniform_int_distribution<int> id(0, 5), op(0, 1);
  FeedbackLog log;
  for (int i = 0; i < 1000; ++i) {
    const std::string c = "c" + std::to_string(id(rng));
    op(rng) ? log.keep(c) : log.discard(c);
    ASSERT_NO_THROW(log.validate());
  }
}

TEST(Feedback, InconsistentLogRejected) {
  FeedbackLog log;
  log.positives = {"a"};
  log.negatives = {"a"};
  try {
    log.validate();
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::inconsistent_feedback);
  }
}

TEST(Feedback, ReferencesReachTheGenerator) {
  auto cap = std::make_shared<CaptureGenerator>();
  auto b = backends::make_mock_backends(tbtest::fixtures());
  b.generator = cap;
  blend::BlendRequest req;
  req.typeface = typeface_e();
  const backends::SegmentPrompt p = backends::SegmentPrompt::point(80, 110);
  req.imagery = imagery::add_selection(tbtest::vase_image(), std::span(&p, 1), backends::MockSegmenter());
  req.user_prompt = "vase";
  req.rounds = 1;
  const Image a = noisy(96, 96, 1), c = noisy(96, 96, 2);
  FeedbackLog log;
  log.keep("a");
  log.discard("c");
  const auto res = regenerate_with_feedback(req, log, {{"a", a}, {"c", c}}, b);
  EXPECT_EQ(res.winners.size(), 1u);
  ASSERT_EQ(cap->calls.size(), 1u);
  EXPECT_EQ(cap->calls[0].positive_refs, std::vector<Image>{a});
  EXPECT_EQ(cap->calls[0].negative_refs, std::vector<Image>{c});
  log.keep("missing");
  try {
    regenerate_with_feedback(req, log, {{"a", a}, {"c", c}}, b);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::not_found);
  }
}
