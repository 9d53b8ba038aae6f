#include "typeblend/spectrum.hpp"

#include <algorithm>
#include <cmath>

#include "typeblend/error.hpp"

namespace typeblend::spectrum {

double display_from_raw(double raw_imagery) { return (raw_imagery - 0.5) / 0.5; }
double raw_from_display(double display) { return display * 0.5 + 0.5; }

SpectrumPosition SpectrumPosition::from_raw_imagery(double raw_imagery) {
  if (!(raw_imagery >= 0.0 && raw_imagery <= 1.0))
    throw Error(ErrorCode::invalid_argument, "raw imagery share must lie in [0, 1]");
  return {1.0 - raw_imagery, raw_imagery, display_from_raw(raw_imagery)};
}

SpectrumPosition SpectrumPosition::from_display(double display) {
  if (!(display >= -1.0 && display <= 1.0)) throw Error(ErrorCode::invalid_argument, "display must lie in [-1, 1]");
  const double raw = raw_from_display(display);
  return {1.0 - raw, raw, display};
}

double softmax_imagery(double cos_type, double cos_imagery, double tau) {
  return 1.0 / (1.0 + std::exp(tau * (cos_type - cos_imagery)));
}

std::string typeface_anchor(std::string_view typeface_text) {
  return "the character '" + std::string(typeface_text) + "'";
}

SpectrumPosition evaluate(const backends::Embedder& embedder, const Image& candidate, std::string_view typeface_text,
                          std::string_view imagery_desc, double tau) {
  if (candidate.empty()) throw Error(ErrorCode::invalid_input, "candidate image is empty");
  if (typeface_text.empty()) throw Error(ErrorCode::invalid_input, "typeface text is empty");
  if (imagery_desc.empty()) throw Error(ErrorCode::invalid_input, "imagery description is empty");
  if (!(tau > 0.0)) throw Error(ErrorCode::invalid_argument, "temperature must be positive");
  const auto img = embedder.embed_image(candidate);
  const double ct = backends::cosine(img, embedder.embed_text(typeface_anchor(typeface_text)));
  const double ci = backends::cosine(img, embedder.embed_text(imagery_desc));
  return SpectrumPosition::from_raw_imagery(softmax_imagery(ct, ci, tau));
}

int quantize_steps(double display) {
  if (!(std::abs(display) <= 1.0)) throw Error(ErrorCode::invalid_argument, "display must lie in [-1, 1]");
  return static_cast<int>(std::round(display * kStepsPerSide));
}

double quantize(double display) { return quantize_steps(display) / static_cast<double>(kStepsPerSide); }

bool is_quantized(double display) {
  return std::abs(display) <= 1.0 && std::abs(display - quantize(display)) < 1e-9;
}

std::vector<double> spectrum_values() {
  std::vector<double> out;
  for (int s = -kStepsPerSide; s <= kStepsPerSide; ++s) out.push_back(s / static_cast<double>(kStepsPerSide));
  return out;
}

std::string_view to_string(Direction d) { return d == Direction::imagery ? "imagery" : "typeface"; }

RefineContext make_refine_context(const blend::BlendRequest& req, const backends::Backends& backends,
                                  std::string typeface_text, std::string imagery_desc) {
  RefineContext ctx;
  ctx.generator = backends.generator.get();
  ctx.embedder = backends.embedder.get();
  ctx.typeface = blend::init_image(req);
  ctx.prompt = blend::compose_prompt(req);
  ctx.negative_prompt = req.negative_prompt;
  if (req.flags.use_color && req.priors.color) ctx.palette_image = req.priors.color->palette_image;
  ctx.typeface_text = std::move(typeface_text);
  ctx.imagery_desc = std::move(imagery_desc);
  ctx.seed = req.seed;
  return ctx;
}

double step_strength(double from_display, double to_display, const RefineConfig& cfg) {
  const int steps = std::abs(quantize_steps(to_display) - quantize_steps(from_display));
  return std::clamp(steps / static_cast<double>(kStepsPerSide), cfg.min_strength, cfg.max_strength);
}

Image pull_to_white(const Image& image, const Mask& keep, double factor) {
  if (!same_size(image, keep)) throw Error(ErrorCode::invalid_argument, "mask and image sizes differ");
  if (!(factor >= 0.0 && factor <= 1.0)) throw Error(ErrorCode::invalid_argument, "factor must lie in [0, 1]");
  Image out = image;
  for (int y = 0; y < image.height(); ++y)
    for (int x = 0; x < image.width(); ++x) {
      if (keep.get(x, y)) continue;
      auto* p = out.at(x, y);
      for (int c = 0; c < 3; ++c) p[c] = static_cast<std::uint8_t>(p[c] + std::ceil(factor * (255 - p[c])));
    }
  return out;
}

RefineResult refine(const Image& candidate, const SpectrumPosition& current, double target_display,
                    const RefineContext& ctx) {
  if (!ctx.generator || !ctx.embedder) throw Error(ErrorCode::invalid_argument, "refinement needs backends");
  if (candidate.empty()) throw Error(ErrorCode::invalid_input, "candidate image is empty");
  if (!is_quantized(target_display))
    throw Error(ErrorCode::invalid_argument, "target must be a multiple of 0.05 within [-1, 1]");
  const int from = quantize_steps(current.display);
  const int to = quantize_steps(target_display);
  if (from == to) throw Error(ErrorCode::no_op, "target equals the current position");

  backends::GenerationParams params;
  params.prompt = ctx.prompt;
  params.negative_prompt = ctx.negative_prompt;
  params.palette_image = ctx.palette_image;
  params.seed = ctx.seed;
  params.count = 1;

  RefineResult res;
  if (to > from) {
    res.direction = Direction::imagery;
    params.init_image = candidate;
    params.strength = step_strength(current.display, target_display, ctx.config);
  } else {
    res.direction = Direction::typeface;
    if (ctx.typeface.width() != candidate.width() || ctx.typeface.height() != candidate.height())
      throw Error(ErrorCode::invalid_argument, "typeface and candidate differ in size");
    const double factor = (from - to) / static_cast<double>(kStepsPerSide);
    params.init_image = pull_to_white(candidate, blend::saliency(ctx.typeface), factor);
    params.strength = ctx.config.typeface_strength;
  }
  res.strength = params.strength;
  auto images = ctx.generator->generate(params);
  if (images.empty()) throw Error(ErrorCode::parse_error, "generator returned no image", "generate", false);
  res.image = std::move(images.front());
  res.position = evaluate(*ctx.embedder, res.image, ctx.typeface_text, ctx.imagery_desc, ctx.config.tau);
  return res;
}

bool FeedbackLog::keep(const std::string& id) {
  std::erase(negatives, id);
  if (std::find(positives.begin(), positives.end(), id) != positives.end()) return false;
  positives.push_back(id);
  return true;
}

bool FeedbackLog::discard(const std::string& id) {
  std::erase(positives, id);
  if (std::find(negatives.begin(), negatives.end(), id) != negatives.end()) return false;
  negatives.push_back(id);
  return true;
}

void FeedbackLog::validate() const {
  for (const auto& id : positives)
    if (std::find(negatives.begin(), negatives.end(), id) != negatives.end())
      throw Error(ErrorCode::inconsistent_feedback, "candidate " + id + " is both kept and deleted");
}

blend::BlendResult regenerate_with_feedback(blend::BlendRequest req, const FeedbackLog& log,
                                            const std::map<std::string, Image>& images,
                                            const backends::Backends& backends,
                                            const blend::DiscriminationConfig& cfg) {
  log.validate();
  auto lookup = [&](const std::string& id) -> const Image& {
    const auto it = images.find(id);
    if (it == images.end()) throw Error(ErrorCode::not_found, "unknown candidate " + id);
    return it->second;
  };
  for (const auto& id : log.positives) req.positive_refs.push_back(lookup(id));
  for (const auto& id : log.negatives) req.negative_refs.push_back(lookup(id));
  return blend::run_blend(req, backends, cfg);
}

}  // namespace typeblend::spectrum
