#include "typeblend/blend.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <set>

#include "typeblend/error.hpp"

namespace typeblend::blend {

std::string_view to_string(VarianceMode m) {
  return m == VarianceMode::within_candidate ? "within_candidate" : "across_candidates";
}

VarianceMode variance_mode_from_string(std::string_view s) {
  if (s == "within_candidate") return VarianceMode::within_candidate;
  if (s == "across_candidates") return VarianceMode::across_candidates;
  throw Error(ErrorCode::invalid_argument, "unknown variance mode '" + std::string(s) + "'");
}

void DiscriminationConfig::validate() const {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw Error(ErrorCode::invalid_argument, "lambda must be >= 0");
}

void BlendRequest::validate() const {
  if (!(strength >= 0.0 && strength <= 1.0)) throw Error(ErrorCode::invalid_argument, "strength must lie in [0, 1]");
  if (rounds < 1) throw Error(ErrorCode::invalid_argument, "rounds must be >= 1");
  if (candidates_per_round < 1) throw Error(ErrorCode::invalid_argument, "candidates_per_round must be >= 1");
  if (typeface.empty()) throw Error(ErrorCode::invalid_input, "typeface image is empty");
  if (!imagery.mask.any()) throw Error(ErrorCode::empty_selection, "imagery selection is empty");
  if (flags.use_semantics && !priors.semantics)
    throw Error(ErrorCode::invalid_argument, "semantics prior requested but not extracted");
  if (flags.use_color && !priors.color) throw Error(ErrorCode::invalid_argument, "color prior requested but not extracted");
  if (flags.use_shape && !priors.shape) throw Error(ErrorCode::invalid_argument, "shape prior requested but not extracted");
}

// ---------------------------------------------------------------------------
// Prompt

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string strip_punct(std::string_view w) {
  std::size_t b = 0, e = w.size();
  while (b < e && std::ispunct(static_cast<unsigned char>(w[b]))) ++b;
  while (e > b && std::ispunct(static_cast<unsigned char>(w[e - 1]))) --e;
  return lower(w.substr(b, e - b));
}

std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    const std::size_t start = i;
    while (i < s.size() && !std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    if (i > start) out.push_back(s.substr(start, i - start));
  }
  return out;
}

}  // namespace

std::string compose_prompt(std::span<const std::string> parts) {
  std::set<std::string> seen;
  std::string out;
  for (const auto& part : parts) {
    std::vector<std::string_view> kept;
    std::vector<std::string> keys;
    for (auto w : split_ws(part)) {
      const std::string key = strip_punct(w);
      if (!key.empty() && seen.contains(key)) continue;
      kept.push_back(w);
      keys.push_back(key);
    }
    seen.insert(keys.begin(), keys.end());
    if (kept.empty()) continue;
    if (!out.empty()) out += ", ";
    for (std::size_t i = 0; i < kept.size(); ++i) {
      if (i) out += ' ';
      out += kept[i];
    }
  }
  if (out.empty()) throw Error(ErrorCode::invalid_input, "prompt is empty: enable the semantics prior or enter a prompt");
  return out;
}

std::string compose_prompt(const BlendRequest& req) {
  std::vector<std::string> parts;
  if (req.flags.use_semantics && req.priors.semantics) {
    parts.push_back(req.priors.semantics->scene);
    parts.push_back(req.priors.semantics->style);
  }
  parts.push_back(req.user_prompt);
  return compose_prompt(parts);
}

// ---------------------------------------------------------------------------
// Scores

namespace {

std::uint8_t composited_luma(const Image& img, int x, int y) {
  const int l = luma(img.rgb(x, y));
  const int a = img.alpha(x, y);
  return static_cast<std::uint8_t>((l * a + 255 * (255 - a) + 127) / 255);
}

}  // namespace

int otsu_threshold(const Image& image) {
  std::array<double, 256> hist{};
  for (int y = 0; y < image.height(); ++y)
    for (int x = 0; x < image.width(); ++x) hist[composited_luma(image, x, y)] += 1.0;
  const double total = static_cast<double>(image.pixel_count());
  double sum_all = 0.0;
  for (int i = 0; i < 256; ++i) sum_all += i * hist[i];

  double w0 = 0.0, sum0 = 0.0, best = -1.0;
  int threshold = -1;
  for (int t = 0; t < 255; ++t) {
    w0 += hist[t];
    sum0 += t * hist[t];
    const double w1 = total - w0;
    if (w0 == 0.0 || w1 == 0.0) continue;
    const double m0 = sum0 / w0;
    const double m1 = (sum_all - sum0) / w1;
    const double between = w0 * w1 * (m0 - m1) * (m0 - m1);
    if (between > best) {
      best = between;
      threshold = t;
    }
  }
  return threshold;  // -1 when the image has a single grey level
}

Mask close3x3(const Mask& mask) {
  const int w = mask.width(), h = mask.height();
  Mask dil(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      bool v = false;
      for (int dy = -1; dy <= 1 && !v; ++dy)
        for (int dx = -1; dx <= 1 && !v; ++dx) v = mask.get_or_false(x + dx, y + dy);
      dil.set(x, y, v);
    }
  Mask out(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      bool v = true;
      for (int dy = -1; dy <= 1 && v; ++dy)
        for (int dx = -1; dx <= 1 && v; ++dx) {
          const int xx = x + dx, yy = y + dy;
          if (xx >= 0 && yy >= 0 && xx < w && yy < h) v = dil.get(xx, yy);
        }
      out.set(x, y, v);
    }
  return out;
}

Mask saliency(const Image& image) {
  if (image.empty()) throw Error(ErrorCode::invalid_input, "cannot compute saliency of an empty image");
  const int t = otsu_threshold(image);
  Mask m(image.width(), image.height());
  for (int y = 0; y < image.height(); ++y)
    for (int x = 0; x < image.width(); ++x) {
      const int l = composited_luma(image, x, y);
      m.set(x, y, t < 0 ? l < 128 : l <= t);
    }
  return close3x3(m);
}

double mask_agreement(const Mask& a, const Mask& b) {
  if (!same_size(a, b)) throw Error(ErrorCode::invalid_argument, "saliency maps differ in size");
  if (a.width() == 0 || a.height() == 0) throw Error(ErrorCode::invalid_input, "empty saliency maps");
  std::size_t agree = 0;
  for (int y = 0; y < a.height(); ++y)
    for (int x = 0; x < a.width(); ++x) agree += a.get(x, y) == b.get(x, y);
  return static_cast<double>(agree) / (static_cast<double>(a.width()) * a.height());
}

double typeface_score(const Image& typeface, const Image& candidate) {
  if (typeface.width() != candidate.width() || typeface.height() != candidate.height())
    throw Error(ErrorCode::invalid_argument, "typeface and candidate differ in size");
  return mask_agreement(saliency(typeface), saliency(candidate));
}

double cosine_to_unit(double cosine) { return std::clamp((cosine + 1.0) / 2.0, 0.0, 1.0); }

double imagery_score(const backends::Embedder& embedder, const Image& imagery, const Image& candidate) {
  return cosine_to_unit(backends::cosine(embedder.embed_image(imagery), embedder.embed_image(candidate)));
}

double prompt_score(const backends::Embedder& embedder, std::string_view prompt, const Image& candidate) {
  return cosine_to_unit(backends::cosine(embedder.embed_text(prompt), embedder.embed_image(candidate)));
}

double population_variance(std::span<const double> values) {
  if (values.empty()) throw Error(ErrorCode::invalid_argument, "variance of an empty set");
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  return var / static_cast<double>(values.size());
}

std::vector<double> aggregate(std::span<const ScoreSet> scores, const DiscriminationConfig& cfg) {
  cfg.validate();
  if (scores.empty()) throw Error(ErrorCode::invalid_argument, "no scores to aggregate");
  std::vector<double> sums, vars;
  for (const auto& s : scores) {
    std::vector<double> v{s.s1, s.s2};
    if (s.s3) v.push_back(*s.s3);
    double sum = 0.0;
    for (double x : v) sum += x;
    sums.push_back(sum);
    vars.push_back(population_variance(v));
  }
  if (cfg.variance == VarianceMode::across_candidates) {
    const double var = population_variance(sums);
    std::fill(vars.begin(), vars.end(), var);
  }
  std::vector<double> f(scores.size());
  // reported on a 1e-12 grid so results do not depend on summation order
  for (std::size_t i = 0; i < f.size(); ++i) f[i] = std::round((sums[i] - cfg.lambda * vars[i]) * 1e12) / 1e12;
  return f;
}

std::size_t select_winner(std::span<const ScoredCandidate> candidates) {
  if (candidates.empty()) throw Error(ErrorCode::invalid_argument, "no candidates");
  std::size_t best = 0;
  for (std::size_t i = 1; i < candidates.size(); ++i) {
    const auto& c = candidates[i];
    const auto& b = candidates[best];
    if (c.f > b.f || (c.f == b.f && c.seed < b.seed)) best = i;
  }
  return best;
}

// ---------------------------------------------------------------------------
// Generation

Image init_image(const BlendRequest& req) {
  if (req.flags.use_shape && req.priors.shape)
    return priors::render_outlines(req.priors.shape->deformed_outlines, req.typeface.width(), req.typeface.height());
  return req.typeface;
}

BlendResult run_blend(const BlendRequest& req, const backends::Backends& backends, const DiscriminationConfig& cfg) {
  req.validate();
  cfg.validate();
  if (!backends.generator || !backends.embedder)
    throw Error(ErrorCode::invalid_argument, "generation needs generator and embedder backends");

  const Image init = init_image(req);
  const std::string prompt = compose_prompt(req);
  const Image imagery = imagery::imagery_image(req.imagery, imagery::Background::white);
  const bool has_prompt = req.user_prompt.find_first_not_of(" \t\r\n") != std::string::npos;

  backends::GenerationParams params;
  params.init_image = init;
  params.prompt = prompt;
  params.negative_prompt = req.negative_prompt;
  if (req.flags.use_color && req.priors.color) params.palette_image = req.priors.color->palette_image;
  params.strength = req.strength;
  params.count = req.candidates_per_round;
  params.positive_refs = req.positive_refs;
  params.negative_refs = req.negative_refs;

  const Mask init_saliency = saliency(init);
  std::optional<backends::EmbeddingVector> imagery_vec, prompt_vec;

  BlendResult result;
  for (int r = 0; r < req.rounds; ++r) {
    params.seed = req.seed + static_cast<std::uint64_t>(r) * static_cast<std::uint64_t>(req.candidates_per_round);
    std::vector<ScoredCandidate> round;
    try {
      if (!imagery_vec) imagery_vec = backends.embedder->embed_image(imagery);
      if (has_prompt && !prompt_vec) prompt_vec = backends.embedder->embed_text(req.user_prompt);
      auto images = backends.generator->generate(params);
      if (static_cast<int>(images.size()) != params.count)
        throw Error(ErrorCode::parse_error, "generator returned the wrong number of images", "generate", false);
      for (std::size_t i = 0; i < images.size(); ++i) {
        ScoredCandidate c;
        c.image = std::move(images[i]);
        if (c.image.width() != init.width() || c.image.height() != init.height())
          throw Error(ErrorCode::parse_error, "generator returned an image of the wrong size", "generate", false);
        c.round = r;
        c.seed = params.seed + i;
        c.prompt = prompt;
        const auto vec = backends.embedder->embed_image(c.image);
        c.s1 = mask_agreement(init_saliency, saliency(c.image));
        c.s2 = cosine_to_unit(backends::cosine(*imagery_vec, vec));
        if (prompt_vec) c.s3 = cosine_to_unit(backends::cosine(*prompt_vec, vec));
        round.push_back(std::move(c));
      }
    } catch (const Error& e) {
      if (e.backend().empty()) throw;
      if (result.winners.empty()) throw;
      result.warnings.push_back("round " + std::to_string(r + 1) + " aborted: " + e.backend() + ": " + e.what());
      break;
    }
    std::vector<ScoreSet> sets;
    for (const auto& c : round) sets.push_back(c.scores());
    const auto f = aggregate(sets, cfg);
    for (std::size_t i = 0; i < round.size(); ++i) round[i].f = f[i];
    result.winners.push_back(round[select_winner(round)]);
    result.rounds.push_back(std::move(round));
  }
  return result;
}

}  // namespace typeblend::blend
