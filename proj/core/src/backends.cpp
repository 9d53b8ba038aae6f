#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iterator>
#include <numbers>

#include <json.hpp>

#include "typeblend/backends.hpp"
#include "typeblend/error.hpp"

namespace typeblend::backends {

using nlohmann::json;

double EmbeddingVector::l2_norm() const {
  double acc = 0.0;
  for (double v : values) acc += v * v;
  return std::sqrt(acc);
}

EmbeddingVector& EmbeddingVector::normalize() {
  for (double v : values)
    if (!std::isfinite(v)) throw Error(ErrorCode::invalid_input, "embedding has non-finite entries");
  const double n = l2_norm();
  if (n == 0.0) throw Error(ErrorCode::invalid_input, "embedding has zero norm");
  for (double& v : values) v /= n;
  return *this;
}

double cosine(const EmbeddingVector& a, const EmbeddingVector& b) {
  if (a.dim() != b.dim() || a.dim() == 0) throw Error(ErrorCode::invalid_argument, "embedding dimensions differ");
  double ab = 0, aa = 0, bb = 0;
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    ab += a.values[i] * b.values[i];
    aa += a.values[i] * a.values[i];
    bb += b.values[i] * b.values[i];
  }
  if (aa == 0 || bb == 0) throw Error(ErrorCode::invalid_argument, "cosine of a zero vector");
  return std::clamp(ab / std::sqrt(aa * bb), -1.0, 1.0);
}

SegmentPrompt SegmentPrompt::point(int x, int y, PromptLabel label) {
  return {PromptKind::point, {x, y, 0, 0}, label};
}

SegmentPrompt SegmentPrompt::box(int x0, int y0, int x1, int y1, PromptLabel label) {
  return {PromptKind::box, {x0, y0, x1, y1}, label};
}

bool SegmentPrompt::valid_for(int width, int height) const {
  if (kind == PromptKind::point) return coords[0] >= 0 && coords[1] >= 0 && coords[0] < width && coords[1] < height;
  return coords[0] >= 0 && coords[1] >= 0 && coords[2] <= width && coords[3] <= height && coords[0] < coords[2] &&
         coords[1] < coords[3];
}

SegmentPrompt SegmentPrompt::scaled(double sx, double sy) const {
  SegmentPrompt p = *this;
  if (kind == PromptKind::point) {
    p.coords[0] = static_cast<int>(std::floor(coords[0] * sx));
    p.coords[1] = static_cast<int>(std::floor(coords[1] * sy));
  } else {
    p.coords[0] = static_cast<int>(std::floor(coords[0] * sx));
    p.coords[1] = static_cast<int>(std::floor(coords[1] * sy));
    p.coords[2] = std::max(p.coords[0] + 1, static_cast<int>(std::ceil(coords[2] * sx)));
    p.coords[3] = std::max(p.coords[1] + 1, static_cast<int>(std::ceil(coords[3] * sy)));
  }
  return p;
}

std::string_view to_string(PromptKind k) { return k == PromptKind::point ? "point" : "box"; }
std::string_view to_string(PromptLabel l) { return l == PromptLabel::foreground ? "foreground" : "background"; }

PromptKind prompt_kind_from_string(std::string_view s) {
  if (s == "point") return PromptKind::point;
  if (s == "box") return PromptKind::box;
  throw Error(ErrorCode::invalid_prompt, "unknown prompt kind '" + std::string(s) + "'");
}

PromptLabel prompt_label_from_string(std::string_view s) {
  if (s == "foreground") return PromptLabel::foreground;
  if (s == "background") return PromptLabel::background;
  throw Error(ErrorCode::invalid_prompt, "unknown prompt label '" + std::string(s) + "'");
}

void GenerationParams::validate() const {
  if (init_image.empty()) throw Error(ErrorCode::invalid_argument, "generation needs an init image");
  if (!(strength >= 0.0 && strength <= 1.0)) throw Error(ErrorCode::invalid_argument, "strength must lie in [0, 1]");
  if (count < 1) throw Error(ErrorCode::invalid_argument, "count must be at least 1");
}

// ---------------------------------------------------------------------------
// Fixtures

namespace {

Rgb rgb_from_json(const json& j) {
  if (!j.is_array() || j.size() != 3) throw Error(ErrorCode::parse_error, "colour must be [r, g, b]");
  return {j[0].get<std::uint8_t>(), j[1].get<std::uint8_t>(), j[2].get<std::uint8_t>()};
}

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
  return out;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

}  // namespace

MockFixtures MockFixtures::parse(std::string_view json_text) {
  MockFixtures f;
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::parse_error, std::string("mock fixtures: ") + e.what());
  }
  for (const auto& c : j.value("captions", json::array()))
    f.captions.push_back({rgb_from_json(c.at("color")), c.at("caption").get<std::string>()});
  for (const auto& p : j.value("pairings", json::array()))
    f.pairings.push_back({p.at("text").get<std::string>(), rgb_from_json(p.at("color")), p.at("cosine").get<double>()});
  const json ideas = j.value("ideas", json::object());
  for (const auto& [topic, items] : ideas.items()) {
    auto& list = f.ideas[lower(topic)];
    for (const auto& it : items) list.push_back({it.at("imagery").get<std::string>(), it.at("explanation").get<std::string>()});
  }
  return f;
}

MockFixtures MockFixtures::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io_error, "cannot open mock fixtures " + path.string());
  const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse(text);
}

std::optional<Rgb> color_signature(const Image& image) {
  std::vector<std::uint32_t> counts(4096, 0);
  std::vector<std::array<std::uint64_t, 3>> sums(4096, {0, 0, 0});
  for (int y = 0; y < image.height(); ++y)
    for (int x = 0; x < image.width(); ++x) {
      if (image.alpha(x, y) < 128) continue;
      const Rgb c = image.rgb(x, y);
      if (c.r >= 240 && c.g >= 240 && c.b >= 240) continue;
      const int bin = ((c.r >> 4) << 8) | ((c.g >> 4) << 4) | (c.b >> 4);
      ++counts[bin];
      sums[bin][0] += c.r;
      sums[bin][1] += c.g;
      sums[bin][2] += c.b;
    }
  const auto it = std::max_element(counts.begin(), counts.end());
  if (*it == 0) return std::nullopt;
  const auto bin = static_cast<std::size_t>(it - counts.begin());
  const std::uint64_t n = *it;
  return Rgb{static_cast<std::uint8_t>((sums[bin][0] + n / 2) / n), static_cast<std::uint8_t>((sums[bin][1] + n / 2) / n),
             static_cast<std::uint8_t>((sums[bin][2] + n / 2) / n)};
}

bool signature_matches(Rgb s, Rgb key) {
  constexpr int tol = 24;
  return std::abs(s.r - key.r) <= tol && std::abs(s.g - key.g) <= tol && std::abs(s.b - key.b) <= tol;
}

// ---------------------------------------------------------------------------
// Mock captioner

std::string MockCaptioner::caption(const Image& image) const {
  if (image.empty()) throw Error(ErrorCode::invalid_input, "cannot caption an empty image");
  if (const auto sig = color_signature(image))
    for (const auto& entry : table_)
      if (signature_matches(*sig, entry.color)) return entry.text;
  return std::string(kMockDefaultCaption);
}

// ---------------------------------------------------------------------------
// Mock embedder

namespace {

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double unit_uniform(std::uint64_t& state) {
  // (0, 1], 53-bit resolution.
  return (static_cast<double>(splitmix64(state) >> 11) + 1.0) * 0x1.0p-53;
}

constexpr std::uint64_t kTextSalt = 0x7465787400000000ULL;
constexpr std::uint64_t kImageSalt = 0x696d616765000000ULL;

}  // namespace

EmbeddingVector hashed_unit_vector(std::uint64_t key, int dim) {
  EmbeddingVector v;
  v.values.resize(static_cast<std::size_t>(dim));
  std::uint64_t state = key;
  for (int i = 0; i < dim; i += 2) {
    // Box-Muller.
    const double u1 = unit_uniform(state);
    const double u2 = unit_uniform(state);
    const double r = std::sqrt(-2.0 * std::log(u1));
    v.values[i] = r * std::cos(2.0 * std::numbers::pi * u2);
    if (i + 1 < dim) v.values[i + 1] = r * std::sin(2.0 * std::numbers::pi * u2);
  }
  v.normalize();
  return v;
}

MockEmbedder::MockEmbedder(int dim, std::vector<MockFixtures::Pairing> pairings)
    : dim_(dim), pairings_(std::move(pairings)) {
  if (dim_ < 2) throw Error(ErrorCode::invalid_argument, "embedding dimension must be at least 2");
}

EmbeddingVector MockEmbedder::embed_text(std::string_view text) const {
  if (text.empty()) throw Error(ErrorCode::invalid_input, "cannot embed empty text");
  return hashed_unit_vector(fnv1a64(text) ^ kTextSalt, dim_);
}

EmbeddingVector MockEmbedder::embed_image(const Image& image) const {
  if (image.empty()) throw Error(ErrorCode::invalid_input, "cannot embed an empty image");
  EmbeddingVector base = hashed_unit_vector(fingerprint(image) ^ kImageSalt, dim_);
  const auto sig = color_signature(image);
  if (!sig) return base;

  // Orthonormal basis of the matching anchors (modified Gram-Schmidt) and
  // the triangular factor R of A = QR.
  std::vector<std::vector<double>> q;
  std::vector<std::vector<double>> r;  // r[j][i] = <q_i, a_j>, i <= j
  std::vector<double> targets;
  for (const auto& p : pairings_) {
    if (!signature_matches(*sig, p.color)) continue;
    auto a = embed_text(p.text).values;
    std::vector<double> coeff;
    std::vector<double> v = a;
    for (const auto& qi : q) {
      double d = 0;
      for (int k = 0; k < dim_; ++k) d += qi[k] * v[k];
      coeff.push_back(d);
      for (int k = 0; k < dim_; ++k) v[k] -= d * qi[k];
    }
    double n = 0;
    for (double x : v) n += x * x;
    n = std::sqrt(n);
    if (n < 1e-9) continue;  // dependent anchor
    for (double& x : v) x /= n;
    coeff.push_back(n);
    q.push_back(std::move(v));
    r.push_back(std::move(coeff));
    targets.push_back(p.cosine);
  }
  if (q.empty()) return base;

  // Solve R^T x = targets (forward substitution).
  std::vector<double> x(q.size());
  for (std::size_t j = 0; j < q.size(); ++j) {
    double s = targets[j];
    for (std::size_t i = 0; i < j; ++i) s -= r[j][i] * x[i];
    x[j] = s / r[j][j];
  }
  double xx = 0;
  for (double c : x) xx += c * c;
  if (xx > 1.0) {
    const double s = 1.0 / std::sqrt(xx);
    for (double& c : x) c *= s;
    xx = 1.0;
  }
  // Component of the image's own hash vector orthogonal to every anchor.
  std::vector<double> o = base.values;
  for (const auto& qi : q) {
    double d = 0;
    for (int k = 0; k < dim_; ++k) d += qi[k] * o[k];
    for (int k = 0; k < dim_; ++k) o[k] -= d * qi[k];
  }
  double on = 0;
  for (double c : o) on += c * c;
  on = std::sqrt(on);
  const double gamma = std::sqrt(std::max(0.0, 1.0 - xx));
  EmbeddingVector out;
  out.values.assign(static_cast<std::size_t>(dim_), 0.0);
  for (std::size_t i = 0; i < q.size(); ++i)
    for (int k = 0; k < dim_; ++k) out.values[k] += x[i] * q[i][k];
  if (on > 0)
    for (int k = 0; k < dim_; ++k) out.values[k] += gamma * o[k] / on;
  out.normalize();
  return out;
}

// ---------------------------------------------------------------------------
// Mock segmenter

namespace {

struct Flood {
  Mask region;
  bool touches_border = false;
};

Flood flood_fill(const Image& img, int sx, int sy, int tol) {
  Flood f{Mask(img.width(), img.height()), false};
  const Rgb seed = img.rgb(sx, sy);
  auto similar = [&](int x, int y) {
    const Rgb c = img.rgb(x, y);
    return std::abs(c.r - seed.r) <= tol && std::abs(c.g - seed.g) <= tol && std::abs(c.b - seed.b) <= tol;
  };
  std::vector<std::pair<int, int>> stack{{sx, sy}};
  f.region.set(sx, sy, true);
  while (!stack.empty()) {
    const auto [x, y] = stack.back();
    stack.pop_back();
    if (x == 0 || y == 0 || x == img.width() - 1 || y == img.height() - 1) f.touches_border = true;
    const std::pair<int, int> nbrs[4] = {{x + 1, y}, {x - 1, y}, {x, y + 1}, {x, y - 1}};
    for (auto [nx, ny] : nbrs) {
      if (nx < 0 || ny < 0 || nx >= img.width() || ny >= img.height()) continue;
      if (f.region.get(nx, ny) || !similar(nx, ny)) continue;
      f.region.set(nx, ny, true);
      stack.push_back({nx, ny});
    }
  }
  return f;
}

Mask box_mask(int w, int h, const SegmentPrompt& p) {
  Mask m(w, h);
  for (int y = p.coords[1]; y < p.coords[3]; ++y)
    for (int x = p.coords[0]; x < p.coords[2]; ++x) m.set(x, y, true);
  return m;
}

}  // namespace

SegmentResult MockSegmenter::segment(const Image& image, std::span<const SegmentPrompt> prompts) const {
  if (image.empty()) throw Error(ErrorCode::invalid_input, "cannot segment an empty image");
  if (prompts.empty()) throw Error(ErrorCode::invalid_prompt, "segmentation needs at least one prompt");
  for (const auto& p : prompts)
    if (!p.valid_for(image.width(), image.height())) throw Error(ErrorCode::invalid_prompt, "prompt outside the image");

  SegmentResult res{Mask(image.width(), image.height()), {}};
  Mask negative(image.width(), image.height());
  for (const auto& p : prompts) {
    Mask region;
    if (p.kind == PromptKind::box) {
      region = box_mask(image.width(), image.height(), p);
    } else {
      auto f = flood_fill(image, p.coords[0], p.coords[1], tolerance_);
      if (p.label == PromptLabel::foreground && f.touches_border) {
        res.warnings.push_back("point (" + std::to_string(p.coords[0]) + ", " + std::to_string(p.coords[1]) +
                               ") is on the background");
        continue;
      }
      region = std::move(f.region);
    }
    if (p.label == PromptLabel::foreground)
      res.mask = res.mask | region;
    else
      negative = negative | region;
  }
  res.mask = res.mask.minus(negative);
  if (!res.mask.any()) res.warnings.push_back("no region found");
  return res;
}

// ---------------------------------------------------------------------------
// Mock generator

Image MockGenerator::pattern(int width, int height, std::uint64_t seed, const std::optional<Image>& palette) {
  std::uint64_t state = seed ^ 0x5eed5eed5eed5eedULL;
  auto pick_color = [&]() -> Rgb {
    if (palette && !palette->empty()) {
      const int x = static_cast<int>(splitmix64(state) % static_cast<std::uint64_t>(palette->width()));
      const int y = static_cast<int>(splitmix64(state) % static_cast<std::uint64_t>(palette->height()));
      return palette->rgb(x, y);
    }
    const auto v = splitmix64(state);
    return {static_cast<std::uint8_t>(v), static_cast<std::uint8_t>(v >> 8), static_cast<std::uint8_t>(v >> 16)};
  };
  Image out(width, height, pick_color());
  const int blobs = 6;
  const int extent = std::max(width, height);
  for (int b = 0; b < blobs; ++b) {
    const double cx = unit_uniform(state) * width;
    const double cy = unit_uniform(state) * height;
    const double radius = (0.08 + 0.22 * unit_uniform(state)) * extent;
    const Rgb c = pick_color();
    const int y0 = std::max(0, static_cast<int>(cy - radius));
    const int y1 = std::min(height, static_cast<int>(cy + radius) + 1);
    const int x0 = std::max(0, static_cast<int>(cx - radius));
    const int x1 = std::min(width, static_cast<int>(cx + radius) + 1);
    for (int y = y0; y < y1; ++y)
      for (int x = x0; x < x1; ++x) {
        const double dx = x + 0.5 - cx;
        const double dy = y + 0.5 - cy;
        if (dx * dx + dy * dy <= radius * radius) out.set(x, y, c);
      }
  }
  return out;
}

std::vector<Image> MockGenerator::generate(const GenerationParams& params) const {
  params.validate();
  const int w = params.init_image.width();
  const int h = params.init_image.height();
  std::vector<Image> out;
  out.reserve(static_cast<std::size_t>(params.count));
  for (int i = 0; i < params.count; ++i) {
    if (params.strength == 0.0) {
      out.push_back(params.init_image);
      continue;
    }
    const Image noise = pattern(w, h, params.seed + static_cast<std::uint64_t>(i), params.palette_image);
    if (params.strength == 1.0) {
      out.push_back(noise);
      continue;
    }
    Image img(w, h);
    const double s = params.strength;
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        const auto* a = params.init_image.at(x, y);
        const auto* b = noise.at(x, y);
        auto* o = img.at(x, y);
        for (int c = 0; c < 3; ++c) o[c] = static_cast<std::uint8_t>(std::lround((1.0 - s) * a[c] + s * b[c]));
        o[3] = 255;
      }
    out.push_back(std::move(img));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Mock ideator

std::vector<Idea> MockIdeator::ideate(std::string_view topic, int n) const {
  const std::string t = trim(topic);
  if (t.empty()) throw Error(ErrorCode::invalid_input, "ideation topic is empty");
  if (n <= 0) throw Error(ErrorCode::invalid_argument, "number of ideas must be positive");
  std::vector<Idea> out;
  if (const auto it = table_.find(lower(t)); it != table_.end())
    for (const auto& idea : it->second)
      if (static_cast<int>(out.size()) < n) out.push_back(idea);
  for (int k = static_cast<int>(out.size()) + 1; static_cast<int>(out.size()) < n; ++k)
    out.push_back({t + " motif " + std::to_string(k),
                   "A recognisable silhouette associated with " + t + " (variant " + std::to_string(k) + ")"});
  return out;
}

Backends make_mock_backends(const MockFixtures& fixtures, int embedding_dim) {
  return Backends{
      std::make_shared<MockCaptioner>(fixtures.captions),
      std::make_shared<MockEmbedder>(embedding_dim, fixtures.pairings),
      std::make_shared<MockSegmenter>(),
      std::make_shared<MockGenerator>(),
      std::make_shared<MockIdeator>(fixtures.ideas),
  };
}

// ---------------------------------------------------------------------------
// Ideation prompt and reply parsing

std::string ideation_prompt(std::string_view topic, int n) {
  return "You help graphic designers find imagery for semantic typographic logos.\n"
         "Topic: " + std::string(topic) + "\n"
         "Think step by step about concrete, drawable objects, scenes and symbols associated with the topic. "
         "Then answer with exactly " + std::to_string(n) +
         " ideas as a JSON array and nothing else. Each element must be an object "
         "{\"imagery\": <short noun phrase>, \"explanation\": <one sentence on what it conveys visually>}.";
}

std::vector<Idea> parse_ideas(std::string_view reply, int n) {
  auto fail = [&](const std::string& why) -> Error {
    return Error(ErrorCode::parse_error, "malformed ideation reply (" + why + "): " + std::string(reply));
  };
  json j;
  try {
    j = json::parse(trim(reply));
  } catch (const json::exception&) {
    throw fail("not JSON");
  }
  if (!j.is_array()) throw fail("expected a JSON array");
  std::vector<Idea> out;
  for (const auto& item : j) {
    if (!item.is_object() || !item.contains("imagery") || !item.contains("explanation") ||
        !item["imagery"].is_string() || !item["explanation"].is_string())
      throw fail("each item needs string fields imagery and explanation");
    Idea idea{trim(item["imagery"].get<std::string>()), trim(item["explanation"].get<std::string>())};
    if (idea.imagery.empty() || idea.explanation.empty()) throw fail("empty imagery or explanation");
    out.push_back(std::move(idea));
  }
  if (static_cast<int>(out.size()) < n)
    throw fail("expected " + std::to_string(n) + " ideas, got " + std::to_string(out.size()));
  out.resize(static_cast<std::size_t>(n));
  return out;
}

}  // namespace typeblend::backends
