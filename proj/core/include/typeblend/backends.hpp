#pragma once

#include <array>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "typeblend/image.hpp"

// Contracts for the external models the engine depends on (captioning,
// joint image/text embedding, promptable segmentation, image-to-image
// diffusion, text ideation), plus offline deterministic mocks and HTTP
// clients for remote deployments.
namespace typeblend::backends {

inline constexpr int kDefaultEmbeddingDim = 512;

struct EmbeddingVector {
  std::vector<double> values;

  int dim() const { return static_cast<int>(values.size()); }
  double l2_norm() const;
  // Scales to unit length; throws on zero or non-finite input.
  EmbeddingVector& normalize();
};

double cosine(const EmbeddingVector& a, const EmbeddingVector& b);

enum class PromptKind { point, box };
enum class PromptLabel { foreground, background };

struct SegmentPrompt {
  PromptKind kind = PromptKind::point;
  // point: {x, y, -, -}; box: {x0, y0, x1, y1} with x0 < x1, y0 < y1.
  std::array<int, 4> coords{};
  PromptLabel label = PromptLabel::foreground;

  static SegmentPrompt point(int x, int y, PromptLabel label = PromptLabel::foreground);
  static SegmentPrompt box(int x0, int y0, int x1, int y1, PromptLabel label = PromptLabel::foreground);

  bool valid_for(int width, int height) const;
  SegmentPrompt scaled(double sx, double sy) const;
  friend bool operator==(const SegmentPrompt&, const SegmentPrompt&) = default;
};

std::string_view to_string(PromptKind k);
std::string_view to_string(PromptLabel l);
PromptKind prompt_kind_from_string(std::string_view s);
PromptLabel prompt_label_from_string(std::string_view s);

struct SegmentResult {
  Mask mask;
  std::vector<std::string> warnings;
};

inline constexpr double kDefaultStrength = 0.75;

struct GenerationParams {
  Image init_image;
  std::string prompt;
  std::string negative_prompt;
  std::optional<Image> palette_image;
  double strength = kDefaultStrength;
  std::uint64_t seed = 0;
  int count = 1;
  std::vector<Image> positive_refs;
  std::vector<Image> negative_refs;

  // Throws Error(invalid_argument) on a broken invariant.
  void validate() const;
};

struct Idea {
  std::string imagery;
  std::string explanation;
  friend bool operator==(const Idea&, const Idea&) = default;
};

class Captioner {
 public:
  virtual ~Captioner() = default;
  virtual std::string caption(const Image& image) const = 0;
};

class Embedder {
 public:
  virtual ~Embedder() = default;
  virtual EmbeddingVector embed_image(const Image& image) const = 0;
  virtual EmbeddingVector embed_text(std::string_view text) const = 0;
};

class Segmenter {
 public:
  virtual ~Segmenter() = default;
  virtual SegmentResult segment(const Image& image, std::span<const SegmentPrompt> prompts) const = 0;
};

class Generator {
 public:
  virtual ~Generator() = default;
  virtual std::vector<Image> generate(const GenerationParams& params) const = 0;
};

class Ideator {
 public:
  virtual ~Ideator() = default;
  virtual std::vector<Idea> ideate(std::string_view topic, int n) const = 0;
};

struct Backends {
  std::shared_ptr<const Captioner> captioner;
  std::shared_ptr<const Embedder> embedder;
  std::shared_ptr<const Segmenter> segmenter;
  std::shared_ptr<const Generator> generator;
  std::shared_ptr<const Ideator> ideator;
};

// ---------------------------------------------------------------------------
// Mocks

// Colour signature used by the mocks to recognise fixture images: mean colour
// of the most populated 16-level colour bin among opaque, non-white pixels.
std::optional<Rgb> color_signature(const Image& image);
bool signature_matches(Rgb signature, Rgb key);

struct MockFixtures {
  struct Caption {
    Rgb color;
    std::string text;
  };
  // Forces cos(embed_image(img), embed_text(text)) == cosine for every image
  // whose colour signature matches `color`.
  struct Pairing {
    std::string text;
    Rgb color;
    double cosine = 0.0;
  };

  std::vector<Caption> captions;
  std::vector<Pairing> pairings;
  std::map<std::string, std::vector<Idea>> ideas;  // keyed by lower-case topic

  static MockFixtures load(const std::filesystem::path& path);
  static MockFixtures parse(std::string_view json_text);
};

inline constexpr std::string_view kMockDefaultCaption = "object at center";

class MockCaptioner final : public Captioner {
 public:
  explicit MockCaptioner(std::vector<MockFixtures::Caption> table = {}) : table_(std::move(table)) {}
  std::string caption(const Image& image) const override;

 private:
  std::vector<MockFixtures::Caption> table_;
};

class MockEmbedder final : public Embedder {
 public:
  explicit MockEmbedder(int dim = kDefaultEmbeddingDim, std::vector<MockFixtures::Pairing> pairings = {});
  EmbeddingVector embed_image(const Image& image) const override;
  EmbeddingVector embed_text(std::string_view text) const override;
  int dim() const { return dim_; }

 private:
  int dim_;
  std::vector<MockFixtures::Pairing> pairings_;
};

// Seeded hash onto the unit sphere.
EmbeddingVector hashed_unit_vector(std::uint64_t key, int dim);

// Flood fill on colour similarity (per-channel tolerance); point prompts
// whose region touches the image border are treated as background clicks.
class MockSegmenter final : public Segmenter {
 public:
  explicit MockSegmenter(int tolerance = 16) : tolerance_(tolerance) {}
  SegmentResult segment(const Image& image, std::span<const SegmentPrompt> prompts) const override;

 private:
  int tolerance_;
};

// Linear blend of the init image with a seed-keyed procedural pattern:
// strength 0 returns the init image, strength 1 returns only the pattern.
class MockGenerator final : public Generator {
 public:
  std::vector<Image> generate(const GenerationParams& params) const override;
  static Image pattern(int width, int height, std::uint64_t seed, const std::optional<Image>& palette);
};

class MockIdeator final : public Ideator {
 public:
  explicit MockIdeator(std::map<std::string, std::vector<Idea>> table = {}) : table_(std::move(table)) {}
  std::vector<Idea> ideate(std::string_view topic, int n) const override;

 private:
  std::map<std::string, std::vector<Idea>> table_;
};

Backends make_mock_backends(const MockFixtures& fixtures, int embedding_dim = kDefaultEmbeddingDim);

// ---------------------------------------------------------------------------
// Ideation wire format

std::string ideation_prompt(std::string_view topic, int n);
// Accepts only a JSON array of {"imagery", "explanation"} objects with
// non-empty strings; throws Error(parse_error) carrying the raw reply.
std::vector<Idea> parse_ideas(std::string_view reply, int n);

// ---------------------------------------------------------------------------
// Remote (HTTP + JSON, rasters as base64 PNG)

struct RemoteEndpoint {
  std::string url;
  std::string api_key;
};

struct RemoteConfig {
  RemoteEndpoint caption;
  RemoteEndpoint embed;
  RemoteEndpoint segment;
  RemoteEndpoint generate;
  RemoteEndpoint ideate;
  std::chrono::milliseconds timeout{60000};
  int max_attempts = 3;
  std::chrono::milliseconds backoff{200};
  int embedding_dim = kDefaultEmbeddingDim;

  // BACKEND_{CAPTION,EMBED,SEGMENT,GENERATE,IDEATE}_URL and matching _KEY.
  static RemoteConfig from_env();
};

Backends make_remote_backends(const RemoteConfig& config);

}  // namespace typeblend::backends
