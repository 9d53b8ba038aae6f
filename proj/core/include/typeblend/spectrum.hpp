#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "typeblend/backends.hpp"
#include "typeblend/blend.hpp"
#include "typeblend/image.hpp"

namespace typeblend::spectrum {

inline constexpr double kStep = 0.05;
inline constexpr int kStepsPerSide = 20;
inline constexpr double kDefaultTemperature = 100.0;

// display < 0 leans to the typeface, > 0 to the imagery.
struct SpectrumPosition {
  double raw_type = 0.5;
  double raw_imagery = 0.5;
  double display = 0.0;

  static SpectrumPosition from_raw_imagery(double raw_imagery);
  static SpectrumPosition from_display(double display);
};

double display_from_raw(double raw_imagery);
double raw_from_display(double display);

// Two-way softmax of the cosines at temperature tau: weight on the imagery.
double softmax_imagery(double cos_type, double cos_imagery, double tau = kDefaultTemperature);

std::string typeface_anchor(std::string_view typeface_text);

SpectrumPosition evaluate(const backends::Embedder& embedder, const Image& candidate, std::string_view typeface_text,
                          std::string_view imagery_desc, double tau = kDefaultTemperature);

// Nearest multiple of 0.05, ties away from zero.
double quantize(double display);
int quantize_steps(double display);
bool is_quantized(double display);
std::vector<double> spectrum_values();

struct RefineConfig {
  double typeface_strength = 0.2;  // regeneration after the white pull
  double min_strength = 0.05;
  double max_strength = 0.95;
  double tau = kDefaultTemperature;
};

enum class Direction { imagery, typeface };
std::string_view to_string(Direction d);

struct RefineContext {
  const backends::Generator* generator = nullptr;
  const backends::Embedder* embedder = nullptr;
  Image typeface;  // source of the typeface saliency mask
  std::string prompt;
  std::string negative_prompt;
  std::optional<Image> palette_image;
  std::string typeface_text;
  std::string imagery_desc;
  std::uint64_t seed = 0;
  RefineConfig config;
};

RefineContext make_refine_context(const blend::BlendRequest& req, const backends::Backends& backends,
                                  std::string typeface_text, std::string imagery_desc);

struct RefineResult {
  Image image;
  SpectrumPosition position;
  Direction direction = Direction::imagery;
  double strength = 0.0;
};

// Strength for an imagery-ward move between two quantized positions.
double step_strength(double from_display, double to_display, const RefineConfig& cfg = {});

// Pixels outside `keep` move toward white: p + ceil(factor * (255 - p)).
Image pull_to_white(const Image& image, const Mask& keep, double factor);

RefineResult refine(const Image& candidate, const SpectrumPosition& current, double target_display,
                    const RefineContext& ctx);

struct FeedbackLog {
  std::vector<std::string> positives;
  std::vector<std::string> negatives;

  // Both idempotent; an id moves between the lists rather than sitting in both.
  bool keep(const std::string& id);
  bool discard(const std::string& id);
  // Throws Error(inconsistent_feedback) when an id is in both lists.
  void validate() const;
};

blend::BlendResult regenerate_with_feedback(blend::BlendRequest req, const FeedbackLog& log,
                                            const std::map<std::string, Image>& images,
                                            const backends::Backends& backends,
                                            const blend::DiscriminationConfig& cfg = {});

}  // namespace typeblend::spectrum
