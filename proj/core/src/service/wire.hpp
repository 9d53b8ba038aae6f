#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include <json.hpp>

#include "typeblend/backends.hpp"
#include "typeblend/error.hpp"
#include "typeblend/blend.hpp"
#include "typeblend/glyph.hpp"
#include "typeblend/imagery.hpp"
#include "typeblend/priors.hpp"
#include "typeblend/session.hpp"
#include "typeblend/spectrum.hpp"
#include "typeblend/vector.hpp"

namespace typeblend::wire {

using json = nlohmann::json;

// Where rasters go: inline base64 PNG on the wire, PNG files on disk.
class Rasters {
 public:
  virtual ~Rasters() = default;
  virtual json put(const Image& img) = 0;
  virtual Image get(const json& j) const = 0;

  json put_mask(const Mask& m) { return put(mask_to_image(m)); }
  Mask get_mask(const json& j) const { return mask_from_image(get(j)); }
};

class InlineRasters final : public Rasters {
 public:
  json put(const Image& img) override;
  Image get(const json& j) const override;
};

// Content-addressed PNG files under a directory; {"blob": "<hash>.png"}.
class BlobRasters final : public Rasters {
 public:
  explicit BlobRasters(std::filesystem::path dir) : dir_(std::move(dir)) {}
  json put(const Image& img) override;
  Image get(const json& j) const override;

 private:
  std::filesystem::path dir_;
};

// Field access that turns a missing or mistyped field into invalid_input.
const json& field(const json& j, const char* name);
template <class T>
T get(const json& j, const char* name) {
  try {
    return field(j, name).get<T>();
  } catch (const json::exception&) {
    throw Error(ErrorCode::invalid_input, std::string("field '") + name + "' has the wrong type");
  }
}
template <class T>
std::optional<T> get_opt(const json& j, const char* name) {
  if (!j.is_object() || !j.contains(name) || j.at(name).is_null()) return std::nullopt;
  return get<T>(j, name);
}
json parse_body(std::string_view body);

json color(Rgb c);
Rgb color(const json& j);

json rect(const Rect& r);
Rect rect(const json& j);

json point(Vec2 v);
Vec2 point(const json& j);
json points(std::span<const Vec2> pts);
std::vector<Vec2> points(const json& j);
json rings(std::span<const Ring> rings);
std::vector<Ring> rings(const json& j);

json prompt(const backends::SegmentPrompt& p);
backends::SegmentPrompt prompt(const json& j);

json idea(const backends::Idea& i);
backends::Idea idea(const json& j);

json flags(const priors::PriorSelection& f);
priors::PriorSelection flags(const json& j);

json semantics(const priors::SemanticsPrior& s);
priors::SemanticsPrior semantics(const json& j);
json color_prior(const priors::ColorPrior& c, Rasters& r);
priors::ColorPrior color_prior(const json& j, const Rasters& r);
json shape_prior(const priors::ShapePrior& s);
priors::ShapePrior shape_prior(const json& j);
json design_priors(const priors::DesignPriors& p, Rasters& r);
priors::DesignPriors design_priors(const json& j, const Rasters& r);

json typeface(const glyph::RenderedTypeface& tf, Rasters& r);
glyph::RenderedTypeface typeface(const json& j, const Rasters& r);
json selection(const glyph::TypefaceSelection& sel, Rasters& r);
glyph::TypefaceSelection selection(const json& j, const glyph::RenderedTypeface& source, const Rasters& r);

json imagery(const imagery::ImagerySelection& sel, Rasters& r);
imagery::ImagerySelection imagery(const json& j, const Rasters& r);

// Scores and provenance of a candidate, without the raster.
json scores(const blend::ScoredCandidate& c);
json candidate(const blend::ScoredCandidate& c, Rasters& r);
blend::ScoredCandidate candidate(const json& j, const Rasters& r);

json position(const spectrum::SpectrumPosition& p);
spectrum::SpectrumPosition position(const json& j);

json design(const vector::VectorDesign& d);
vector::VectorDesign design(const json& j);

vector::EditCommand edit_command(const json& j);

json feedback(const spectrum::FeedbackLog& log);
spectrum::FeedbackLog feedback(const json& j);

json session(const SessionState& s, Rasters& r);
SessionState session(const json& j, const Rasters& r);

json error(const Error& e);

}  // namespace typeblend::wire
