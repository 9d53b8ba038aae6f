#pragma once

#include <array>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "typeblend/backends.hpp"
#include "typeblend/geometry.hpp"
#include "typeblend/glyph.hpp"
#include "typeblend/image.hpp"
#include "typeblend/imagery.hpp"

namespace typeblend::priors {

inline constexpr int kPaletteSize = 5;
inline constexpr int kContourPoints = 20;
inline constexpr int kPaletteImageSide = 64;
inline constexpr int kMaxKeywords = 6;

struct SemanticsPrior {
  std::string scene;
  std::string style;
  std::vector<std::string> keywords;
};

struct ColorPrior {
  std::vector<Rgb> colors;  // sorted by luminance, darkest first
  Image palette_image;      // 64x64, every pixel one of `colors`
};

struct ShapePrior {
  std::vector<Vec2> contour_points;  // imagery contour, image coordinates
  std::vector<Vec2> source_cage;     // on the typeface selection's bounding rectangle
  std::vector<Vec2> target_cage;     // contour points fitted and matched to the cage
  std::vector<Ring> source_outlines;
  std::vector<Ring> deformed_outlines;
  bool self_intersecting = false;    // quality warning
};

struct PriorSelection {
  bool use_semantics = false;
  bool use_color = false;
  bool use_shape = false;
  bool any() const { return use_semantics || use_color || use_shape; }
};

struct DesignPriors {
  std::optional<SemanticsPrior> semantics;
  std::optional<ColorPrior> color;
  std::optional<ShapePrior> shape;
};

// ---------------------------------------------------------------------------
// Semantics

struct StyleEntry {
  std::string text;
  backends::EmbeddingVector embedding;
};

// Newline-delimited JSON, one {"text": ..., "embedding": [...]} per line.
std::vector<StyleEntry> load_style_db(const std::filesystem::path& path);
void save_style_db(std::span<const StyleEntry> entries, const std::filesystem::path& path);

// Highest cosine wins; ties go to the lexicographically smaller text.
const StyleEntry& best_style(const backends::EmbeddingVector& query, std::span<const StyleEntry> db);

// Stopword-filtered words of the texts, ranked by length then frequency
// (then alphabetically), at most `limit` of them.
std::vector<std::string> extract_keywords(std::span<const std::string> texts, int limit = kMaxKeywords);

SemanticsPrior extract_semantics(const imagery::ImagerySelection& sel, std::span<const StyleEntry> style_db,
                                 const backends::Captioner& captioner, const backends::Embedder& embedder);

// ---------------------------------------------------------------------------
// Color

struct WeightedColor {
  std::array<double, 3> rgb;
  double weight;
};

struct KMeansResult {
  std::vector<std::array<double, 3>> centroids;
  int iterations = 0;
};

// Lloyd iterations on weighted colours with deterministic farthest-point
// initialisation starting from the most frequent 5-bit quantised colour bin.
KMeansResult kmeans_colors(std::span<const WeightedColor> colors, int k, int max_iterations = 50,
                           double tolerance = 0.5);

std::vector<WeightedColor> color_histogram(const Image& image, const Mask& mask);

Rgb nearest_color(Rgb c, std::span<const Rgb> palette);

// k colours of the selected pixels plus the spatial palette image.
ColorPrior extract_colors(const imagery::ImagerySelection& sel, int k = kPaletteSize);
ColorPrior extract_colors(const Image& image, const Mask& mask, int k = kPaletteSize);

// ---------------------------------------------------------------------------
// Shape

// Boundary of the largest component, simplified with `tolerance` px.
Ring dominant_contour(const Mask& mask, double tolerance = 1.0);

// n points equally spaced by arc length along a closed ring, counter-clockwise
// as displayed, starting at its topmost-then-leftmost vertex.
std::vector<Vec2> sample_ring(std::span<const Vec2> ring, int n);

std::vector<Vec2> sample_contour(const imagery::ImagerySelection& sel, int n = kContourPoints);
std::vector<Vec2> sample_contour(const Mask& mask, int n = kContourPoints);

// n points equally spaced on the rectangle perimeter, starting at the
// top-left corner and running counter-clockwise as displayed.
std::vector<Vec2> rectangle_cage(const Box2& rect, int n = kContourPoints);

// Mean-value coordinates of p with respect to a closed cage polygon. Points
// on the cage boundary get the boundary interpolant.
std::vector<double> mean_value_coordinates(Vec2 p, std::span<const Vec2> cage);

struct Correspondence {
  int shift = 0;
  bool reversed = false;
  double cost = 0.0;
};

// Target ordering minimising summed squared distance to the cage over all
// cyclic shifts and both orientations.
Correspondence best_correspondence(std::span<const Vec2> cage, std::span<const Vec2> target);
std::vector<Vec2> apply_correspondence(std::span<const Vec2> target, const Correspondence& c);

// Maps the target's bounding box onto the rectangle (per-axis scale).
std::vector<Vec2> fit_to_rect(std::span<const Vec2> target, const Box2& rect);

enum class TargetFit {
  fit_to_cage,  // target normalised into the cage rectangle first
  as_given,     // target already in typeface canvas coordinates
};

// Cage padding around the selection's bounding rectangle, in px.
inline constexpr double kCagePadding = 1.0;

// Iterative cage deformation: vertices move in `steps` equal increments of
// the cage from source to matched target, with weights recomputed each step.
std::vector<Ring> deform_outlines(std::span<const Ring> outlines, std::span<const Vec2> source_cage,
                                  std::span<const Vec2> target_cage, int steps);

ShapePrior deform_typeface(const glyph::TypefaceSelection& tf_sel, std::span<const Vec2> target, int steps = 5,
                           TargetFit fit = TargetFit::fit_to_cage);
ShapePrior deform_outlines_to(std::span<const Ring> outlines, std::span<const Vec2> target, int steps,
                              TargetFit fit);

// Deformed outlines as black ink on a white canvas.
Image render_outlines(std::span<const Ring> outlines, int width, int height);

}  // namespace typeblend::priors
