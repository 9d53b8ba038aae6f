#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "typeblend/geometry.hpp"
#include "typeblend/image.hpp"

namespace typeblend::glyph {

// A quadratic TrueType outline in font units (y up).
struct GlyphOutline {
  struct Point {
    double x = 0.0;
    double y = 0.0;
    bool on_curve = true;
  };
  std::vector<std::vector<Point>> contours;
  int advance = 0;
};

// Minimal reader for TrueType ('glyf') fonts: cmap formats 4 and 12, simple
// and composite glyphs, horizontal metrics. Hinting is ignored.
class Font {
 public:
  static Font load(const std::filesystem::path& path);
  static Font from_bytes(std::vector<std::uint8_t> bytes, std::string name);

  const std::string& name() const { return name_; }
  int units_per_em() const { return units_per_em_; }
  int glyph_count() const { return glyph_count_; }

  // 0 when the font has no glyph for the code point.
  std::uint32_t glyph_index(char32_t code_point) const;
  GlyphOutline outline(std::uint32_t glyph) const;
  int advance(std::uint32_t glyph) const;

 private:
  void parse();
  void append_outline(std::uint32_t glyph, GlyphOutline& out, const double m[6], int depth) const;
  std::span<const std::uint8_t> table(const char tag[4]) const;

  std::vector<std::uint8_t> bytes_;
  std::string name_;
  int units_per_em_ = 0;
  int glyph_count_ = 0;
  int long_loca_ = 0;
  int h_metrics_ = 0;
  std::uint32_t cmap_offset_ = 0;  // absolute offset of the chosen subtable
  int cmap_format_ = 0;
  std::map<std::string, std::pair<std::uint32_t, std::uint32_t>> tables_;
};

// Fonts directory: every *.ttf file is available under its file stem.
class FontLibrary {
 public:
  explicit FontLibrary(const std::filesystem::path& directory);

  std::vector<std::string> available() const;
  // Throws Error(unknown_font) listing the available ids.
  const Font& get(std::string_view font_id) const;

 private:
  std::map<std::string, std::shared_ptr<const Font>, std::less<>> fonts_;
};

struct RenderedTypeface {
  std::string text;
  std::string font_id;
  Image canvas;  // white background, ink pixels black
  Mask ink_mask;
  std::vector<Ring> outlines;  // canvas pixel coordinates, nonzero fill
  std::vector<Rect> glyph_boxes;  // ink bounds of each inked glyph, in text order
};

enum class Granularity { stroke, letter, multi_letter };
enum class Mapping { one_to_one, one_to_many, many_to_one };

std::string_view to_string(Granularity g);
std::string_view to_string(Mapping m);
Granularity granularity_from_string(std::string_view s);
Mapping mapping_from_string(std::string_view s);

struct TypefaceSelection {
  RenderedTypeface source;
  std::vector<Rect> boxes;
  Mask selected_mask;
  Mask remainder_mask;
  Granularity granularity = Granularity::stroke;
  Mapping mapping = Mapping::one_to_one;
};

enum class Part { selected, remainder };

// Fraction of the canvas kept clear on every side.
inline constexpr double kCanvasMargin = 0.1;

std::u32string decode_utf8(std::string_view text);

RenderedTypeface render_typeface(std::string_view text, std::string_view font_id, int canvas_size,
                                 const FontLibrary& fonts);
RenderedTypeface render_typeface(std::string_view text, const Font& font, std::string_view font_id,
                                 int canvas_size);

TypefaceSelection select_region(const RenderedTypeface& tf, std::span<const Rect> boxes,
                                 Mapping mapping = Mapping::one_to_one);

Image typeface_image(const TypefaceSelection& sel, Part part);

// Blended image with the unselected ink drawn back on top.
Image composite(const Image& blended, const TypefaceSelection& sel);

// Boundary of the selected ink, traced and lightly simplified.
std::vector<Ring> selection_outlines(const TypefaceSelection& sel);

}  // namespace typeblend::glyph
