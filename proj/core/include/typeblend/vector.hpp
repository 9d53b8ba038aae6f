#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "typeblend/geometry.hpp"
#include "typeblend/image.hpp"

namespace typeblend::vector {

// Components smaller than this fraction of the canvas are dropped.
inline constexpr double kMinElementFraction = 0.0005;
inline constexpr double kSimplifyTolerance = 1.0;

struct Element {
  std::string id;
  std::vector<Ring> rings;  // even-odd fill
  Rgb fill;
  int z = 0;  // larger draws on top
  friend bool operator==(const Element&, const Element&) = default;
};

struct VectorDesign {
  int width = 0;
  int height = 0;
  std::vector<Element> elements;  // ascending z

  const Element* find(std::string_view id) const;
  void validate() const;
  friend bool operator==(const VectorDesign&, const VectorDesign&) = default;
};

enum class EditOp { remove, scale, rotate, recolor, translate };
std::string_view to_string(EditOp op);
EditOp edit_op_from_string(std::string_view s);

struct EditCommand {
  std::string target_id;
  EditOp op = EditOp::remove;
  std::optional<double> factor;   // scale
  std::optional<double> degrees;  // rotate, clockwise on screen
  std::optional<Rgb> color;       // recolor
  std::optional<double> dx;       // translate
  std::optional<double> dy;

  void validate() const;
};

// Palette-quantizes the image (empty palette: five colours extracted from
// the whole image), then traces every 4-connected component of each colour.
// Elements run from largest to smallest area, ids e0, e1, ...
VectorDesign vectorize(const Image& image, std::span<const Rgb> palette = {});

Image rasterize(const VectorDesign& design, Rgb background = kWhite);

// Scale and rotate act about the element's area centroid.
VectorDesign apply_edit(const VectorDesign& design, const EditCommand& cmd);

double element_area(const Element& e);

std::string export_svg(const VectorDesign& design);
// Reads back documents written by export_svg (M/L/Z paths with solid fills).
VectorDesign parse_svg(std::string_view svg);

std::string to_json(const VectorDesign& design);
VectorDesign from_json(std::string_view text);

std::string hex_color(Rgb c);
Rgb parse_hex_color(std::string_view s);

}  // namespace typeblend::vector
