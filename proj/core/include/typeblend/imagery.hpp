#pragma once

#include <span>
#include <vector>

#include "typeblend/backends.hpp"
#include "typeblend/image.hpp"

namespace typeblend::imagery {

// Images whose long side exceeds this are downscaled before segmentation.
inline constexpr int kMaxSegmentationSide = 2048;

struct ImagerySelection {
  Image source;
  std::vector<backends::SegmentPrompt> prompts;
  Mask mask;                    // union of object_masks
  std::vector<Mask> object_masks;  // one per foreground prompt that hit a region
  Image cutout;                 // source pixels where mask is set, transparent elsewhere
  std::vector<std::string> warnings;
};

enum class Background { transparent, white };

// Each foreground prompt selects one object (background prompts apply to all
// of them); the selection is the union of the objects.
ImagerySelection add_selection(const Image& image, std::span<const backends::SegmentPrompt> prompts,
                               const backends::Segmenter& segmenter);

// Adds further objects to an existing selection.
ImagerySelection extend_selection(const ImagerySelection& sel, std::span<const backends::SegmentPrompt> prompts,
                                  const backends::Segmenter& segmenter);

// Crop of the selection to its mask bounds plus 5% padding (clamped to the
// image); pixels outside the mask are transparent or white.
Image imagery_image(const ImagerySelection& sel, Background background);

Image make_cutout(const Image& source, const Mask& mask);

}  // namespace typeblend::imagery
