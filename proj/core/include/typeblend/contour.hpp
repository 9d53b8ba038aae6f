#pragma once

#include <cstddef>
#include <vector>

#include "typeblend/geometry.hpp"
#include "typeblend/image.hpp"

namespace typeblend {

struct Components {
  int width = 0;
  int height = 0;
  // 0 = background; components numbered from 1 in raster-scan order of their
  // first pixel.
  std::vector<int> labels;
  // sizes[i] is the pixel count of component i + 1.
  std::vector<std::size_t> sizes;

  int label(int x, int y) const { return labels[static_cast<std::size_t>(y) * width + x]; }
  Mask component_mask(int label) const;
};

// 4-connected labelling of the set cells.
Components label_components(const Mask& mask);

// The largest 4-connected component (first in scan order on ties); empty
// mask when nothing is set.
Mask largest_component(const Mask& mask);

// Marching-squares boundaries of the set cells, sampled at pixel centers with
// iso level 0.5 and 4-connectivity for set cells. Vertices lie on half-pixel
// positions. Outer boundaries run counter-clockwise as displayed (negative
// signed_area), holes clockwise. Collinear vertices are dropped.
std::vector<Ring> trace_contours(const Mask& mask);

}  // namespace typeblend
