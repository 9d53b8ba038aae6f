#pragma once

#include <array>
#include <filesystem>
#include <cmath>
#include <random>
#include <utility>
#include <vector>

#include "typeblend/backends.hpp"
#include "typeblend/geometry.hpp"
#include "typeblend/glyph.hpp"
#include "typeblend/image.hpp"

namespace tbtest {

using namespace typeblend;

inline std::filesystem::path data_dir() { return TYPEBLEND_DATA_DIR; }
inline std::filesystem::path tests_dir() { return TYPEBLEND_TESTS_DIR; }
inline std::filesystem::path fonts_dir() { return data_dir() / "fonts"; }

inline const glyph::FontLibrary& fonts() {
  static const glyph::FontLibrary lib(fonts_dir());
  return lib;
}

inline const backends::MockFixtures& fixtures() {
  static const auto f = backends::MockFixtures::load(data_dir() / "mock_fixtures.json");
  return f;
}

// Pixel centers within r of (cx, cy).
inline bool in_disk(int x, int y, double cx, double cy, double r) {
  const double dx = x + 0.5 - cx, dy = y + 0.5 - cy;
  return dx * dx + dy * dy <= r * r;
}

inline Mask disk_mask(int w, int h, double cx, double cy, double r) {
  Mask m(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) m.set(x, y, in_disk(x, y, cx, cy, r));
  return m;
}

inline Image paint(const Mask& m, Rgb ink, Rgb bg = kWhite) {
  Image img(m.width(), m.height(), bg);
  for (int y = 0; y < m.height(); ++y)
    for (int x = 0; x < m.width(); ++x)
      if (m.get(x, y)) img.set(x, y, ink);
  return img;
}

inline Image disk_image(int w, int h, double cx, double cy, double r, Rgb ink = {220, 30, 30}, Rgb bg = kWhite) {
  return paint(disk_mask(w, h, cx, cy, r), ink, bg);
}

inline Mask rect_mask(int w, int h, Rect r) {
  Mask m(w, h);
  for (int y = r.y0; y < r.y1; ++y)
    for (int x = r.x0; x < r.x1; ++x) m.set(x, y, true);
  return m;
}

inline const std::array<Rgb, 5>& block_colors() {
  static const std::array<Rgb, 5> c = {Rgb{200, 30, 40}, Rgb{30, 160, 60}, Rgb{40, 60, 200}, Rgb{240, 210, 40},
                                       Rgb{20, 20, 20}};
  return c;
}

// Five vertical bands of uniform colour with unequal widths.
inline Image five_block_image(int w = 40, int h = 16) {
  Image img(w, h);
  const std::array<int, 6> edges = {0, w * 3 / 20, w * 6 / 20, w * 10 / 20, w * 15 / 20, w};
  for (int b = 0; b < 5; ++b)
    for (int y = 0; y < h; ++y)
      for (int x = edges[b]; x < edges[b + 1]; ++x) img.set(x, y, block_colors()[b]);
  return img;
}

inline constexpr Rgb kVaseYellow{232, 192, 48};
inline constexpr Rgb kFlowerPink{236, 120, 168};

// Yellow vase with pink flowers on white; the vase body is the largest region.
inline Image vase_image(int w = 160, int h = 160) {
  Image img(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const double fx = x + 0.5, fy = y + 0.5;
      const double ex = (fx - w * 0.5) / (w * 0.22), ey = (fy - h * 0.68) / (h * 0.24);
      const bool body = ex * ex + ey * ey <= 1.0;
      const bool neck = std::abs(fx - w * 0.5) <= w * 0.08 && fy >= h * 0.36 && fy <= h * 0.5;
      if (body || neck) img.set(x, y, kVaseYellow);
    }
  for (const auto& [cx, cy] : {std::pair{0.38, 0.22}, {0.5, 0.16}, {0.62, 0.24}})
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        if (in_disk(x, y, cx * w, cy * h, w * 0.07)) img.set(x, y, kFlowerPink);
  return img;
}

inline double max_abs_diff(const std::vector<Ring>& a, const std::vector<Ring>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < a[i].size(); ++j) m = std::max(m, distance(a[i][j], b[i][j]));
  return m;
}

}  // namespace tbtest
