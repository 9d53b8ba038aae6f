#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "typeblend/image.hpp"

namespace typeblend {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
  Vec2 operator*(double s) const { return {x * s, y * s}; }
  friend Vec2 operator*(double s, Vec2 v) { return v * s; }
  Vec2& operator+=(Vec2 o) {
    x += o.x;
    y += o.y;
    return *this;
  }
  friend bool operator==(const Vec2&, const Vec2&) = default;
};

inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Vec2 a) { return std::hypot(a.x, a.y); }
inline double distance(Vec2 a, Vec2 b) { return norm(a - b); }

// A closed polygon ring; the closing edge from back() to front() is implicit.
using Ring = std::vector<Vec2>;

struct Box2 {
  Vec2 min;
  Vec2 max;
  double width() const { return max.x - min.x; }
  double height() const { return max.y - min.y; }
  Vec2 center() const { return (min + max) * 0.5; }
};

// Shoelace area in image coordinates (y axis down). Negative values mean the
// ring runs counter-clockwise as displayed.
double signed_area(std::span<const Vec2> ring);
double perimeter(std::span<const Vec2> ring);
// Area centroid of a set of rings with their natural signs (holes subtract
// when oriented opposite to their outer ring). Falls back to the vertex mean
// for degenerate input.
Vec2 area_centroid(std::span<const Ring> rings);
Box2 bounding_box(std::span<const Ring> rings);
Box2 bounding_box(std::span<const Vec2> points);

bool segments_intersect(Vec2 a, Vec2 b, Vec2 c, Vec2 d);
// True when any two non-adjacent edges of any ring (or edges of different
// rings) cross or touch.
bool self_intersects(std::span<const Ring> rings);

// Douglas-Peucker on a closed ring. Keeps at least three vertices.
Ring simplify_ring(std::span<const Vec2> ring, double tolerance);

enum class FillRule { even_odd, nonzero };

// Point-sampled rasterization at pixel centers (x + 0.5, y + 0.5).
Mask rasterize(std::span<const Ring> rings, int width, int height, FillRule rule = FillRule::even_odd);

// Per-pixel coverage in [0, samples^2] using a samples x samples grid of
// sub-pixel sample points.
std::vector<int> coverage(std::span<const Ring> rings, int width, int height, int samples, FillRule rule);

}  // namespace typeblend
