#include "typeblend/geometry.hpp"

#include <algorithm>
#include <limits>

namespace typeblend {

double signed_area(std::span<const Vec2> ring) {
  const std::size_t n = ring.size();
  if (n < 3) return 0.0;
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += cross(ring[i], ring[(i + 1) % n]);
  return acc * 0.5;
}

double perimeter(std::span<const Vec2> ring) {
  const std::size_t n = ring.size();
  if (n < 2) return 0.0;
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += distance(ring[i], ring[(i + 1) % n]);
  return acc;
}

Vec2 area_centroid(std::span<const Ring> rings) {
  double area = 0.0;
  Vec2 moment;
  std::size_t count = 0;
  Vec2 mean;
  for (const auto& ring : rings) {
    const std::size_t n = ring.size();
    for (std::size_t i = 0; i < n; ++i) {
      const Vec2 p = ring[i];
      const Vec2 q = ring[(i + 1) % n];
      const double c = cross(p, q);
      area += c * 0.5;
      moment += (p + q) * (c / 6.0);
      mean += p;
      ++count;
    }
  }
  if (std::abs(area) > 1e-12) return moment * (1.0 / area);
  if (count == 0) return {};
  return mean * (1.0 / static_cast<double>(count));
}

Box2 bounding_box(std::span<const Vec2> points) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  Box2 b{{inf, inf}, {-inf, -inf}};
  for (auto p : points) {
    b.min.x = std::min(b.min.x, p.x);
    b.min.y = std::min(b.min.y, p.y);
    b.max.x = std::max(b.max.x, p.x);
    b.max.y = std::max(b.max.y, p.y);
  }
  return b;
}

Box2 bounding_box(std::span<const Ring> rings) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  Box2 b{{inf, inf}, {-inf, -inf}};
  for (const auto& r : rings) {
    const auto rb = bounding_box(std::span<const Vec2>(r));
    b.min.x = std::min(b.min.x, rb.min.x);
    b.min.y = std::min(b.min.y, rb.min.y);
    b.max.x = std::max(b.max.x, rb.max.x);
    b.max.y = std::max(b.max.y, rb.max.y);
  }
  return b;
}

namespace {

int orientation(Vec2 a, Vec2 b, Vec2 c) {
  const double v = cross(b - a, c - a);
  constexpr double eps = 1e-12;
  if (v > eps) return 1;
  if (v < -eps) return -1;
  return 0;
}

bool on_segment(Vec2 a, Vec2 b, Vec2 p) {
  return std::min(a.x, b.x) - 1e-12 <= p.x && p.x <= std::max(a.x, b.x) + 1e-12 &&
         std::min(a.y, b.y) - 1e-12 <= p.y && p.y <= std::max(a.y, b.y) + 1e-12;
}

}  // namespace

bool segments_intersect(Vec2 a, Vec2 b, Vec2 c, Vec2 d) {
  const int o1 = orientation(a, b, c);
  const int o2 = orientation(a, b, d);
  const int o3 = orientation(c, d, a);
  const int o4 = orientation(c, d, b);
  if (o1 != o2 && o3 != o4) return true;
  if (o1 == 0 && on_segment(a, b, c)) return true;
  if (o2 == 0 && on_segment(a, b, d)) return true;
  if (o3 == 0 && on_segment(c, d, a)) return true;
  if (o4 == 0 && on_segment(c, d, b)) return true;
  return false;
}

bool self_intersects(std::span<const Ring> rings) {
  struct Edge {
    Vec2 a, b;
    std::size_t ring, index, ring_size;
  };
  std::vector<Edge> edges;
  for (std::size_t r = 0; r < rings.size(); ++r) {
    const auto& ring = rings[r];
    for (std::size_t i = 0; i < ring.size(); ++i)
      edges.push_back({ring[i], ring[(i + 1) % ring.size()], r, i, ring.size()});
  }
  // Sweep on x to skip distant pairs.
  std::sort(edges.begin(), edges.end(),
            [](const Edge& e, const Edge& f) { return std::min(e.a.x, e.b.x) < std::min(f.a.x, f.b.x); });
  for (std::size_t i = 0; i < edges.size(); ++i) {
    const auto& e = edges[i];
    const double e_max = std::max(e.a.x, e.b.x);
    for (std::size_t j = i + 1; j < edges.size(); ++j) {
      const auto& f = edges[j];
      if (std::min(f.a.x, f.b.x) > e_max + 1e-12) break;
      if (e.ring == f.ring) {
        const std::size_t n = e.ring_size;
        const bool adjacent = (e.index + 1) % n == f.index || (f.index + 1) % n == e.index;
        if (adjacent) continue;
      }
      if (segments_intersect(e.a, e.b, f.a, f.b)) return true;
    }
  }
  return false;
}

namespace {

double point_segment_distance(Vec2 p, Vec2 a, Vec2 b) {
  const Vec2 ab = b - a;
  const double len2 = dot(ab, ab);
  if (len2 == 0.0) return distance(p, a);
  const double t = std::clamp(dot(p - a, ab) / len2, 0.0, 1.0);
  return distance(p, a + ab * t);
}

void douglas_peucker(std::span<const Vec2> pts, std::size_t first, std::size_t last, double tol,
                     std::vector<bool>& keep) {
  if (last <= first + 1) return;
  double best = -1.0;
  std::size_t index = first;
  for (std::size_t i = first + 1; i < last; ++i) {
    const double d = point_segment_distance(pts[i], pts[first], pts[last]);
    if (d > best) {
      best = d;
      index = i;
    }
  }
  if (best > tol) {
    keep[index] = true;
    douglas_peucker(pts, first, index, tol, keep);
    douglas_peucker(pts, index, last, tol, keep);
  }
}

}  // namespace

Ring simplify_ring(std::span<const Vec2> ring, double tolerance) {
  const std::size_t n = ring.size();
  if (n <= 3) return Ring(ring.begin(), ring.end());
  // Anchor the split at vertex 0 and the vertex farthest from it so the
  // result does not depend on a degenerate chord.
  std::size_t far = 0;
  double far_d = -1.0;
  for (std::size_t i = 1; i < n; ++i) {
    const double d = distance(ring[0], ring[i]);
    if (d > far_d) {
      far_d = d;
      far = i;
    }
  }
  std::vector<Vec2> closed(ring.begin(), ring.end());
  closed.push_back(ring[0]);
  std::vector<bool> keep(n + 1, false);
  keep[0] = keep[far] = keep[n] = true;
  douglas_peucker(closed, 0, far, tolerance, keep);
  douglas_peucker(closed, far, n, tolerance, keep);
  Ring out;
  for (std::size_t i = 0; i < n; ++i)
    if (keep[i]) out.push_back(ring[i]);
  if (out.size() < 3) {
    // Keep the vertex farthest from the chord between the two anchors.
    std::size_t best = 0;
    double best_d = -1.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (i == 0 || i == far) continue;
      const double d = point_segment_distance(ring[i], ring[0], ring[far]);
      if (d > best_d) {
        best_d = d;
        best = i;
      }
    }
    out.clear();
    for (std::size_t i = 0; i < n; ++i)
      if (i == 0 || i == far || i == best) out.push_back(ring[i]);
  }
  return out;
}

std::vector<int> coverage(std::span<const Ring> rings, int width, int height, int samples, FillRule rule) {
  std::vector<int> cov(static_cast<std::size_t>(std::max(width, 0)) * std::max(height, 0), 0);
  if (width <= 0 || height <= 0 || samples <= 0) return cov;

  struct Edge {
    Vec2 a, b;
    int winding;
  };
  std::vector<Edge> edges;
  for (const auto& ring : rings) {
    const std::size_t n = ring.size();
    if (n < 3) continue;
    for (std::size_t i = 0; i < n; ++i) {
      Vec2 a = ring[i];
      Vec2 b = ring[(i + 1) % n];
      if (a.y == b.y) continue;
      int w = 1;
      if (a.y > b.y) {
        std::swap(a, b);
        w = -1;
      }
      edges.push_back({a, b, w});
    }
  }

  std::vector<std::pair<double, int>> xs;
  for (int y = 0; y < height; ++y) {
    for (int sy = 0; sy < samples; ++sy) {
      const double py = y + (sy + 0.5) / samples;
      xs.clear();
      for (const auto& e : edges) {
        // Half-open in y so shared vertices count once.
        if (py < e.a.y || py >= e.b.y) continue;
        const double t = (py - e.a.y) / (e.b.y - e.a.y);
        xs.emplace_back(e.a.x + t * (e.b.x - e.a.x), e.winding);
      }
      if (xs.empty()) continue;
      std::sort(xs.begin(), xs.end());
      int wind = 0;
      for (std::size_t k = 0; k + 1 < xs.size(); ++k) {
        wind = rule == FillRule::even_odd ? (wind ^ 1) : wind + xs[k].second;
        if (wind == 0) continue;
        const double x_lo = xs[k].first;
        const double x_hi = xs[k + 1].first;
        // Sample points px = x + (sx + 0.5) / samples inside [x_lo, x_hi).
        const double s_lo = x_lo * samples - 0.5;
        const double s_hi = x_hi * samples - 0.5;
        long first = static_cast<long>(std::ceil(s_lo));
        long last = static_cast<long>(std::ceil(s_hi)) - 1;
        first = std::max(first, 0L);
        last = std::min(last, static_cast<long>(width) * samples - 1);
        for (long s = first; s <= last; ++s) ++cov[static_cast<std::size_t>(y) * width + s / samples];
      }
    }
  }
  return cov;
}

Mask rasterize(std::span<const Ring> rings, int width, int height, FillRule rule) {
  const auto cov = coverage(rings, width, height, 1, rule);
  Mask m(width, height);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) m.set(x, y, cov[static_cast<std::size_t>(y) * width + x] > 0);
  return m;
}

}  // namespace typeblend
