#include "typeblend/contour.hpp"

#include <array>
#include <cstdint>
#include <unordered_map>

namespace typeblend {

Mask Components::component_mask(int which) const {
  Mask m(width, height);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x)
      if (label(x, y) == which) m.set(x, y, true);
  return m;
}

Components label_components(const Mask& mask) {
  Components c;
  c.width = mask.width();
  c.height = mask.height();
  c.labels.assign(static_cast<std::size_t>(c.width) * c.height, 0);
  std::vector<std::pair<int, int>> stack;
  int next = 0;
  for (int y = 0; y < c.height; ++y) {
    for (int x = 0; x < c.width; ++x) {
      if (!mask.get(x, y) || c.label(x, y) != 0) continue;
      ++next;
      std::size_t size = 0;
      stack.push_back({x, y});
      c.labels[static_cast<std::size_t>(y) * c.width + x] = next;
      while (!stack.empty()) {
        const auto [px, py] = stack.back();
        stack.pop_back();
        ++size;
        static constexpr std::array<std::pair<int, int>, 4> kNeighbours{{{1, 0}, {-1, 0}, {0, 1}, {0, -1}}};
        for (auto [dx, dy] : kNeighbours) {
          const int nx = px + dx;
          const int ny = py + dy;
          if (!mask.get_or_false(nx, ny)) continue;
          auto& l = c.labels[static_cast<std::size_t>(ny) * c.width + nx];
          if (l != 0) continue;
          l = next;
          stack.push_back({nx, ny});
        }
      }
      c.sizes.push_back(size);
    }
  }
  return c;
}

Mask largest_component(const Mask& mask) {
  const auto comps = label_components(mask);
  if (comps.sizes.empty()) return Mask(mask.width(), mask.height());
  std::size_t best = 0;
  for (std::size_t i = 1; i < comps.sizes.size(); ++i)
    if (comps.sizes[i] > comps.sizes[best]) best = i;
  return comps.component_mask(static_cast<int>(best) + 1);
}

namespace {

// Boundary points live on a half-pixel lattice; doubled coordinates are exact.
struct Key {
  int x2;
  int y2;
  bool operator==(const Key&) const = default;
};

struct KeyHash {
  std::size_t operator()(const Key& k) const noexcept {
    return std::hash<std::int64_t>{}((static_cast<std::int64_t>(k.x2) << 32) ^ static_cast<std::uint32_t>(k.y2));
  }
};

Vec2 to_point(Key k) { return {k.x2 * 0.5, k.y2 * 0.5}; }

}  // namespace

std::vector<Ring> trace_contours(const Mask& mask) {
  const int w = mask.width();
  const int h = mask.height();
  std::unordered_map<Key, Key, KeyHash> next;  // segment start -> end
  std::vector<Key> starts;

  auto emit = [&](Key a, Key b) {
    next.emplace(a, b);
    starts.push_back(a);
  };

  for (int cy = -1; cy < h; ++cy) {
    for (int cx = -1; cx < w; ++cx) {
      // Corners: TL (cx,cy), TR (cx+1,cy), BR (cx+1,cy+1), BL (cx,cy+1).
      const bool tl = mask.get_or_false(cx, cy);
      const bool tr = mask.get_or_false(cx + 1, cy);
      const bool br = mask.get_or_false(cx + 1, cy + 1);
      const bool bl = mask.get_or_false(cx, cy + 1);
      const int n = tl + tr + br + bl;
      if (n == 0 || n == 4) continue;

      // Edge midpoints in doubled coordinates (pixel centers sit at 2x+1).
      const Key top{2 * cx + 2, 2 * cy + 1};
      const Key right{2 * cx + 3, 2 * cy + 2};
      const Key bottom{2 * cx + 2, 2 * cy + 3};
      const Key left{2 * cx + 1, 2 * cy + 2};

      // Each segment is directed with the set region on its left as
      // displayed, which makes outer boundaries counter-clockwise.
      if (tl && br && !tr && !bl) {
        emit(left, top);
        emit(right, bottom);
        continue;
      }
      if (tr && bl && !tl && !br) {
        emit(top, right);
        emit(bottom, left);
        continue;
      }
      const int code = (tl << 3) | (tr << 2) | (br << 1) | static_cast<int>(bl);
      switch (code) {
        case 8: emit(left, top); break;    // TL
        case 4: emit(top, right); break;   // TR
        case 2: emit(right, bottom); break;  // BR
        case 1: emit(bottom, left); break;   // BL
        case 12: emit(left, right); break;   // TL TR
        case 6: emit(top, bottom); break;    // TR BR
        case 3: emit(right, left); break;    // BR BL
        case 9: emit(bottom, top); break;    // BL TL
        case 14: emit(left, bottom); break;  // all but BL
        case 13: emit(bottom, right); break; // all but BR
        case 11: emit(right, top); break;    // all but TR
        case 7: emit(top, left); break;      // all but TL
        default: break;
      }
    }
  }

  std::vector<Ring> rings;
  std::unordered_map<Key, bool, KeyHash> used;
  for (const Key s : starts) {
    if (used[s]) continue;
    std::vector<Key> chain;
    Key cur = s;
    while (!used[cur]) {
      used[cur] = true;
      chain.push_back(cur);
      cur = next.at(cur);
    }
    // Drop collinear vertices.
    Ring ring;
    const std::size_t m = chain.size();
    for (std::size_t i = 0; i < m; ++i) {
      const Key p = chain[(i + m - 1) % m];
      const Key c = chain[i];
      const Key q = chain[(i + 1) % m];
      const long long cr = static_cast<long long>(c.x2 - p.x2) * (q.y2 - c.y2) -
                           static_cast<long long>(c.y2 - p.y2) * (q.x2 - c.x2);
      if (cr != 0) ring.push_back(to_point(c));
    }
    if (ring.size() >= 3) rings.push_back(std::move(ring));
  }
  return rings;
}

}  // namespace typeblend
