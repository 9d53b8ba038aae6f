#include "typeblend/glyph.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>

#include "typeblend/contour.hpp"
#include "typeblend/error.hpp"

namespace typeblend::glyph {

namespace {

std::uint16_t u16(std::span<const std::uint8_t> b, std::size_t off) {
  if (off + 2 > b.size()) throw Error(ErrorCode::invalid_input, "truncated font data");
  return static_cast<std::uint16_t>((b[off] << 8) | b[off + 1]);
}
std::int16_t i16(std::span<const std::uint8_t> b, std::size_t off) { return static_cast<std::int16_t>(u16(b, off)); }
std::uint32_t u32(std::span<const std::uint8_t> b, std::size_t off) {
  return (static_cast<std::uint32_t>(u16(b, off)) << 16) | u16(b, off + 2);
}

constexpr int kMaxCompositeDepth = 8;

}  // namespace

Font Font::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io_error, "cannot open font " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return from_bytes(std::move(bytes), path.stem().string());
}

Font Font::from_bytes(std::vector<std::uint8_t> bytes, std::string name) {
  Font f;
  f.bytes_ = std::move(bytes);
  f.name_ = std::move(name);
  f.parse();
  return f;
}

std::span<const std::uint8_t> Font::table(const char tag[4]) const {
  const auto it = tables_.find(std::string(tag, 4));
  if (it == tables_.end()) throw Error(ErrorCode::invalid_input, "font " + name_ + " lacks table " + std::string(tag, 4));
  const auto [off, len] = it->second;
  if (static_cast<std::size_t>(off) + len > bytes_.size()) throw Error(ErrorCode::invalid_input, "font table out of range");
  return std::span<const std::uint8_t>(bytes_).subspan(off, len);
}

void Font::parse() {
  const std::span<const std::uint8_t> b = bytes_;
  const std::uint32_t version = u32(b, 0);
  if (version != 0x00010000 && version != 0x74727565)
    throw Error(ErrorCode::invalid_input, "font " + name_ + " is not a TrueType outline font");
  const int num_tables = u16(b, 4);
  for (int i = 0; i < num_tables; ++i) {
    const std::size_t rec = 12 + 16 * static_cast<std::size_t>(i);
    if (rec + 16 > b.size()) throw Error(ErrorCode::invalid_input, "truncated font table directory");
    std::string tag(reinterpret_cast<const char*>(&b[rec]), 4);
    tables_[tag] = {u32(b, rec + 8), u32(b, rec + 12)};
  }
  if (!tables_.contains("glyf")) throw Error(ErrorCode::invalid_input, "font " + name_ + " has no glyf outlines");

  const auto head = table("head");
  units_per_em_ = u16(head, 18);
  long_loca_ = i16(head, 50);
  glyph_count_ = u16(table("maxp"), 4);
  h_metrics_ = u16(table("hhea"), 34);

  const auto cmap = table("cmap");
  const std::uint32_t cmap_base = tables_.at("cmap").first;
  const int subtables = u16(cmap, 2);
  int best_rank = 0;
  for (int i = 0; i < subtables; ++i) {
    const std::size_t rec = 4 + 8 * static_cast<std::size_t>(i);
    const int platform = u16(cmap, rec);
    const int encoding = u16(cmap, rec + 2);
    const std::uint32_t off = u32(cmap, rec + 4);
    const int format = u16(cmap, off);
    const bool unicode = platform == 0 || (platform == 3 && (encoding == 1 || encoding == 10));
    if (!unicode) continue;
    const int rank = format == 12 ? 2 : format == 4 ? 1 : 0;
    if (rank > best_rank) {
      best_rank = rank;
      cmap_offset_ = cmap_base + off;
      cmap_format_ = format;
    }
  }
  if (best_rank == 0) throw Error(ErrorCode::invalid_input, "font " + name_ + " has no Unicode cmap");
}

std::uint32_t Font::glyph_index(char32_t cp) const {
  const std::span<const std::uint8_t> b = bytes_;
  const std::size_t t = cmap_offset_;
  if (cmap_format_ == 12) {
    const std::uint32_t groups = u32(b, t + 12);
    std::uint32_t lo = 0, hi = groups;
    while (lo < hi) {
      const std::uint32_t mid = (lo + hi) / 2;
      const std::size_t g = t + 16 + 12 * static_cast<std::size_t>(mid);
      const std::uint32_t start = u32(b, g);
      const std::uint32_t end = u32(b, g + 4);
      if (cp < start) {
        hi = mid;
      } else if (cp > end) {
        lo = mid + 1;
      } else {
        return u32(b, g + 8) + (cp - start);
      }
    }
    return 0;
  }
  // Format 4.
  if (cp > 0xffff) return 0;
  const int seg_count = u16(b, t + 6) / 2;
  const std::size_t end_codes = t + 14;
  const std::size_t start_codes = end_codes + 2 * static_cast<std::size_t>(seg_count) + 2;
  const std::size_t deltas = start_codes + 2 * static_cast<std::size_t>(seg_count);
  const std::size_t range_offsets = deltas + 2 * static_cast<std::size_t>(seg_count);
  for (int s = 0; s < seg_count; ++s) {
    const std::uint16_t end = u16(b, end_codes + 2 * s);
    if (cp > end) continue;
    const std::uint16_t start = u16(b, start_codes + 2 * s);
    if (cp < start) return 0;
    const std::uint16_t delta = u16(b, deltas + 2 * s);
    const std::uint16_t ro = u16(b, range_offsets + 2 * s);
    if (ro == 0) return static_cast<std::uint16_t>(cp + delta);
    const std::size_t addr = range_offsets + 2 * s + ro + 2 * (cp - start);
    const std::uint16_t g = u16(b, addr);
    return g == 0 ? 0 : static_cast<std::uint16_t>(g + delta);
  }
  return 0;
}

int Font::advance(std::uint32_t glyph) const {
  const auto hmtx = table("hmtx");
  const std::uint32_t idx = std::min<std::uint32_t>(glyph, static_cast<std::uint32_t>(h_metrics_ - 1));
  return u16(hmtx, 4 * static_cast<std::size_t>(idx));
}

GlyphOutline Font::outline(std::uint32_t glyph) const {
  GlyphOutline out;
  const double identity[6] = {1, 0, 0, 1, 0, 0};
  append_outline(glyph, out, identity, 0);
  out.advance = advance(glyph);
  return out;
}

void Font::append_outline(std::uint32_t glyph, GlyphOutline& out, const double m[6], int depth) const {
  if (depth > kMaxCompositeDepth) throw Error(ErrorCode::invalid_input, "composite glyph nesting too deep");
  if (glyph >= static_cast<std::uint32_t>(glyph_count_)) return;
  const auto loca = table("loca");
  std::uint32_t start, end;
  if (long_loca_) {
    start = u32(loca, 4 * static_cast<std::size_t>(glyph));
    end = u32(loca, 4 * static_cast<std::size_t>(glyph) + 4);
  } else {
    start = 2u * u16(loca, 2 * static_cast<std::size_t>(glyph));
    end = 2u * u16(loca, 2 * static_cast<std::size_t>(glyph) + 2);
  }
  if (end <= start) return;  // empty glyph (e.g. space)
  const auto glyf = table("glyf").subspan(start, end - start);

  auto apply = [&](double x, double y) {
    return std::pair{m[0] * x + m[2] * y + m[4], m[1] * x + m[3] * y + m[5]};
  };

  const int contours = i16(glyf, 0);
  if (contours >= 0) {
    std::vector<int> ends(contours);
    for (int c = 0; c < contours; ++c) ends[c] = u16(glyf, 10 + 2 * c);
    const int n_points = contours > 0 ? ends.back() + 1 : 0;
    std::size_t p = 10 + 2 * static_cast<std::size_t>(contours);
    const int ins_len = u16(glyf, p);
    p += 2 + ins_len;

    std::vector<std::uint8_t> flags;
    flags.reserve(n_points);
    while (static_cast<int>(flags.size()) < n_points) {
      if (p >= glyf.size()) throw Error(ErrorCode::invalid_input, "truncated glyph flags");
      const std::uint8_t f = glyf[p++];
      flags.push_back(f);
      if (f & 8) {
        if (p >= glyf.size()) throw Error(ErrorCode::invalid_input, "truncated glyph flags");
        int repeat = glyf[p++];
        while (repeat-- > 0 && static_cast<int>(flags.size()) < n_points) flags.push_back(f);
      }
    }
    std::vector<int> xs(n_points), ys(n_points);
    int acc = 0;
    for (int i = 0; i < n_points; ++i) {
      const auto f = flags[i];
      if (f & 2) {
        const int d = glyf[p++];
        acc += (f & 16) ? d : -d;
      } else if (!(f & 16)) {
        acc += i16(glyf, p);
        p += 2;
      }
      xs[i] = acc;
    }
    acc = 0;
    for (int i = 0; i < n_points; ++i) {
      const auto f = flags[i];
      if (f & 4) {
        const int d = glyf[p++];
        acc += (f & 32) ? d : -d;
      } else if (!(f & 32)) {
        acc += i16(glyf, p);
        p += 2;
      }
      ys[i] = acc;
    }
    int first = 0;
    for (int c = 0; c < contours; ++c) {
      std::vector<GlyphOutline::Point> contour;
      for (int i = first; i <= ends[c]; ++i) {
        const auto [x, y] = apply(xs[i], ys[i]);
        contour.push_back({x, y, (flags[i] & 1) != 0});
      }
      first = ends[c] + 1;
      if (contour.size() >= 2) out.contours.push_back(std::move(contour));
    }
    return;
  }

  // Composite glyph.
  std::size_t p = 10;
  for (;;) {
    const std::uint16_t flags = u16(glyf, p);
    const std::uint16_t component = u16(glyf, p + 2);
    p += 4;
    double dx = 0, dy = 0;
    if (flags & 1) {
      dx = (flags & 2) ? i16(glyf, p) : u16(glyf, p);
      dy = (flags & 2) ? i16(glyf, p + 2) : u16(glyf, p + 2);
      p += 4;
    } else {
      dx = (flags & 2) ? static_cast<std::int8_t>(glyf[p]) : glyf[p];
      dy = (flags & 2) ? static_cast<std::int8_t>(glyf[p + 1]) : glyf[p + 1];
      p += 2;
    }
    if (!(flags & 2)) dx = dy = 0;  // point matching is not supported
    double a = 1, bb = 0, c = 0, d = 1;
    auto f2dot14 = [&](std::size_t off) { return i16(glyf, off) / 16384.0; };
    if (flags & 8) {
      a = d = f2dot14(p);
      p += 2;
    } else if (flags & 0x40) {
      a = f2dot14(p);
      d = f2dot14(p + 2);
      p += 4;
    } else if (flags & 0x80) {
      a = f2dot14(p);
      bb = f2dot14(p + 2);
      c = f2dot14(p + 4);
      d = f2dot14(p + 6);
      p += 8;
    }
    // Compose parent transform with the component transform.
    const double local[6] = {a, bb, c, d, dx, dy};
    const double combined[6] = {
        m[0] * local[0] + m[2] * local[1],
        m[1] * local[0] + m[3] * local[1],
        m[0] * local[2] + m[2] * local[3],
        m[1] * local[2] + m[3] * local[3],
        m[0] * local[4] + m[2] * local[5] + m[4],
        m[1] * local[4] + m[3] * local[5] + m[5],
    };
    append_outline(component, out, combined, depth + 1);
    if (!(flags & 0x20)) break;
  }
}

FontLibrary::FontLibrary(const std::filesystem::path& directory) {
  std::error_code ec;
  if (!std::filesystem::is_directory(directory, ec))
    throw Error(ErrorCode::io_error, "fonts directory not found: " + directory.string());
  for (const auto& entry : std::filesystem::directory_iterator(directory)) {
    if (!entry.is_regular_file()) continue;
    auto ext = entry.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char ch) { return std::tolower(ch); });
    if (ext != ".ttf") continue;
    fonts_.emplace(entry.path().stem().string(), std::make_shared<const Font>(Font::load(entry.path())));
  }
}

std::vector<std::string> FontLibrary::available() const {
  std::vector<std::string> ids;
  for (const auto& [id, _] : fonts_) ids.push_back(id);
  return ids;
}

const Font& FontLibrary::get(std::string_view font_id) const {
  const auto it = fonts_.find(font_id);
  if (it == fonts_.end()) {
    std::string list;
    for (const auto& id : available()) list += (list.empty() ? "" : ", ") + id;
    throw Error(ErrorCode::unknown_font, "unknown font '" + std::string(font_id) + "'; available: " + list);
  }
  return *it->second;
}

std::string_view to_string(Granularity g) {
  switch (g) {
    case Granularity::stroke: return "stroke";
    case Granularity::letter: return "letter";
    case Granularity::multi_letter: return "multi_letter";
  }
  return "stroke";
}

std::string_view to_string(Mapping m) {
  switch (m) {
    case Mapping::one_to_one: return "one_to_one";
    case Mapping::one_to_many: return "one_to_many";
    case Mapping::many_to_one: return "many_to_one";
  }
  return "one_to_one";
}

Granularity granularity_from_string(std::string_view s) {
  if (s == "stroke") return Granularity::stroke;
  if (s == "letter") return Granularity::letter;
  if (s == "multi_letter") return Granularity::multi_letter;
  throw Error(ErrorCode::invalid_argument, "unknown granularity '" + std::string(s) + "'");
}

Mapping mapping_from_string(std::string_view s) {
  if (s == "one_to_one") return Mapping::one_to_one;
  if (s == "one_to_many") return Mapping::one_to_many;
  if (s == "many_to_one") return Mapping::many_to_one;
  throw Error(ErrorCode::invalid_argument, "unknown mapping '" + std::string(s) + "'");
}

std::u32string decode_utf8(std::string_view text) {
  std::u32string out;
  for (std::size_t i = 0; i < text.size();) {
    const auto c = static_cast<unsigned char>(text[i]);
    int len = 0;
    char32_t cp = 0;
    if (c < 0x80) {
      cp = c;
      len = 1;
    } else if ((c >> 5) == 0x6) {
      cp = c & 0x1f;
      len = 2;
    } else if ((c >> 4) == 0xe) {
      cp = c & 0x0f;
      len = 3;
    } else if ((c >> 3) == 0x1e) {
      cp = c & 0x07;
      len = 4;
    } else {
      throw Error(ErrorCode::invalid_input, "invalid UTF-8 text");
    }
    if (i + len > text.size()) throw Error(ErrorCode::invalid_input, "truncated UTF-8 text");
    for (int k = 1; k < len; ++k) {
      const auto cc = static_cast<unsigned char>(text[i + k]);
      if ((cc >> 6) != 0x2) throw Error(ErrorCode::invalid_input, "invalid UTF-8 text");
      cp = (cp << 6) | (cc & 0x3f);
    }
    out.push_back(cp);
    i += len;
  }
  return out;
}

namespace {

bool is_space(char32_t cp) { return cp == U' ' || cp == U'\t' || cp == U'\n' || cp == U'\r' || cp == 0x3000; }

constexpr double kFlattenTolerance = 0.1;  // px
constexpr int kSupersample = 4;

// Quadratic contour (in canvas pixels) to a polyline.
Ring flatten(const std::vector<GlyphOutline::Point>& pts) {
  const std::size_t n = pts.size();
  // Expand implied on-curve points between consecutive off-curve points.
  std::vector<GlyphOutline::Point> seq;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& p = pts[i];
    const auto& q = pts[(i + 1) % n];
    seq.push_back(p);
    if (!p.on_curve && !q.on_curve) seq.push_back({(p.x + q.x) / 2, (p.y + q.y) / 2, true});
  }
  std::size_t start = 0;
  while (start < seq.size() && !seq[start].on_curve) ++start;
  if (start == seq.size()) return {};
  std::rotate(seq.begin(), seq.begin() + static_cast<long>(start), seq.end());

  Ring ring;
  const std::size_t m = seq.size();
  Vec2 cur{seq[0].x, seq[0].y};
  ring.push_back(cur);
  for (std::size_t i = 1; i <= m; ++i) {
    const auto& p = seq[i % m];
    if (p.on_curve) {
      cur = {p.x, p.y};
      if (i < m) ring.push_back(cur);
      continue;
    }
    const auto& e = seq[(i + 1) % m];
    const Vec2 c{p.x, p.y};
    const Vec2 end{e.x, e.y};
    const double dd = norm(cur - c * 2.0 + end);
    const int steps = std::max(1, static_cast<int>(std::ceil(std::sqrt(dd / (4.0 * kFlattenTolerance)))));
    for (int s = 1; s <= steps; ++s) {
      const double t = static_cast<double>(s) / steps;
      const double u = 1.0 - t;
      const Vec2 q = cur * (u * u) + c * (2 * u * t) + end * (t * t);
      if (!(s == steps && i + 1 >= m)) ring.push_back(q);
    }
    cur = end;
    ++i;  // consumed the end point
  }
  // Remove consecutive duplicates, including the closing point.
  Ring clean;
  for (const auto& p : ring)
    if (clean.empty() || distance(clean.back(), p) > 1e-9) clean.push_back(p);
  while (clean.size() > 1 && distance(clean.front(), clean.back()) <= 1e-9) clean.pop_back();
  return clean;
}

Rect pixel_bounds(const std::vector<int>& cov, int size, int threshold) {
  Mask m(size, size);
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x) m.set(x, y, cov[static_cast<std::size_t>(y) * size + x] >= threshold);
  return m.bounds();
}

}  // namespace

RenderedTypeface render_typeface(std::string_view text, std::string_view font_id, int canvas_size,
                                 const FontLibrary& fonts) {
  return render_typeface(text, fonts.get(font_id), font_id, canvas_size);
}

RenderedTypeface render_typeface(std::string_view text, const Font& font, std::string_view font_id,
                                 int canvas_size) {
  if (canvas_size <= 0) throw Error(ErrorCode::invalid_argument, "canvas size must be positive");
  const auto cps = decode_utf8(text);
  if (std::all_of(cps.begin(), cps.end(), is_space)) throw Error(ErrorCode::empty_text, "text is empty");

  struct Placed {
    GlyphOutline outline;
    double pen = 0;
  };
  std::vector<Placed> placed;
  double pen = 0;
  double xmin = std::numeric_limits<double>::infinity(), ymin = xmin;
  double xmax = -xmin, ymax = -xmin;
  for (char32_t cp : cps) {
    const auto g = font.glyph_index(cp);
    if (g == 0 && !is_space(cp)) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "U+%04X", static_cast<unsigned>(cp));
      throw Error(ErrorCode::invalid_input, "font " + font.name() + " has no glyph for " + buf);
    }
    auto outline = font.outline(g);
    for (const auto& c : outline.contours)
      for (const auto& p : c) {
        xmin = std::min(xmin, p.x + pen);
        xmax = std::max(xmax, p.x + pen);
        ymin = std::min(ymin, p.y);
        ymax = std::max(ymax, p.y);
      }
    const double adv = outline.advance;
    if (!outline.contours.empty()) placed.push_back({std::move(outline), pen});
    pen += adv;
  }
  if (placed.empty()) throw Error(ErrorCode::empty_text, "text has no visible glyphs");

  const double extent = std::max(xmax - xmin, ymax - ymin);
  const double scale = canvas_size * (1.0 - 2.0 * kCanvasMargin) / extent;
  const double cx = (xmin + xmax) / 2;
  const double cy = (ymin + ymax) / 2;
  const double half = canvas_size / 2.0;

  RenderedTypeface tf;
  tf.text = std::string(text);
  tf.font_id = std::string(font_id);
  std::vector<std::vector<Ring>> per_glyph;
  for (const auto& pg : placed) {
    std::vector<Ring> rings;
    for (const auto& contour : pg.outline.contours) {
      std::vector<GlyphOutline::Point> px;
      px.reserve(contour.size());
      for (const auto& p : contour)
        px.push_back({(p.x + pg.pen - cx) * scale + half, half - (p.y - cy) * scale, p.on_curve});
      auto ring = flatten(px);
      if (ring.size() >= 3 && std::abs(signed_area(ring)) > 1e-6) rings.push_back(std::move(ring));
    }
    tf.outlines.insert(tf.outlines.end(), rings.begin(), rings.end());
    per_glyph.push_back(std::move(rings));
  }

  constexpr int full = kSupersample * kSupersample;
  const int threshold = full / 2 + 1;  // coverage > 0.5
  const auto cov = coverage(tf.outlines, canvas_size, canvas_size, kSupersample, FillRule::nonzero);
  tf.ink_mask = Mask(canvas_size, canvas_size);
  tf.canvas = Image(canvas_size, canvas_size, kWhite);
  for (int y = 0; y < canvas_size; ++y)
    for (int x = 0; x < canvas_size; ++x)
      if (cov[static_cast<std::size_t>(y) * canvas_size + x] >= threshold) {
        tf.ink_mask.set(x, y, true);
        tf.canvas.set(x, y, kBlack);
      }
  for (const auto& rings : per_glyph) {
    const auto gcov = coverage(rings, canvas_size, canvas_size, kSupersample, FillRule::nonzero);
    const Rect r = pixel_bounds(gcov, canvas_size, threshold);
    if (!r.empty()) tf.glyph_boxes.push_back(r);
  }
  return tf;
}

TypefaceSelection select_region(const RenderedTypeface& tf, std::span<const Rect> boxes, Mapping mapping) {
  const int w = tf.ink_mask.width();
  const int h = tf.ink_mask.height();
  if (boxes.empty()) throw Error(ErrorCode::invalid_argument, "at least one selection box is required");
  Mask region(w, h);
  for (const auto& b : boxes) {
    if (b.empty() || b.x0 < 0 || b.y0 < 0 || b.x1 > w || b.y1 > h)
      throw Error(ErrorCode::invalid_argument, "selection box outside the canvas");
    for (int y = b.y0; y < b.y1; ++y)
      for (int x = b.x0; x < b.x1; ++x) region.set(x, y, true);
  }
  TypefaceSelection sel;
  sel.source = tf;
  sel.boxes.assign(boxes.begin(), boxes.end());
  sel.selected_mask = tf.ink_mask & region;
  sel.remainder_mask = tf.ink_mask.minus(region);
  sel.mapping = mapping;
  if (!sel.selected_mask.any()) throw Error(ErrorCode::empty_selection, "selection contains no ink");

  int covered = 0;
  for (const auto& g : tf.glyph_boxes) {
    bool inside = true;
    for (int y = g.y0; y < g.y1 && inside; ++y)
      for (int x = g.x0; x < g.x1 && inside; ++x) inside = region.get(x, y);
    if (inside) ++covered;
  }
  sel.granularity = covered >= 2 ? Granularity::multi_letter : covered == 1 ? Granularity::letter : Granularity::stroke;
  return sel;
}

Image typeface_image(const TypefaceSelection& sel, Part part) {
  const Mask& m = part == Part::selected ? sel.selected_mask : sel.remainder_mask;
  if (!m.any())
    throw Error(ErrorCode::empty_selection,
                std::string("the ") + (part == Part::selected ? "selected" : "remainder") + " part has no ink");
  Image out(m.width(), m.height(), kWhite);
  for (int y = 0; y < m.height(); ++y)
    for (int x = 0; x < m.width(); ++x)
      if (m.get(x, y)) out.set(x, y, sel.source.canvas.rgb(x, y));
  return out;
}

Image composite(const Image& blended, const TypefaceSelection& sel) {
  if (!same_size(blended, sel.remainder_mask))
    throw Error(ErrorCode::invalid_argument, "blended image and typeface canvas differ in size");
  Image out = blended;
  for (int y = 0; y < out.height(); ++y)
    for (int x = 0; x < out.width(); ++x)
      if (sel.remainder_mask.get(x, y)) out.set(x, y, sel.source.canvas.rgb(x, y));
  return out;
}

std::vector<Ring> selection_outlines(const TypefaceSelection& sel) {
  std::vector<Ring> out;
  for (auto& ring : trace_contours(sel.selected_mask)) {
    auto s = simplify_ring(ring, 0.5);
    if (s.size() >= 3) out.push_back(std::move(s));
  }
  return out;
}

}  // namespace typeblend::glyph
