#include "typeblend/priors.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <set>

#include <json.hpp>

#include "typeblend/contour.hpp"
#include "typeblend/error.hpp"

namespace typeblend::priors {

using backends::EmbeddingVector;

// ---------------------------------------------------------------------------
// Semantics

std::vector<StyleEntry> load_style_db(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io_error, "cannot open style database " + path.string());
  std::vector<StyleEntry> db;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      StyleEntry e{j.at("text").get<std::string>(), {j.at("embedding").get<std::vector<double>>()}};
      if (e.text.empty()) throw Error(ErrorCode::parse_error, "empty style text");
      db.push_back(std::move(e));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::parse_error,
                  "style database " + path.string() + " line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return db;
}

void save_style_db(std::span<const StyleEntry> entries, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::io_error, "cannot write " + path.string());
  for (const auto& e : entries) {
    nlohmann::json j = {{"text", e.text}, {"embedding", e.embedding.values}};
    out << j.dump() << '\n';
  }
}

const StyleEntry& best_style(const EmbeddingVector& query, std::span<const StyleEntry> db) {
  if (db.empty()) throw Error(ErrorCode::invalid_argument, "style database is empty");
  const StyleEntry* best = nullptr;
  double best_cos = -std::numeric_limits<double>::infinity();
  for (const auto& e : db) {
    const double c = backends::cosine(query, e.embedding);
    if (c > best_cos || (c == best_cos && e.text < best->text)) {
      best = &e;
      best_cos = c;
    }
  }
  return *best;
}

namespace {

const std::set<std::string, std::less<>>& stopwords() {
  static const std::set<std::string, std::less<>> words = {
      "a",     "about", "above", "after", "again", "against", "all",   "an",    "and",   "any",   "are",
      "as",    "at",    "be",    "been",  "being", "below",   "between", "both", "but",  "by",    "can",
      "could", "did",   "do",    "does",  "down",  "during",  "each",  "for",   "from",  "further", "had",
      "has",   "have",  "he",    "her",   "here",  "his",     "how",   "i",     "if",    "in",    "into",
      "is",    "it",    "its",   "just",  "more",  "most",    "no",    "nor",   "not",   "of",    "off",
      "on",    "once",  "only",  "or",    "other", "our",     "out",   "over",  "own",   "same",  "she",
      "so",    "some",  "such",  "than",  "that",  "the",     "their", "them",  "then",  "there", "these",
      "they",  "this",  "those", "through", "to",  "too",     "under", "until", "up",    "very",  "was",
      "we",    "were",  "what",  "when",  "where", "which",   "while", "who",   "whom",  "why",   "will",
      "with",  "you",   "your",  "style", "image", "photo",   "picture",
  };
  return words;
}

std::vector<std::string> words_of(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (std::isalnum(c) || c >= 0x80 || c == '\'') {
      cur.push_back(static_cast<char>(c < 0x80 ? std::tolower(c) : c));
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

}  // namespace

std::vector<std::string> extract_keywords(std::span<const std::string> texts, int limit) {
  std::map<std::string, int> freq;
  std::vector<std::string> all;
  for (const auto& t : texts)
    for (auto& w : words_of(t)) {
      all.push_back(w);
      if (!stopwords().contains(w)) ++freq[w];
    }
  std::vector<std::pair<std::string, int>> ranked(freq.begin(), freq.end());
  if (ranked.empty() && !all.empty()) {
    // Everything was a stopword; fall back to the longest word.
    const auto it = std::max_element(all.begin(), all.end(),
                                     [](const auto& a, const auto& b) { return a.size() < b.size(); });
    return {*it};
  }
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.first.size() != b.first.size()) return a.first.size() > b.first.size();
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  std::vector<std::string> out;
  for (const auto& [w, _] : ranked) {
    if (static_cast<int>(out.size()) >= limit) break;
    out.push_back(w);
  }
  return out;
}

SemanticsPrior extract_semantics(const imagery::ImagerySelection& sel, std::span<const StyleEntry> style_db,
                                 const backends::Captioner& captioner, const backends::Embedder& embedder) {
  if (style_db.empty()) throw Error(ErrorCode::invalid_argument, "style database is empty");
  const Image cutout = imagery::imagery_image(sel, imagery::Background::white);
  SemanticsPrior p;
  p.scene = captioner.caption(cutout);
  if (p.scene.empty()) throw Error(ErrorCode::invalid_input, "caption backend returned an empty scene description");
  p.style = best_style(embedder.embed_image(cutout), style_db).text;
  const std::string texts[] = {p.scene, p.style};
  p.keywords = extract_keywords(texts);
  return p;
}

// ---------------------------------------------------------------------------
// Color

namespace {

double dist2(const std::array<double, 3>& a, const std::array<double, 3>& b) {
  const double dr = a[0] - b[0], dg = a[1] - b[1], db = a[2] - b[2];
  return dr * dr + dg * dg + db * db;
}

int nearest_index(const std::array<double, 3>& c, std::span<const std::array<double, 3>> centroids) {
  int best = 0;
  double bd = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < centroids.size(); ++i) {
    const double d = dist2(c, centroids[i]);
    if (d < bd) {
      bd = d;
      best = static_cast<int>(i);
    }
  }
  return best;
}

double luminance(const Rgb& c) { return 0.299 * c.r + 0.587 * c.g + 0.114 * c.b; }

}  // namespace

std::vector<WeightedColor> color_histogram(const Image& image, const Mask& mask) {
  if (!same_size(image, mask)) throw Error(ErrorCode::invalid_argument, "mask and image sizes differ");
  std::map<std::uint32_t, double> counts;
  for (int y = 0; y < image.height(); ++y)
    for (int x = 0; x < image.width(); ++x)
      if (mask.get(x, y)) {
        const Rgb c = image.rgb(x, y);
        counts[(static_cast<std::uint32_t>(c.r) << 16) | (c.g << 8) | c.b] += 1.0;
      }
  std::vector<WeightedColor> out;
  out.reserve(counts.size());
  for (const auto& [key, n] : counts)
    out.push_back({{static_cast<double>(key >> 16), static_cast<double>((key >> 8) & 0xff),
                    static_cast<double>(key & 0xff)},
                   n});
  return out;
}

KMeansResult kmeans_colors(std::span<const WeightedColor> colors, int k, int max_iterations, double tolerance) {
  if (k <= 0) throw Error(ErrorCode::invalid_argument, "k must be positive");
  if (colors.empty()) throw Error(ErrorCode::invalid_input, "no colours to cluster");

  // Seed: most frequent 5-bit bin, represented by its weighted mean colour.
  std::map<int, std::pair<double, std::array<double, 3>>> bins;
  for (const auto& c : colors) {
    const int key = (static_cast<int>(c.rgb[0]) >> 3) << 10 | (static_cast<int>(c.rgb[1]) >> 3) << 5 |
                    (static_cast<int>(c.rgb[2]) >> 3);
    auto& [w, sum] = bins[key];
    w += c.weight;
    for (int i = 0; i < 3; ++i) sum[i] += c.rgb[i] * c.weight;
  }
  auto top = bins.begin();
  for (auto it = bins.begin(); it != bins.end(); ++it)
    if (it->second.first > top->second.first) top = it;
  KMeansResult res;
  const auto& [tw, tsum] = top->second;
  res.centroids.push_back({tsum[0] / tw, tsum[1] / tw, tsum[2] / tw});

  // Farthest-point initialisation.
  while (static_cast<int>(res.centroids.size()) < k) {
    double far_d = -1.0;
    std::size_t far = 0;
    for (std::size_t i = 0; i < colors.size(); ++i) {
      double d = std::numeric_limits<double>::infinity();
      for (const auto& ctr : res.centroids) d = std::min(d, dist2(colors[i].rgb, ctr));
      if (d > far_d) {
        far_d = d;
        far = i;
      }
    }
    if (far_d <= 0.0)
      res.centroids.push_back(res.centroids.back());  // fewer distinct colours than k
    else
      res.centroids.push_back(colors[far].rgb);
  }

  // Lloyd.
  std::vector<std::array<double, 3>> sums(static_cast<std::size_t>(k));
  std::vector<double> weights(static_cast<std::size_t>(k));
  for (res.iterations = 0; res.iterations < max_iterations;) {
    std::fill(sums.begin(), sums.end(), std::array<double, 3>{0, 0, 0});
    std::fill(weights.begin(), weights.end(), 0.0);
    for (const auto& c : colors) {
      const int j = nearest_index(c.rgb, res.centroids);
      for (int i = 0; i < 3; ++i) sums[j][i] += c.rgb[i] * c.weight;
      weights[j] += c.weight;
    }
    ++res.iterations;
    double shift = 0.0;
    for (int j = 0; j < k; ++j) {
      if (weights[j] == 0.0) continue;
      const std::array<double, 3> next{sums[j][0] / weights[j], sums[j][1] / weights[j], sums[j][2] / weights[j]};
      shift = std::max(shift, std::sqrt(dist2(next, res.centroids[j])));
      res.centroids[j] = next;
    }
    if (shift < tolerance) break;
  }
  return res;
}

Rgb nearest_color(Rgb c, std::span<const Rgb> palette) {
  Rgb best = palette.front();
  long bd = std::numeric_limits<long>::max();
  for (const auto& p : palette) {
    const long dr = c.r - p.r, dg = c.g - p.g, db = c.b - p.b;
    const long d = dr * dr + dg * dg + db * db;
    if (d < bd) {
      bd = d;
      best = p;
    }
  }
  return best;
}

ColorPrior extract_colors(const Image& image, const Mask& mask, int k) {
  if (k <= 0) throw Error(ErrorCode::invalid_argument, "k must be positive");
  if (mask.count() < static_cast<std::size_t>(k))
    throw Error(ErrorCode::invalid_input, "need at least " + std::to_string(k) + " selected pixels");
  const auto hist = color_histogram(image, mask);
  const auto km = kmeans_colors(hist, k);

  ColorPrior prior;
  for (const auto& c : km.centroids)
    prior.colors.push_back({static_cast<std::uint8_t>(std::clamp(std::lround(c[0]), 0L, 255L)),
                            static_cast<std::uint8_t>(std::clamp(std::lround(c[1]), 0L, 255L)),
                            static_cast<std::uint8_t>(std::clamp(std::lround(c[2]), 0L, 255L))});
  std::stable_sort(prior.colors.begin(), prior.colors.end(), [](const Rgb& a, const Rgb& b) {
    const double la = luminance(a), lb = luminance(b);
    if (la != lb) return la < lb;
    return a < b;
  });

  // Spatial palette over the selection's bounding box.
  const Rect b = mask.bounds();
  const int side = kPaletteImageSide;
  prior.palette_image = Image(side, side);
  for (int cy = 0; cy < side; ++cy) {
    const int y0 = b.y0 + static_cast<int>(static_cast<long long>(cy) * b.height() / side);
    const int y1 = std::max(y0 + 1, b.y0 + static_cast<int>(static_cast<long long>(cy + 1) * b.height() / side));
    for (int cx = 0; cx < side; ++cx) {
      const int x0 = b.x0 + static_cast<int>(static_cast<long long>(cx) * b.width() / side);
      const int x1 = std::max(x0 + 1, b.x0 + static_cast<int>(static_cast<long long>(cx + 1) * b.width() / side));
      std::array<double, 3> fg{}, all{};
      double nfg = 0, nall = 0;
      for (int y = y0; y < std::min(y1, b.y1); ++y)
        for (int x = x0; x < std::min(x1, b.x1); ++x) {
          const Rgb c = image.rgb(x, y);
          const std::array<double, 3> v{static_cast<double>(c.r), static_cast<double>(c.g), static_cast<double>(c.b)};
          for (int i = 0; i < 3; ++i) all[i] += v[i];
          nall += 1;
          if (mask.get(x, y)) {
            for (int i = 0; i < 3; ++i) fg[i] += v[i];
            nfg += 1;
          }
        }
      const auto& acc = nfg > 0 ? fg : all;
      const double n = nfg > 0 ? nfg : nall;
      const Rgb mean{static_cast<std::uint8_t>(std::lround(acc[0] / n)), static_cast<std::uint8_t>(std::lround(acc[1] / n)),
                     static_cast<std::uint8_t>(std::lround(acc[2] / n))};
      prior.palette_image.set(cx, cy, nearest_color(mean, prior.colors));
    }
  }
  return prior;
}

ColorPrior extract_colors(const imagery::ImagerySelection& sel, int k) { return extract_colors(sel.source, sel.mask, k); }

// ---------------------------------------------------------------------------
// Shape

Ring dominant_contour(const Mask& mask, double tolerance) {
  const Mask comp = largest_component(mask);
  if (!comp.any()) throw Error(ErrorCode::empty_selection, "mask is empty");
  const auto rings = trace_contours(comp);
  const Ring* outer = nullptr;
  double best = 0.0;
  for (const auto& r : rings) {
    const double a = std::abs(signed_area(r));
    if (a > best) {
      best = a;
      outer = &r;
    }
  }
  if (!outer) throw Error(ErrorCode::invalid_input, "mask has no usable contour");
  Ring s = simplify_ring(*outer, tolerance);
  if (s.size() < 3 || std::abs(signed_area(s)) <= 0.0) throw Error(ErrorCode::invalid_input, "contour is degenerate");
  return s;
}

std::vector<Vec2> sample_ring(std::span<const Vec2> ring, int n) {
  if (n < 1) throw Error(ErrorCode::invalid_argument, "number of samples must be positive");
  if (ring.size() < 3) throw Error(ErrorCode::invalid_input, "contour needs at least three vertices");
  Ring r(ring.begin(), ring.end());
  if (signed_area(r) > 0) std::reverse(r.begin(), r.end());
  const auto start = std::min_element(r.begin(), r.end(), [](const Vec2& a, const Vec2& b) {
    return a.y < b.y || (a.y == b.y && a.x < b.x);
  });
  std::rotate(r.begin(), start, r.end());

  const std::size_t m = r.size();
  std::vector<double> cum(m + 1, 0.0);
  for (std::size_t i = 0; i < m; ++i) cum[i + 1] = cum[i] + distance(r[i], r[(i + 1) % m]);
  const double total = cum[m];
  if (total <= 0) throw Error(ErrorCode::invalid_input, "contour has zero length");

  std::vector<Vec2> out;
  out.reserve(static_cast<std::size_t>(n));
  std::size_t seg = 0;
  for (int k = 0; k < n; ++k) {
    const double s = total * k / n;
    while (seg + 1 < m && cum[seg + 1] <= s) ++seg;
    const double len = cum[seg + 1] - cum[seg];
    const double t = len > 0 ? (s - cum[seg]) / len : 0.0;
    const Vec2 a = r[seg];
    const Vec2 b = r[(seg + 1) % m];
    out.push_back(a + (b - a) * t);
  }
  return out;
}

std::vector<Vec2> sample_contour(const Mask& mask, int n) { return sample_ring(dominant_contour(mask), n); }

std::vector<Vec2> sample_contour(const imagery::ImagerySelection& sel, int n) { return sample_contour(sel.mask, n); }

std::vector<Vec2> rectangle_cage(const Box2& rect, int n) {
  if (n < 3) throw Error(ErrorCode::invalid_argument, "cage needs at least three points");
  const Ring corners = {rect.min, {rect.min.x, rect.max.y}, rect.max, {rect.max.x, rect.min.y}};
  return sample_ring(corners, n);
}

std::vector<double> mean_value_coordinates(Vec2 p, std::span<const Vec2> cage) {
  const std::size_t n = cage.size();
  std::vector<double> w(n, 0.0);
  std::vector<Vec2> s(n);
  std::vector<double> r(n);
  const double scale = std::max(1.0, perimeter(cage));
  const double eps = 1e-12 * scale;
  for (std::size_t i = 0; i < n; ++i) {
    s[i] = cage[i] - p;
    r[i] = norm(s[i]);
    if (r[i] <= eps) {
      w[i] = 1.0;
      return w;
    }
  }
  std::vector<double> t(n);  // tan(alpha_i / 2)
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j = (i + 1) % n;
    const double area2 = cross(s[i], s[j]);
    const double d = dot(s[i], s[j]);
    const double rr = r[i] * r[j];
    if (rr + d <= 1e-12 * rr && std::abs(area2) <= 1e-12 * rr) {
      // p lies on edge (i, j): linear interpolation along it.
      std::fill(w.begin(), w.end(), 0.0);
      w[i] = r[j] / (r[i] + r[j]);
      w[j] = r[i] / (r[i] + r[j]);
      return w;
    }
    t[i] = area2 / (rr + d);
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t prev = (i + n - 1) % n;
    w[i] = (t[prev] + t[i]) / r[i];
    sum += w[i];
  }
  for (double& x : w) x /= sum;
  return w;
}

Correspondence best_correspondence(std::span<const Vec2> cage, std::span<const Vec2> target) {
  const std::size_t n = cage.size();
  if (target.size() != n || n == 0)
    throw Error(ErrorCode::invalid_argument, "target must have as many points as the cage");
  Correspondence best{0, false, std::numeric_limits<double>::infinity()};
  for (int rev = 0; rev < 2; ++rev)
    for (std::size_t shift = 0; shift < n; ++shift) {
      double cost = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const std::size_t idx = rev ? (shift + n - i) % n : (shift + i) % n;
        const Vec2 d = cage[i] - target[idx];
        cost += dot(d, d);
      }
      if (cost < best.cost) best = {static_cast<int>(shift), rev == 1, cost};
    }
  return best;
}

std::vector<Vec2> apply_correspondence(std::span<const Vec2> target, const Correspondence& c) {
  const std::size_t n = target.size();
  std::vector<Vec2> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t shift = static_cast<std::size_t>(c.shift);
    out[i] = target[c.reversed ? (shift + n - i) % n : (shift + i) % n];
  }
  return out;
}

std::vector<Vec2> fit_to_rect(std::span<const Vec2> target, const Box2& rect) {
  const Box2 b = bounding_box(target);
  std::vector<Vec2> out;
  out.reserve(target.size());
  for (const auto& p : target) {
    const double u = b.width() > 0 ? (p.x - b.min.x) / b.width() : 0.5;
    const double v = b.height() > 0 ? (p.y - b.min.y) / b.height() : 0.5;
    out.push_back({rect.min.x + u * rect.width(), rect.min.y + v * rect.height()});
  }
  return out;
}

std::vector<Ring> deform_outlines(std::span<const Ring> outlines, std::span<const Vec2> source_cage,
                                  std::span<const Vec2> target_cage, int steps) {
  if (steps < 1) throw Error(ErrorCode::invalid_argument, "steps must be positive");
  if (source_cage.size() != target_cage.size() || source_cage.size() < 3)
    throw Error(ErrorCode::invalid_argument, "source and target cages must match in size");
  const std::size_t n = source_cage.size();
  std::vector<Ring> current(outlines.begin(), outlines.end());
  std::vector<Vec2> prev(source_cage.begin(), source_cage.end());
  std::vector<Vec2> next(n);
  for (int s = 1; s <= steps; ++s) {
    const double t = static_cast<double>(s) / steps;
    for (std::size_t i = 0; i < n; ++i) next[i] = source_cage[i] + (target_cage[i] - source_cage[i]) * t;
    for (auto& ring : current)
      for (auto& v : ring) {
        const auto w = mean_value_coordinates(v, prev);
        Vec2 moved;
        for (std::size_t i = 0; i < n; ++i) moved += next[i] * w[i];
        v = moved;
      }
    prev = next;
  }
  return current;
}

ShapePrior deform_outlines_to(std::span<const Ring> outlines, std::span<const Vec2> target, int steps, TargetFit fit) {
  if (outlines.empty()) throw Error(ErrorCode::invalid_input, "typeface selection has no outlines");
  if (target.size() < 3) throw Error(ErrorCode::invalid_argument, "target needs at least three points");
  Box2 rect = bounding_box(outlines);
  rect.min = rect.min - Vec2{kCagePadding, kCagePadding};
  rect.max = rect.max + Vec2{kCagePadding, kCagePadding};

  ShapePrior prior;
  prior.contour_points.assign(target.begin(), target.end());
  prior.source_cage = rectangle_cage(rect, static_cast<int>(target.size()));
  const auto fitted = fit == TargetFit::fit_to_cage ? fit_to_rect(target, rect) : std::vector<Vec2>(target.begin(), target.end());
  prior.target_cage = apply_correspondence(fitted, best_correspondence(prior.source_cage, fitted));
  prior.source_outlines.assign(outlines.begin(), outlines.end());
  prior.deformed_outlines = deform_outlines(outlines, prior.source_cage, prior.target_cage, steps);
  prior.self_intersecting = self_intersects(prior.deformed_outlines);
  return prior;
}

ShapePrior deform_typeface(const glyph::TypefaceSelection& tf_sel, std::span<const Vec2> target, int steps,
                           TargetFit fit) {
  return deform_outlines_to(glyph::selection_outlines(tf_sel), target, steps, fit);
}

Image render_outlines(std::span<const Ring> outlines, int width, int height) {
  const Mask m = rasterize(outlines, width, height, FillRule::even_odd);
  Image out(width, height, kWhite);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x)
      if (m.get(x, y)) out.set(x, y, kBlack);
  return out;
}

}  // namespace typeblend::priors
