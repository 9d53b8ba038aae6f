#include "typeblend/vector.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>
#include <json.hpp>

#include "typeblend/contour.hpp"
#include "typeblend/error.hpp"
#include "typeblend/priors.hpp"

namespace typeblend::vector {

const Element* VectorDesign::find(std::string_view id) const {
  for (const auto& e : elements)
    if (e.id == id) return &e;
  return nullptr;
}

void VectorDesign::validate() const {
  if (width < 0 || height < 0) throw Error(ErrorCode::invalid_input, "negative canvas size");
  std::set<std::string_view> ids;
  for (std::size_t i = 0; i < elements.size(); ++i) {
    const auto& e = elements[i];
    if (e.id.empty() || !ids.insert(e.id).second) throw Error(ErrorCode::invalid_input, "element ids must be unique");
    if (i > 0 && elements[i - 1].z >= e.z) throw Error(ErrorCode::invalid_input, "element z-order must increase");
    for (const auto& r : e.rings)
      if (r.size() < 3) throw Error(ErrorCode::invalid_input, "element " + e.id + " has a degenerate ring");
  }
}

std::string_view to_string(EditOp op) {
  switch (op) {
    case EditOp::remove: return "delete";
    case EditOp::scale: return "scale";
    case EditOp::rotate: return "rotate";
    case EditOp::recolor: return "recolor";
    case EditOp::translate: return "translate";
  }
  return "?";
}

EditOp edit_op_from_string(std::string_view s) {
  for (auto op : {EditOp::remove, EditOp::scale, EditOp::rotate, EditOp::recolor, EditOp::translate})
    if (to_string(op) == s) return op;
  throw Error(ErrorCode::invalid_argument, "unknown edit op '" + std::string(s) + "'");
}

void EditCommand::validate() const {
  auto finite = [](const std::optional<double>& v) { return v && std::isfinite(*v); };
  switch (op) {
    case EditOp::remove: break;
    case EditOp::scale:
      if (!finite(factor) || *factor <= 0.0) throw Error(ErrorCode::invalid_argument, "scale needs a positive factor");
      break;
    case EditOp::rotate:
      if (!finite(degrees)) throw Error(ErrorCode::invalid_argument, "rotate needs degrees");
      break;
    case EditOp::recolor:
      if (!color) throw Error(ErrorCode::invalid_argument, "recolor needs a color");
      break;
    case EditOp::translate:
      if (!finite(dx) || !finite(dy)) throw Error(ErrorCode::invalid_argument, "translate needs dx and dy");
      break;
  }
}

double element_area(const Element& e) {
  double a = 0.0;
  for (const auto& r : e.rings) a += -signed_area(r);
  return std::abs(a);
}

// ---------------------------------------------------------------------------

VectorDesign vectorize(const Image& image, std::span<const Rgb> palette) {
  if (image.empty()) throw Error(ErrorCode::invalid_input, "image is empty");
  const int w = image.width(), h = image.height();
  Image flat(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const auto* p = image.at(x, y);
      const int a = p[3];
      Rgb c;
      c.r = static_cast<std::uint8_t>((p[0] * a + 255 * (255 - a) + 127) / 255);
      c.g = static_cast<std::uint8_t>((p[1] * a + 255 * (255 - a) + 127) / 255);
      c.b = static_cast<std::uint8_t>((p[2] * a + 255 * (255 - a) + 127) / 255);
      flat.set(x, y, c);
    }

  std::vector<Rgb> colors(palette.begin(), palette.end());
  if (colors.empty()) colors = priors::extract_colors(flat, Mask(w, h, true), priors::kPaletteSize).colors;
  std::sort(colors.begin(), colors.end());
  colors.erase(std::unique(colors.begin(), colors.end()), colors.end());

  std::map<Rgb, Mask> layers;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const Rgb c = priors::nearest_color(flat.rgb(x, y), colors);
      auto [it, _] = layers.try_emplace(c, w, h);
      it->second.set(x, y, true);
    }

  struct Piece {
    std::size_t area;
    int color_index;
    int first;
    Element element;
  };
  std::vector<Piece> pieces;
  const double min_area = kMinElementFraction * static_cast<double>(w) * h;
  int ci = 0;
  for (const auto& [color, layer] : layers) {
    const auto comps = label_components(layer);
    std::vector<int> first(comps.sizes.size(), -1);
    for (int i = 0; i < w * h; ++i) {
      const int l = comps.labels[static_cast<std::size_t>(i)];
      if (l > 0 && first[l - 1] < 0) first[l - 1] = i;
    }
    for (std::size_t k = 0; k < comps.sizes.size(); ++k) {
      if (static_cast<double>(comps.sizes[k]) < min_area) continue;
      Element e;
      e.fill = color;
      for (const auto& ring : trace_contours(comps.component_mask(static_cast<int>(k + 1)))) {
        Ring s = simplify_ring(ring, kSimplifyTolerance);
        if (s.size() >= 3 && signed_area(s) != 0.0) e.rings.push_back(std::move(s));
      }
      if (!e.rings.empty()) pieces.push_back({comps.sizes[k], ci, first[k], std::move(e)});
    }
    ++ci;
  }
  std::sort(pieces.begin(), pieces.end(), [](const Piece& a, const Piece& b) {
    if (a.area != b.area) return a.area > b.area;
    if (a.color_index != b.color_index) return a.color_index < b.color_index;
    return a.first < b.first;
  });

  VectorDesign d;
  d.width = w;
  d.height = h;
  for (std::size_t i = 0; i < pieces.size(); ++i) {
    auto& e = pieces[i].element;
    e.id = "e" + std::to_string(i);
    e.z = static_cast<int>(i);
    d.elements.push_back(std::move(e));
  }
  return d;
}

Image rasterize(const VectorDesign& design, Rgb background) {
  Image out(design.width, design.height, background);
  for (const auto& e : design.elements) {
    const Mask m = typeblend::rasterize(e.rings, design.width, design.height, FillRule::even_odd);
    for (int y = 0; y < design.height; ++y)
      for (int x = 0; x < design.width; ++x)
        if (m.get(x, y)) out.set(x, y, e.fill);
  }
  return out;
}

VectorDesign apply_edit(const VectorDesign& design, const EditCommand& cmd) {
  cmd.validate();
  const auto it = std::find_if(design.elements.begin(), design.elements.end(),
                               [&](const Element& e) { return e.id == cmd.target_id; });
  if (it == design.elements.end()) throw Error(ErrorCode::not_found, "unknown element '" + cmd.target_id + "'");
  VectorDesign out = design;
  auto& e = out.elements[static_cast<std::size_t>(it - design.elements.begin())];
  auto transform = [&](auto&& fn) {
    for (auto& r : e.rings)
      for (auto& v : r) v = fn(v);
  };
  switch (cmd.op) {
    case EditOp::remove:
      out.elements.erase(out.elements.begin() + (it - design.elements.begin()));
      break;
    case EditOp::scale: {
      const Vec2 c = area_centroid(e.rings);
      const double f = *cmd.factor;
      transform([&](Vec2 v) { return c + (v - c) * f; });
      break;
    }
    case EditOp::rotate: {
      const Vec2 c = area_centroid(e.rings);
      const double t = *cmd.degrees * std::numbers::pi / 180.0;
      const double cs = std::cos(t), sn = std::sin(t);
      transform([&](Vec2 v) {
        const Vec2 d = v - c;
        return c + Vec2{cs * d.x - sn * d.y, sn * d.x + cs * d.y};
      });
      break;
    }
    case EditOp::recolor:
      e.fill = *cmd.color;
      break;
    case EditOp::translate:
      transform([&](Vec2 v) { return v + Vec2{*cmd.dx, *cmd.dy}; });
      break;
  }
  return out;
}

// ---------------------------------------------------------------------------
// SVG

std::string hex_color(Rgb c) {
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", c.r, c.g, c.b);
  return buf;
}

Rgb parse_hex_color(std::string_view s) {
  if (s.size() != 7 || s[0] != '#') throw Error(ErrorCode::parse_error, "bad colour '" + std::string(s) + "'");
  auto byte = [&](std::size_t i) {
    unsigned v = 0;
    const auto [p, ec] = std::from_chars(s.data() + i, s.data() + i + 2, v, 16);
    if (ec != std::errc() || p != s.data() + i + 2) throw Error(ErrorCode::parse_error, "bad colour '" + std::string(s) + "'");
    return static_cast<std::uint8_t>(v);
  };
  return {byte(1), byte(3), byte(5)};
}

namespace {

std::string fmt_coord(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  std::string s = buf;
  s.erase(s.find_last_not_of('0') + 1);
  if (s.back() == '.') s.pop_back();
  if (s == "-0") s = "0";
  return s;
}

std::string path_data(const std::vector<Ring>& rings) {
  std::string d;
  for (const auto& r : rings) {
    for (std::size_t i = 0; i < r.size(); ++i) {
      if (!d.empty()) d += ' ';
      d += i == 0 ? "M " : "L ";
      d += fmt_coord(r[i].x) + ' ' + fmt_coord(r[i].y);
    }
    d += " Z";
  }
  return d;
}

std::vector<Ring> parse_path_data(std::string_view d) {
  std::vector<Ring> rings;
  Ring cur;
  std::istringstream in{std::string(d)};
  std::string tok;
  char cmd = 0;
  auto number = [&](const std::string& t) {
    double v = 0;
    const auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc() || p != t.data() + t.size()) throw Error(ErrorCode::parse_error, "bad path number '" + t + "'");
    return v;
  };
  while (in >> tok) {
    if (tok == "M" || tok == "L") {
      cmd = tok[0];
      if (cmd == 'M' && !cur.empty()) throw Error(ErrorCode::parse_error, "unclosed subpath");
      std::string xs, ys;
      if (!(in >> xs >> ys)) throw Error(ErrorCode::parse_error, "truncated path data");
      cur.push_back({number(xs), number(ys)});
    } else if (tok == "Z" || tok == "z") {
      if (cur.size() < 3) throw Error(ErrorCode::parse_error, "subpath with fewer than three points");
      rings.push_back(std::move(cur));
      cur.clear();
    } else {
      throw Error(ErrorCode::parse_error, "unsupported path command '" + tok + "'");
    }
  }
  if (!cur.empty()) throw Error(ErrorCode::parse_error, "unclosed subpath");
  return rings;
}

}  // namespace

std::string export_svg(const VectorDesign& design) {
  std::vector<const Element*> order;
  for (const auto& e : design.elements) order.push_back(&e);
  std::stable_sort(order.begin(), order.end(), [](const Element* a, const Element* b) { return a->z < b->z; });
  std::ostringstream out;
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << design.width << "\" height=\""
      << design.height << "\" viewBox=\"0 0 " << design.width << ' ' << design.height << "\">\n";
  for (const auto* e : order)
    out << "  <path id=\"" << e->id << "\" fill=\"" << hex_color(e->fill) << "\" fill-rule=\"evenodd\" d=\""
        << path_data(e->rings) << "\"/>\n";
  out << "</svg>\n";
  return out.str();
}

VectorDesign parse_svg(std::string_view svg) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    std::istringstream in{std::string(svg)};
    pt::read_xml(in, tree);
  } catch (const pt::xml_parser_error& e) {
    throw Error(ErrorCode::parse_error, std::string("invalid SVG: ") + e.what());
  }
  const auto root = tree.get_child_optional("svg");
  if (!root) throw Error(ErrorCode::parse_error, "missing <svg> root element");
  VectorDesign d;
  try {
    d.width = root->get<int>("<xmlattr>.width");
    d.height = root->get<int>("<xmlattr>.height");
    int z = 0;
    for (const auto& [name, node] : *root) {
      if (name != "path") continue;
      Element e;
      e.id = node.get<std::string>("<xmlattr>.id");
      e.fill = parse_hex_color(node.get<std::string>("<xmlattr>.fill"));
      e.rings = parse_path_data(node.get<std::string>("<xmlattr>.d"));
      e.z = z++;
      d.elements.push_back(std::move(e));
    }
  } catch (const pt::ptree_error& e) {
    throw Error(ErrorCode::parse_error, std::string("invalid SVG: ") + e.what());
  }
  return d;
}

// ---------------------------------------------------------------------------
// JSON

std::string to_json(const VectorDesign& design) {
  nlohmann::json j = {{"width", design.width}, {"height", design.height}, {"elements", nlohmann::json::array()}};
  for (const auto& e : design.elements) {
    nlohmann::json rings = nlohmann::json::array();
    for (const auto& r : e.rings) {
      nlohmann::json pts = nlohmann::json::array();
      for (const auto& v : r) pts.push_back({v.x, v.y});
      rings.push_back(std::move(pts));
    }
    j["elements"].push_back({{"id", e.id}, {"fill", hex_color(e.fill)}, {"z", e.z}, {"rings", std::move(rings)}});
  }
  return j.dump();
}

VectorDesign from_json(std::string_view text) {
  try {
    const auto j = nlohmann::json::parse(text);
    VectorDesign d;
    d.width = j.at("width").get<int>();
    d.height = j.at("height").get<int>();
    for (const auto& je : j.at("elements")) {
      Element e;
      e.id = je.at("id").get<std::string>();
      e.fill = parse_hex_color(je.at("fill").get<std::string>());
      e.z = je.at("z").get<int>();
      for (const auto& jr : je.at("rings")) {
        Ring r;
        for (const auto& p : jr) r.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
        e.rings.push_back(std::move(r));
      }
      d.elements.push_back(std::move(e));
    }
    d.validate();
    return d;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::parse_error, std::string("invalid design JSON: ") + e.what());
  }
}

}  // namespace typeblend::vector
