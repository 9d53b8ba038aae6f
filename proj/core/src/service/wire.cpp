#include "wire.hpp"

#include <cstdio>
#include <fstream>

#include "typeblend/error.hpp"

namespace typeblend::wire {

json InlineRasters::put(const Image& img) { return image_to_base64_png(img); }

Image InlineRasters::get(const json& j) const {
  if (!j.is_string()) throw Error(ErrorCode::invalid_input, "raster must be a base64 PNG string");
  return image_from_base64(j.get<std::string>());
}

json BlobRasters::put(const Image& img) {
  const auto png = encode_png(img);
  char name[32];
  std::snprintf(name, sizeof name, "%016llx.png", static_cast<unsigned long long>(fnv1a64(png)));
  const auto path = dir_ / name;
  if (!std::filesystem::exists(path)) {
    std::filesystem::create_directories(dir_);
    const auto tmp = path.string() + ".tmp";
    {
      std::ofstream out(tmp, std::ios::binary);
      out.write(reinterpret_cast<const char*>(png.data()), static_cast<std::streamsize>(png.size()));
      if (!out) throw Error(ErrorCode::io_error, "cannot write blob " + tmp);
    }
    std::filesystem::rename(tmp, path);
  }
  return {{"blob", name}};
}

Image BlobRasters::get(const json& j) const {
  if (j.is_string()) return image_from_base64(j.get<std::string>());
  return read_image(dir_ / wire::get<std::string>(j, "blob"));
}

const json& field(const json& j, const char* name) {
  if (!j.is_object()) throw Error(ErrorCode::invalid_input, std::string("expected an object holding '") + name + "'");
  const auto it = j.find(name);
  if (it == j.end()) throw Error(ErrorCode::invalid_input, std::string("missing field '") + name + "'");
  return *it;
}

json parse_body(std::string_view body) {
  if (body.find_first_not_of(" \t\r\n") == std::string_view::npos) return json::object();
  try {
    auto j = json::parse(body);
    if (!j.is_object()) throw Error(ErrorCode::invalid_input, "request body must be a JSON object");
    return j;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::invalid_input, std::string("malformed JSON body: ") + e.what());
  }
}

json color(Rgb c) { return vector::hex_color(c); }
Rgb color(const json& j) {
  if (j.is_string()) return vector::parse_hex_color(j.get<std::string>());
  if (j.is_array() && j.size() == 3) {
    Rgb c;
    std::uint8_t* ch[3] = {&c.r, &c.g, &c.b};
    for (int i = 0; i < 3; ++i) {
      const int v = j.at(i).get<int>();
      if (v < 0 || v > 255) throw Error(ErrorCode::invalid_input, "colour channel out of range");
      *ch[i] = static_cast<std::uint8_t>(v);
    }
    return c;
  }
  throw Error(ErrorCode::invalid_input, "colour must be \"#rrggbb\" or [r, g, b]");
}

json rect(const Rect& r) { return {{"x0", r.x0}, {"y0", r.y0}, {"x1", r.x1}, {"y1", r.y1}}; }
Rect rect(const json& j) {
  if (j.is_array() && j.size() == 4) return {j[0].get<int>(), j[1].get<int>(), j[2].get<int>(), j[3].get<int>()};
  return {get<int>(j, "x0"), get<int>(j, "y0"), get<int>(j, "x1"), get<int>(j, "y1")};
}

json point(Vec2 v) { return json::array({v.x, v.y}); }
Vec2 point(const json& j) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
    throw Error(ErrorCode::invalid_input, "point must be [x, y]");
  return {j[0].get<double>(), j[1].get<double>()};
}

json points(std::span<const Vec2> pts) {
  json out = json::array();
  for (const auto& p : pts) out.push_back(point(p));
  return out;
}
std::vector<Vec2> points(const json& j) {
  std::vector<Vec2> out;
  for (const auto& p : j) out.push_back(point(p));
  return out;
}

json rings(std::span<const Ring> rs) {
  json out = json::array();
  for (const auto& r : rs) out.push_back(points(r));
  return out;
}
std::vector<Ring> rings(const json& j) {
  std::vector<Ring> out;
  for (const auto& r : j) out.push_back(points(r));
  return out;
}

json prompt(const backends::SegmentPrompt& p) {
  json coords = json::array();
  const int n = p.kind == backends::PromptKind::point ? 2 : 4;
  for (int i = 0; i < n; ++i) coords.push_back(p.coords[i]);
  return {{"kind", backends::to_string(p.kind)}, {"coords", coords}, {"label", backends::to_string(p.label)}};
}

backends::SegmentPrompt prompt(const json& j) {
  const auto kind = j.contains("kind") ? backends::prompt_kind_from_string(get<std::string>(j, "kind"))
                                       : backends::PromptKind::point;
  const auto label = j.contains("label") ? backends::prompt_label_from_string(get<std::string>(j, "label"))
                                         : backends::PromptLabel::foreground;
  const auto c = get<std::vector<int>>(j, "coords");
  if (kind == backends::PromptKind::point) {
    if (c.size() != 2) throw Error(ErrorCode::invalid_prompt, "point prompt needs coords [x, y]");
    return backends::SegmentPrompt::point(c[0], c[1], label);
  }
  if (c.size() != 4) throw Error(ErrorCode::invalid_prompt, "box prompt needs coords [x0, y0, x1, y1]");
  return backends::SegmentPrompt::box(c[0], c[1], c[2], c[3], label);
}

json idea(const backends::Idea& i) { return {{"imagery", i.imagery}, {"explanation", i.explanation}}; }
backends::Idea idea(const json& j) { return {get<std::string>(j, "imagery"), get<std::string>(j, "explanation")}; }

json flags(const priors::PriorSelection& f) {
  return {{"semantics", f.use_semantics}, {"color", f.use_color}, {"shape", f.use_shape}};
}
priors::PriorSelection flags(const json& j) {
  if (!j.is_object()) throw Error(ErrorCode::invalid_input, "flags must be an object");
  for (const auto& [k, v] : j.items())
    if (k != "semantics" && k != "color" && k != "shape")
      throw Error(ErrorCode::invalid_input, "unknown prior flag '" + k + "'");
  priors::PriorSelection f;
  f.use_semantics = get_opt<bool>(j, "semantics").value_or(false);
  f.use_color = get_opt<bool>(j, "color").value_or(false);
  f.use_shape = get_opt<bool>(j, "shape").value_or(false);
  return f;
}

json semantics(const priors::SemanticsPrior& s) {
  return {{"scene", s.scene}, {"style", s.style}, {"keywords", s.keywords}};
}
priors::SemanticsPrior semantics(const json& j) {
  return {get<std::string>(j, "scene"), get<std::string>(j, "style"), get<std::vector<std::string>>(j, "keywords")};
}

json color_prior(const priors::ColorPrior& c, Rasters& r) {
  json colors = json::array();
  for (const auto& x : c.colors) colors.push_back(color(x));
  return {{"colors", colors}, {"palette_image", r.put(c.palette_image)}};
}
priors::ColorPrior color_prior(const json& j, const Rasters& r) {
  priors::ColorPrior c;
  for (const auto& x : field(j, "colors")) c.colors.push_back(color(x));
  c.palette_image = r.get(field(j, "palette_image"));
  return c;
}

json shape_prior(const priors::ShapePrior& s) {
  return {{"contour_points", points(s.contour_points)},
          {"source_cage", points(s.source_cage)},
          {"target_cage", points(s.target_cage)},
          {"source_outlines", rings(s.source_outlines)},
          {"deformed_outlines", rings(s.deformed_outlines)},
          {"self_intersecting", s.self_intersecting}};
}
priors::ShapePrior shape_prior(const json& j) {
  priors::ShapePrior s;
  s.contour_points = points(field(j, "contour_points"));
  s.source_cage = points(field(j, "source_cage"));
  s.target_cage = points(field(j, "target_cage"));
  s.source_outlines = rings(field(j, "source_outlines"));
  s.deformed_outlines = rings(field(j, "deformed_outlines"));
  s.self_intersecting = get<bool>(j, "self_intersecting");
  return s;
}

json design_priors(const priors::DesignPriors& p, Rasters& r) {
  json out = json::object();
  out["semantics"] = p.semantics ? semantics(*p.semantics) : json();
  out["color"] = p.color ? color_prior(*p.color, r) : json();
  out["shape"] = p.shape ? shape_prior(*p.shape) : json();
  return out;
}
priors::DesignPriors design_priors(const json& j, const Rasters& r) {
  priors::DesignPriors p;
  if (j.contains("semantics") && !j["semantics"].is_null()) p.semantics = semantics(j["semantics"]);
  if (j.contains("color") && !j["color"].is_null()) p.color = color_prior(j["color"], r);
  if (j.contains("shape") && !j["shape"].is_null()) p.shape = shape_prior(j["shape"]);
  return p;
}

json typeface(const glyph::RenderedTypeface& tf, Rasters& r) {
  json boxes = json::array();
  for (const auto& b : tf.glyph_boxes) boxes.push_back(rect(b));
  return {{"text", tf.text},          {"font_id", tf.font_id},
          {"canvas", r.put(tf.canvas)}, {"ink_mask", r.put_mask(tf.ink_mask)},
          {"outlines", rings(tf.outlines)}, {"glyph_boxes", boxes}};
}
glyph::RenderedTypeface typeface(const json& j, const Rasters& r) {
  glyph::RenderedTypeface tf;
  tf.text = get<std::string>(j, "text");
  tf.font_id = get<std::string>(j, "font_id");
  tf.canvas = r.get(field(j, "canvas"));
  tf.ink_mask = r.get_mask(field(j, "ink_mask"));
  tf.outlines = rings(field(j, "outlines"));
  for (const auto& b : field(j, "glyph_boxes")) tf.glyph_boxes.push_back(rect(b));
  return tf;
}

json selection(const glyph::TypefaceSelection& sel, Rasters& r) {
  json boxes = json::array();
  for (const auto& b : sel.boxes) boxes.push_back(rect(b));
  return {{"boxes", boxes},
          {"selected_mask", r.put_mask(sel.selected_mask)},
          {"remainder_mask", r.put_mask(sel.remainder_mask)},
          {"granularity", glyph::to_string(sel.granularity)},
          {"mapping", glyph::to_string(sel.mapping)}};
}
glyph::TypefaceSelection selection(const json& j, const glyph::RenderedTypeface& source, const Rasters& r) {
  glyph::TypefaceSelection sel;
  sel.source = source;
  for (const auto& b : field(j, "boxes")) sel.boxes.push_back(rect(b));
  sel.selected_mask = r.get_mask(field(j, "selected_mask"));
  sel.remainder_mask = r.get_mask(field(j, "remainder_mask"));
  sel.granularity = glyph::granularity_from_string(get<std::string>(j, "granularity"));
  sel.mapping = glyph::mapping_from_string(get<std::string>(j, "mapping"));
  return sel;
}

json imagery(const imagery::ImagerySelection& sel, Rasters& r) {
  json prompts = json::array(), objects = json::array();
  for (const auto& p : sel.prompts) prompts.push_back(prompt(p));
  for (const auto& m : sel.object_masks) objects.push_back(r.put_mask(m));
  return {{"source", r.put(sel.source)}, {"prompts", prompts},   {"mask", r.put_mask(sel.mask)},
          {"object_masks", objects},     {"warnings", sel.warnings}};
}
imagery::ImagerySelection imagery(const json& j, const Rasters& r) {
  imagery::ImagerySelection sel;
  sel.source = r.get(field(j, "source"));
  for (const auto& p : field(j, "prompts")) sel.prompts.push_back(prompt(p));
  sel.mask = r.get_mask(field(j, "mask"));
  for (const auto& m : field(j, "object_masks")) sel.object_masks.push_back(r.get_mask(m));
  sel.warnings = get<std::vector<std::string>>(j, "warnings");
  sel.cutout = imagery::make_cutout(sel.source, sel.mask);
  return sel;
}

json scores(const blend::ScoredCandidate& c) {
  return {{"round", c.round},   {"seed", c.seed}, {"prompt", c.prompt},
          {"s1", c.s1},         {"s2", c.s2},     {"s3", c.s3 ? json(*c.s3) : json()},
          {"f", c.f}};
}

json candidate(const blend::ScoredCandidate& c, Rasters& r) {
  json j = scores(c);
  j["image"] = r.put(c.image);
  return j;
}
blend::ScoredCandidate candidate(const json& j, const Rasters& r) {
  blend::ScoredCandidate c;
  c.round = get<int>(j, "round");
  c.seed = get<std::uint64_t>(j, "seed");
  c.prompt = get<std::string>(j, "prompt");
  c.s1 = get<double>(j, "s1");
  c.s2 = get<double>(j, "s2");
  c.s3 = get_opt<double>(j, "s3");
  c.f = get<double>(j, "f");
  c.image = r.get(field(j, "image"));
  return c;
}

json position(const spectrum::SpectrumPosition& p) {
  return {{"raw_type", p.raw_type},
          {"raw_imagery", p.raw_imagery},
          {"display", p.display},
          {"quantized", spectrum::quantize(p.display)}};
}
spectrum::SpectrumPosition position(const json& j) {
  return {get<double>(j, "raw_type"), get<double>(j, "raw_imagery"), get<double>(j, "display")};
}

json design(const vector::VectorDesign& d) { return json::parse(vector::to_json(d)); }
vector::VectorDesign design(const json& j) { return vector::from_json(j.dump()); }

vector::EditCommand edit_command(const json& j) {
  vector::EditCommand cmd;
  cmd.target_id = get<std::string>(j, "target_id");
  cmd.op = vector::edit_op_from_string(get<std::string>(j, "op"));
  cmd.factor = get_opt<double>(j, "factor");
  cmd.degrees = get_opt<double>(j, "degrees");
  if (j.contains("color") && !j["color"].is_null()) cmd.color = color(j["color"]);
  cmd.dx = get_opt<double>(j, "dx");
  cmd.dy = get_opt<double>(j, "dy");
  cmd.validate();
  return cmd;
}

json feedback(const spectrum::FeedbackLog& log) { return {{"positives", log.positives}, {"negatives", log.negatives}}; }
spectrum::FeedbackLog feedback(const json& j) {
  return {get<std::vector<std::string>>(j, "positives"), get<std::vector<std::string>>(j, "negatives")};
}

namespace {

std::string status_of(const SessionState& s, const std::string& id) {
  const auto& f = s.feedback;
  if (std::find(f.positives.begin(), f.positives.end(), id) != f.positives.end()) return "kept";
  if (std::find(f.negatives.begin(), f.negatives.end(), id) != f.negatives.end()) return "deleted";
  return "live";
}

template <class T, class F>
json opt(const std::optional<T>& v, F&& f) {
  return v ? f(*v) : json();
}

}  // namespace

json session(const SessionState& s, Rasters& r) {
  json gallery = json::array();
  for (const auto& g : s.gallery) {
    json c = candidate(g.candidate, r);
    c["id"] = g.id;
    c["origin"] = to_string(g.origin);
    c["generation"] = g.generation;
    c["status"] = status_of(s, g.id);
    gallery.push_back(std::move(c));
  }
  json history = json::array();
  for (const auto& h : s.spectrum_history)
    history.push_back({{"candidate_id", h.candidate_id},
                       {"position", position(h.position)},
                       {"target", h.target ? json(*h.target) : json()}});
  json ideas = json::array();
  for (const auto& i : s.ideas) ideas.push_back(idea(i));
  const auto& g = s.generation;
  return {
      {"id", s.id},
      {"created_at", s.created_at},
      {"updated_at", s.updated_at},
      {"topic", s.topic},
      {"ideas", ideas},
      {"typeface", opt(s.typeface, [&](const auto& t) { return typeface(t, r); })},
      {"selection", opt(s.selection, [&](const auto& t) { return selection(t, r); })},
      {"imagery_source", opt(s.imagery_source, [&](const auto& t) { return r.put(t); })},
      {"imagery", opt(s.imagery, [&](const auto& t) { return imagery(t, r); })},
      {"flags", flags(s.flags)},
      {"priors", design_priors(s.priors, r)},
      {"generation",
       {{"prompt", g.prompt},
        {"negative_prompt", g.negative_prompt},
        {"strength", g.strength},
        {"rounds", g.rounds},
        {"candidates_per_round", g.candidates_per_round},
        {"seed", g.seed}}},
      {"generation_count", s.generation_count},
      {"warnings", s.warnings},
      {"gallery", gallery},
      {"feedback", feedback(s.feedback)},
      {"spectrum_history", history},
      {"current", s.current ? json(*s.current) : json()},
      {"design", opt(s.design, [](const auto& d) { return design(d); })},
      {"design_source", s.design_source ? json(*s.design_source) : json()},
      {"next_seed", s.next_seed},
      {"next_candidate", s.next_candidate},
  };
}

SessionState session(const json& j, const Rasters& r) {
  SessionState s;
  s.id = get<std::string>(j, "id");
  s.created_at = get<std::string>(j, "created_at");
  s.updated_at = get<std::string>(j, "updated_at");
  s.topic = get<std::string>(j, "topic");
  for (const auto& i : field(j, "ideas")) s.ideas.push_back(idea(i));
  if (!field(j, "typeface").is_null()) s.typeface = typeface(j["typeface"], r);
  if (!field(j, "selection").is_null()) {
    if (!s.typeface) throw Error(ErrorCode::parse_error, "selection without typeface");
    s.selection = selection(j["selection"], *s.typeface, r);
  }
  if (!field(j, "imagery_source").is_null()) s.imagery_source = r.get(j["imagery_source"]);
  if (!field(j, "imagery").is_null()) s.imagery = imagery(j["imagery"], r);
  s.flags = flags(field(j, "flags"));
  s.priors = design_priors(field(j, "priors"), r);
  const auto& g = field(j, "generation");
  s.generation = {get<std::string>(g, "prompt"), get<std::string>(g, "negative_prompt"), get<double>(g, "strength"),
                  get<int>(g, "rounds"),         get<int>(g, "candidates_per_round"),    get<std::uint64_t>(g, "seed")};
  s.generation_count = get<int>(j, "generation_count");
  s.warnings = get<std::vector<std::string>>(j, "warnings");
  for (const auto& c : field(j, "gallery"))
    s.gallery.push_back({get<std::string>(c, "id"), candidate(c, r),
                         candidate_origin_from_string(get<std::string>(c, "origin")), get<int>(c, "generation")});
  s.feedback = feedback(field(j, "feedback"));
  for (const auto& h : field(j, "spectrum_history"))
    s.spectrum_history.push_back(
        {get<std::string>(h, "candidate_id"), position(field(h, "position")), get_opt<double>(h, "target")});
  s.current = get_opt<std::string>(j, "current");
  if (!field(j, "design").is_null()) s.design = design(j["design"]);
  s.design_source = get_opt<std::string>(j, "design_source");
  s.next_seed = get<std::uint64_t>(j, "next_seed");
  s.next_candidate = get<int>(j, "next_candidate");
  return s;
}

json error(const Error& e) {
  json body = {{"code", to_string(e.code())}, {"message", e.what()}, {"retryable", e.retryable()}};
  if (!e.backend().empty()) body["backend"] = e.backend();
  return {{"error", body}};
}

}  // namespace typeblend::wire
