#include "typeblend/pipeline.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "typeblend/imagery.hpp"
#include "typeblend/spectrum.hpp"
#include "typeblend/vector.hpp"
#include "wire.hpp"

namespace typeblend {

using wire::json;

EnvLookup process_env() {
  return [](const char* name) -> std::optional<std::string> {
    const char* v = std::getenv(name);
    if (!v || !*v) return std::nullopt;
    return std::string(v);
  };
}

namespace {

bool parse_bool(const std::string& field, const std::string& v) {
  std::string s = v;
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  if (s == "1" || s == "true" || s == "yes" || s == "on") return true;
  if (s == "0" || s == "false" || s == "no" || s == "off") return false;
  throw ConfigError(field, "expected a boolean, got '" + v + "'");
}

std::uint64_t parse_seed(const std::string& field, const std::string& v) {
  try {
    std::size_t pos = 0;
    const auto n = std::stoull(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return n;
  } catch (const std::exception&) {
    throw ConfigError(field, "expected a non-negative integer, got '" + v + "'");
  }
}

template <class T>
T file_value(const json& j, const char* key, T fallback) {
  if (!j.contains(key) || j[key].is_null()) return fallback;
  try {
    return j[key].get<T>();
  } catch (const json::exception&) {
    throw ConfigError(key, "has the wrong type");
  }
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::filesystem::path& p) {
  return p.is_absolute() || p.empty() ? p : base / p;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
  if (!out) throw Error(ErrorCode::io_error, "cannot write " + path.string());
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

}  // namespace

PipelineConfig load_pipeline_config(const std::filesystem::path& file, const CliOverrides& cli,
                                    const std::filesystem::path& default_data_dir, const EnvLookup& env) {
  std::ifstream in(file);
  if (!in) throw ConfigError("config", "cannot open " + file.string());
  std::stringstream ss;
  ss << in.rdbuf();
  json j;
  try {
    j = json::parse(ss.str());
  } catch (const json::exception& e) {
    throw ConfigError("config", std::string("not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config", "top level must be an object");
  const auto base = std::filesystem::absolute(file).parent_path();

  PipelineConfig c;
  c.text = file_value<std::string>(j, "text", "");
  if (c.text.empty()) throw ConfigError("text", "missing or empty");
  c.font_id = file_value<std::string>(j, "font", "");
  if (c.font_id.empty()) throw ConfigError("font", "missing or empty");
  c.canvas_size = file_value<int>(j, "canvas_size", kDefaultCanvasSize);
  if (c.canvas_size < 16) throw ConfigError("canvas_size", "must be at least 16");
  try {
    if (j.contains("boxes"))
      for (const auto& b : j["boxes"]) c.boxes.push_back(wire::rect(b));
    c.mapping = glyph::mapping_from_string(file_value<std::string>(j, "mapping", "one_to_one"));
  } catch (const Error& e) {
    throw ConfigError("boxes", e.what());
  }

  const auto image = file_value<std::string>(j, "image", "");
  if (image.empty()) throw ConfigError("image", "missing; name the imagery file to blend");
  c.image = resolve(base, image);
  if (!std::filesystem::exists(c.image)) throw ConfigError("image", "file not found: " + c.image.string());
  try {
    if (j.contains("prompts"))
      for (const auto& p : j["prompts"]) c.prompts.push_back(wire::prompt(p));
  } catch (const Error& e) {
    throw ConfigError("prompts", e.what());
  }
  if (c.prompts.empty()) throw ConfigError("prompts", "at least one point or box prompt is needed to select imagery");

  c.prompt = file_value<std::string>(j, "prompt", "");
  c.negative_prompt = file_value<std::string>(j, "negative_prompt", "");
  try {
    if (j.contains("flags")) c.flags = wire::flags(j["flags"]);
  } catch (const Error& e) {
    throw ConfigError("flags", e.what());
  }
  c.strength = file_value<double>(j, "strength", backends::kDefaultStrength);
  if (!(c.strength >= 0.0 && c.strength <= 1.0)) throw ConfigError("strength", "must lie in [0, 1]");
  c.rounds = file_value<int>(j, "rounds", blend::kDefaultRounds);
  if (c.rounds < 1) throw ConfigError("rounds", "must be positive");
  c.candidates_per_round = file_value<int>(j, "candidates_per_round", blend::kDefaultCandidatesPerRound);
  if (c.candidates_per_round < 1) throw ConfigError("candidates_per_round", "must be positive");
  c.discrimination.lambda = file_value<double>(j, "lambda", blend::kDefaultLambda);
  if (!(c.discrimination.lambda >= 0.0)) throw ConfigError("lambda", "must be non-negative");
  try {
    c.discrimination.variance = blend::variance_mode_from_string(file_value<std::string>(j, "variance", "within_candidate"));
  } catch (const Error& e) {
    throw ConfigError("variance", e.what());
  }

  // seed
  if (cli.seed) c.seed = *cli.seed;
  else if (auto v = env("TYPEBLEND_SEED")) c.seed = parse_seed("TYPEBLEND_SEED", *v);
  else if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned()) throw ConfigError("seed", "must be a non-negative integer");
    c.seed = j["seed"].get<std::uint64_t>();
  }

  // out
  if (cli.out) c.out = *cli.out;
  else if (auto v = env("TYPEBLEND_OUT")) c.out = *v;
  else if (j.contains("out")) c.out = resolve(base, file_value<std::string>(j, "out", ""));

  // backends
  if (cli.mock_backends) c.mock_backends = *cli.mock_backends;
  else if (auto v = env("TYPEBLEND_MOCK_BACKENDS")) c.mock_backends = parse_bool("TYPEBLEND_MOCK_BACKENDS", *v);
  else if (j.contains("backends")) {
    const auto b = file_value<std::string>(j, "backends", "");
    if (b != "mock" && b != "remote") throw ConfigError("backends", "must be \"mock\" or \"remote\"");
    c.mock_backends = b == "mock";
  } else {
    c.mock_backends = !(env("BACKEND_GENERATE_URL") || env("BACKEND_EMBED_URL") || env("BACKEND_CAPTION_URL") ||
                        env("BACKEND_SEGMENT_URL"));
  }

  // data paths
  const std::filesystem::path data = env("TYPEBLEND_DATA_DIR").value_or(default_data_dir.string());
  auto path_setting = [&](const char* env_name, const char* key, const std::filesystem::path& fallback) {
    if (auto v = env(env_name)) return std::filesystem::path(*v);
    if (j.contains(key)) return resolve(base, file_value<std::string>(j, key, ""));
    return fallback;
  };
  c.fonts_dir = path_setting("TYPEBLEND_FONTS_DIR", "fonts_dir", data / "fonts");
  c.style_db = path_setting("TYPEBLEND_STYLE_DB", "style_db", data / "styles.ndjson");
  c.mock_fixtures = path_setting("TYPEBLEND_MOCK_FIXTURES", "mock_fixtures", data / "mock_fixtures.json");
  return c;
}

backends::Backends make_backends(bool mock, const std::filesystem::path& mock_fixtures) {
  if (!mock) return backends::make_remote_backends(backends::RemoteConfig::from_env());
  const auto fixtures = std::filesystem::exists(mock_fixtures) ? backends::MockFixtures::load(mock_fixtures)
                                                               : backends::MockFixtures{};
  return backends::make_mock_backends(fixtures);
}

PipelineSummary run_pipeline(const PipelineConfig& cfg, const backends::Backends& be) {
  PipelineSummary summary;
  const auto& out = cfg.out;
  std::filesystem::create_directories(out);
  auto note = [&](const std::filesystem::path& rel) { summary.files.push_back(rel); };
  auto png = [&](const Image& img, const std::filesystem::path& rel) {
    std::filesystem::create_directories((out / rel).parent_path());
    write_png(img, out / rel);
    note(rel);
  };
  auto text = [&](const std::string& s, const std::filesystem::path& rel) {
    write_text(out / rel, s);
    note(rel);
  };

  // typeface
  const glyph::FontLibrary fonts(cfg.fonts_dir);
  const auto tf = glyph::render_typeface(cfg.text, cfg.font_id, cfg.canvas_size, fonts);
  std::vector<Rect> boxes = cfg.boxes;
  if (boxes.empty()) boxes.push_back({0, 0, cfg.canvas_size, cfg.canvas_size});
  const auto sel = glyph::select_region(tf, boxes, cfg.mapping);
  const Image selected = glyph::typeface_image(sel, glyph::Part::selected);
  png(selected, "typeface.png");
  png(sel.remainder_mask.any() ? glyph::typeface_image(sel, glyph::Part::remainder)
                               : Image(cfg.canvas_size, cfg.canvas_size, kWhite),
      "remainder.png");

  // imagery
  const auto img = read_image(cfg.image);
  const auto imagery_sel = imagery::add_selection(img, cfg.prompts, *be.segmenter);
  png(imagery::imagery_image(imagery_sel, imagery::Background::transparent), "imagery_cutout.png");

  // priors
  blend::BlendRequest req;
  req.typeface = selected;
  req.imagery = imagery_sel;
  req.user_prompt = cfg.prompt;
  req.negative_prompt = cfg.negative_prompt;
  req.flags = cfg.flags;
  req.strength = cfg.strength;
  req.rounds = cfg.rounds;
  req.candidates_per_round = cfg.candidates_per_round;
  req.seed = cfg.seed;
  json priors_json = {{"flags", wire::flags(cfg.flags)}};
  if (cfg.flags.use_semantics) {
    const auto db = priors::load_style_db(cfg.style_db);
    req.priors.semantics = priors::extract_semantics(imagery_sel, db, *be.captioner, *be.embedder);
    priors_json["semantics"] = wire::semantics(*req.priors.semantics);
  }
  if (cfg.flags.use_color) {
    req.priors.color = priors::extract_colors(imagery_sel);
    json colors = json::array();
    for (const auto& c : req.priors.color->colors) colors.push_back(wire::color(c));
    priors_json["color"] = {{"colors", colors}, {"palette_image", "palette.png"}};
    png(req.priors.color->palette_image, "palette.png");
  }
  if (cfg.flags.use_shape) {
    req.priors.shape = priors::deform_typeface(sel, priors::sample_contour(imagery_sel));
    priors_json["shape"] = wire::shape_prior(*req.priors.shape);
    priors_json["shape"]["image"] = "shape.png";
    png(blend::init_image(req), "shape.png");
  }
  text(dump(priors_json), "priors.json");

  // generation
  const auto res = blend::run_blend(req, be, cfg.discrimination);
  summary.warnings = res.warnings;
  for (std::size_t r = 0; r < res.winners.size(); ++r) {
    const auto& w = res.winners[r];
    const int number = w.round + 1;
    const std::string stem = "candidates/round_" + std::to_string(number);
    png(w.image, stem + ".png");
    json all = json::array();
    for (const auto& c : res.rounds[r]) {
      all.push_back(wire::scores(c));
      all.back()["round"] = number;
    }
    json side = wire::scores(w);
    side["round"] = number;
    side["image"] = "round_" + std::to_string(number) + ".png";
    side["round_candidates"] = all;
    text(dump(side), stem + ".json");
  }
  if (res.winners.empty()) throw Error(ErrorCode::invalid_input, "no round completed");
  const std::size_t best = blend::select_winner(res.winners);
  summary.best_round = res.winners[best].round + 1;

  // logo and vector design
  const Image logo = glyph::composite(res.winners[best].image, sel);
  png(logo, "logo.png");
  const auto design = vector::vectorize(logo);
  text(vector::export_svg(design), "design.svg");
  text(dump(wire::design(design)), "design.json");

  // evaluation
  const std::string desc = req.priors.semantics && !req.priors.semantics->scene.empty()
                               ? req.priors.semantics->scene
                               : be.captioner->caption(imagery::imagery_image(imagery_sel, imagery::Background::white));
  json evals = json::array();
  for (std::size_t r = 0; r < res.winners.size(); ++r) {
    const auto pos = spectrum::evaluate(*be.embedder, res.winners[r].image, cfg.text, desc);
    evals.push_back({{"round", res.winners[r].round + 1}, {"seed", res.winners[r].seed}, {"position", wire::position(pos)}});
  }
  text(dump({{"typeface_text", cfg.text}, {"imagery_description", desc}, {"winners", evals},
             {"best_round", summary.best_round}}),
       "evaluation.json");

  text(dump({{"text", cfg.text},
             {"font", cfg.font_id},
             {"canvas_size", cfg.canvas_size},
             {"seed", cfg.seed},
             {"strength", cfg.strength},
             {"rounds", cfg.rounds},
             {"candidates_per_round", cfg.candidates_per_round},
             {"lambda", cfg.discrimination.lambda},
             {"variance", blend::to_string(cfg.discrimination.variance)},
             {"flags", wire::flags(cfg.flags)},
             {"prompt", blend::compose_prompt(req)},
             {"warnings", res.warnings}}),
       "run.json");

  std::sort(summary.files.begin(), summary.files.end());
  return summary;
}

}  // namespace typeblend
