#include "typeblend/service.hpp"

#include <atomic>
#include <mutex>
#include <optional>

#include <httplib.h>

#include "typeblend/error.hpp"
#include "typeblend/imagery.hpp"
#include "typeblend/vector.hpp"
#include "wire.hpp"

namespace typeblend {

using wire::json;

int http_status(const Error& e) {
  if (!e.backend().empty()) return 502;
  switch (e.code()) {
    case ErrorCode::not_found: return 404;
    case ErrorCode::conflict: return 409;
    case ErrorCode::backend_unreachable:
    case ErrorCode::backend_timeout: return 502;
    case ErrorCode::io_error: return 500;
    default: return 422;
  }
}

namespace {

// Decoding failures of the request itself.
struct BadRequest : Error {
  explicit BadRequest(const Error& e) : Error(e) {}
};

template <class F>
auto decode(F&& f) {
  try {
    return f();
  } catch (const BadRequest&) {
    throw;
  } catch (const Error& e) {
    throw BadRequest(e);
  } catch (const json::exception& e) {
    throw BadRequest(Error(ErrorCode::invalid_input, e.what()));
  }
}

HttpResponse json_response(const json& j, int status = 200) { return {status, "application/json", j.dump()}; }

HttpResponse error_response(const Error& e, int status) { return json_response(wire::error(e), status); }

std::vector<std::string> split_path(std::string_view path) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < path.size()) {
    if (path[i] == '/') {
      ++i;
      continue;
    }
    const auto j = path.find('/', i);
    out.emplace_back(path.substr(i, j == std::string_view::npos ? std::string_view::npos : j - i));
    if (j == std::string_view::npos) break;
    i = j;
  }
  return out;
}

std::string next_candidate_id(SessionState& s) { return "c" + std::to_string(s.next_candidate++); }

std::size_t best_index(std::span<const blend::ScoredCandidate> c) { return blend::select_winner(c); }

json gallery_entry(const SessionState& s, const GalleryItem& g, wire::Rasters& r) {
  json j = wire::candidate(g.candidate, r);
  j["id"] = g.id;
  j["origin"] = to_string(g.origin);
  j["generation"] = g.generation;
  const auto& f = s.feedback;
  j["status"] = std::find(f.positives.begin(), f.positives.end(), g.id) != f.positives.end()   ? "kept"
                : std::find(f.negatives.begin(), f.negatives.end(), g.id) != f.negatives.end() ? "deleted"
                                                                                                : "live";
  return j;
}

Image part_or_blank(const glyph::TypefaceSelection& sel, glyph::Part part) {
  const Mask& m = part == glyph::Part::selected ? sel.selected_mask : sel.remainder_mask;
  if (!m.any()) return Image(m.width(), m.height(), kWhite);
  return glyph::typeface_image(sel, part);
}

}  // namespace

struct Service::Impl {
  Service& svc;
  std::mutex lazy_mutex;
  std::unique_ptr<glyph::FontLibrary> fonts;
  std::optional<std::vector<priors::StyleEntry>> styles;

  explicit Impl(Service& s) : svc(s) {}

  const glyph::FontLibrary& font_library() {
    std::lock_guard lock(lazy_mutex);
    if (!fonts) fonts = std::make_unique<glyph::FontLibrary>(svc.config_.fonts_dir);
    return *fonts;
  }

  const std::vector<priors::StyleEntry>& style_db() {
    std::lock_guard lock(lazy_mutex);
    if (!styles) {
      if (svc.config_.style_db.empty() || !std::filesystem::exists(svc.config_.style_db))
        throw Error(ErrorCode::invalid_argument,
                    "style database not available; the semantics prior needs one (see the style-db command)");
      styles = priors::load_style_db(svc.config_.style_db);
    }
    return *styles;
  }

  const backends::Backends& be() const { return svc.backends_; }

  // ---------------------------------------------------------------------------

  void require_inputs(const SessionState& s, bool need_selection) const {
    if (!s.imagery) throw Error(ErrorCode::conflict, "no imagery selection yet: upload an image and segment it");
    if (need_selection && !s.selection)
      throw Error(ErrorCode::conflict, "no typeface selection yet: render a typeface and select a region");
  }

  void compute_priors(SessionState& s, const priors::PriorSelection& want, bool recompute) {
    if (!want.any()) return;
    require_inputs(s, want.use_shape);
    if (want.use_semantics && (recompute || !s.priors.semantics))
      s.priors.semantics = priors::extract_semantics(*s.imagery, style_db(), *be().captioner, *be().embedder);
    if (want.use_color && (recompute || !s.priors.color)) s.priors.color = priors::extract_colors(*s.imagery);
    if (want.use_shape && (recompute || !s.priors.shape))
      s.priors.shape = priors::deform_typeface(*s.selection, priors::sample_contour(*s.imagery));
  }

  blend::BlendRequest make_request(const SessionState& s, const priors::PriorSelection& flags) const {
    require_inputs(s, true);
    blend::BlendRequest req;
    req.typeface = glyph::typeface_image(*s.selection, glyph::Part::selected);
    req.imagery = *s.imagery;
    req.user_prompt = s.generation.prompt;
    req.negative_prompt = s.generation.negative_prompt;
    req.flags = flags;
    req.priors = s.priors;
    req.strength = s.generation.strength;
    req.rounds = s.generation.rounds;
    req.candidates_per_round = s.generation.candidates_per_round;
    req.seed = s.generation.seed;
    return req;
  }

  std::string imagery_description(const SessionState& s) const {
    if (s.priors.semantics && !s.priors.semantics->scene.empty()) return s.priors.semantics->scene;
    require_inputs(s, false);
    return be().captioner->caption(imagery::imagery_image(*s.imagery, imagery::Background::white));
  }

  std::string typeface_text(const SessionState& s) const {
    if (!s.typeface) throw Error(ErrorCode::conflict, "no typeface rendered yet");
    return s.typeface->text;
  }

  std::string pick_candidate(const SessionState& s, const json& body) const {
    if (auto id = decode([&] { return wire::get_opt<std::string>(body, "candidate_id"); })) {
      s.at(*id);
      return *id;
    }
    if (!s.current) throw Error(ErrorCode::conflict, "no current candidate: generate first or pass candidate_id");
    return *s.current;
  }

  // ---------------------------------------------------------------------------

  HttpResponse create_session() {
    const auto id = svc.store_.create();
    return json_response({{"id", id}}, 201);
  }

  HttpResponse get_session(const std::string& id) {
    std::string body;
    svc.store_.read(id, [&](const SessionState& s) { body = session_to_json(s); });
    return {200, "application/json", body};
  }

  HttpResponse ideate(const std::string& id, const json& body) {
    const auto [topic, n] = decode([&] {
      return std::pair{wire::get<std::string>(body, "topic"), wire::get_opt<int>(body, "n").value_or(kDefaultIdeaCount)};
    });
    const auto ideas = be().ideator->ideate(topic, n);
    svc.store_.mutate(id, [&](SessionState& s) {
      s.topic = topic;
      s.ideas = ideas;
    });
    json list = json::array();
    for (const auto& i : ideas) list.push_back(wire::idea(i));
    return json_response({{"topic", topic}, {"ideas", list}});
  }

  HttpResponse typeface(const std::string& id, const json& body) {
    const auto [text, font_id, size] = decode([&] {
      return std::tuple{wire::get<std::string>(body, "text"), wire::get<std::string>(body, "font_id"),
                        wire::get_opt<int>(body, "canvas_size").value_or(svc.config_.canvas_size)};
    });
    auto tf = glyph::render_typeface(text, font_id, size, font_library());
    json out;
    svc.store_.mutate(id, [&](SessionState& s) {
      s.typeface = tf;
      s.selection.reset();
      s.priors.shape.reset();
      wire::InlineRasters r;
      out = wire::typeface(tf, r);
    });
    return json_response(out);
  }

  HttpResponse select(const std::string& id, const json& body) {
    const auto [boxes, mapping] = decode([&] {
      std::vector<Rect> b;
      for (const auto& j : wire::field(body, "boxes")) b.push_back(wire::rect(j));
      const auto m = glyph::mapping_from_string(wire::get_opt<std::string>(body, "mapping").value_or("one_to_one"));
      return std::pair{b, m};
    });
    json out;
    svc.store_.mutate(id, [&](SessionState& s) {
      if (!s.typeface) throw Error(ErrorCode::conflict, "no typeface rendered yet");
      auto sel = glyph::select_region(*s.typeface, boxes, mapping);
      wire::InlineRasters r;
      out = wire::selection(sel, r);
      out["selected_image"] = r.put(part_or_blank(sel, glyph::Part::selected));
      out["remainder_image"] = r.put(part_or_blank(sel, glyph::Part::remainder));
      s.selection = std::move(sel);
      s.priors.shape.reset();
    });
    return json_response(out);
  }

  HttpResponse upload_imagery(const std::string& id, const json& body) {
    const Image img = decode([&] { return wire::InlineRasters().get(wire::field(body, "image")); });
    if (img.empty()) throw BadRequest(Error(ErrorCode::invalid_input, "image is empty"));
    svc.store_.mutate(id, [&](SessionState& s) {
      s.imagery_source = img;
      s.imagery.reset();
      s.priors = {};
    });
    return json_response({{"width", img.width()}, {"height", img.height()}});
  }

  HttpResponse segment(const std::string& id, const json& body) {
    const auto [prompts, extend] = decode([&] {
      std::vector<backends::SegmentPrompt> ps;
      for (const auto& j : wire::field(body, "prompts")) ps.push_back(wire::prompt(j));
      return std::pair{ps, wire::get_opt<bool>(body, "extend").value_or(false)};
    });
    json out;
    svc.store_.mutate(id, [&](SessionState& s) {
      if (!s.imagery_source) throw Error(ErrorCode::conflict, "no image uploaded yet");
      auto sel = extend && s.imagery ? imagery::extend_selection(*s.imagery, prompts, *be().segmenter)
                                     : imagery::add_selection(*s.imagery_source, prompts, *be().segmenter);
      wire::InlineRasters r;
      out = {{"mask", r.put_mask(sel.mask)},
             {"cutout", r.put(sel.cutout)},
             {"objects", sel.object_masks.size()},
             {"warnings", sel.warnings}};
      s.imagery = std::move(sel);
      s.priors = {};
    });
    return json_response(out);
  }

  HttpResponse compute_priors_endpoint(const std::string& id, const json& body) {
    const auto flags = decode([&] { return wire::flags(wire::field(body, "flags")); });
    json out;
    svc.store_.mutate(id, [&](SessionState& s) {
      compute_priors(s, flags, true);
      s.flags = flags;
      wire::InlineRasters r;
      out = {{"flags", wire::flags(flags)}, {"priors", wire::design_priors(s.priors, r)}};
    });
    return json_response(out);
  }

  HttpResponse generate(const std::string& id, const json& body) {
    struct Args {
      std::optional<std::string> prompt, negative;
      std::optional<double> strength;
      std::optional<priors::PriorSelection> flags;
      std::optional<std::uint64_t> seed;
      std::optional<int> rounds, per_round;
    };
    const Args a = decode([&] {
      Args x;
      x.prompt = wire::get_opt<std::string>(body, "prompt");
      x.negative = wire::get_opt<std::string>(body, "negative_prompt");
      x.strength = wire::get_opt<double>(body, "strength");
      if (body.contains("flags") && !body["flags"].is_null()) x.flags = wire::flags(body["flags"]);
      x.seed = wire::get_opt<std::uint64_t>(body, "seed");
      x.rounds = wire::get_opt<int>(body, "rounds");
      x.per_round = wire::get_opt<int>(body, "candidates_per_round");
      return x;
    });
    json out;
    svc.store_.mutate(id, [&](SessionState& s) {
      auto& g = s.generation;
      g.prompt = a.prompt.value_or(g.prompt);
      g.negative_prompt = a.negative.value_or(g.negative_prompt);
      g.strength = a.strength.value_or(backends::kDefaultStrength);
      g.rounds = a.rounds.value_or(blend::kDefaultRounds);
      g.candidates_per_round = a.per_round.value_or(blend::kDefaultCandidatesPerRound);
      g.seed = a.seed.value_or(s.next_seed);
      if (a.flags) s.flags = *a.flags;
      compute_priors(s, s.flags, false);

      auto req = make_request(s, s.flags);
      req.validate();
      const auto res = spectrum::regenerate_with_feedback(req, s.feedback, s.gallery_images(), be(),
                                                          svc.config_.discrimination);
      ++s.generation_count;
      s.warnings = res.warnings;
      s.next_seed = g.seed + static_cast<std::uint64_t>(g.rounds) * g.candidates_per_round;
      wire::InlineRasters r;
      json cands = json::array();
      std::string best_id;
      const std::size_t best = best_index(res.winners);
      for (std::size_t i = 0; i < res.winners.size(); ++i) {
        GalleryItem item{next_candidate_id(s), res.winners[i], CandidateOrigin::generate, s.generation_count};
        if (i == best) best_id = item.id;
        s.gallery.push_back(item);
        cands.push_back(gallery_entry(s, s.gallery.back(), r));
      }
      s.current = best_id;
      out = {{"generation", s.generation_count}, {"candidates", cands}, {"warnings", res.warnings}};
    });
    return json_response(out);
  }

  HttpResponse feedback(const std::string& id, const std::string& cid, bool keep) {
    json out;
    svc.store_.mutate(id, [&](SessionState& s) {
      s.at(cid);
      const bool changed = keep ? s.feedback.keep(cid) : s.feedback.discard(cid);
      if (keep) s.current = cid;
      out = {{"id", cid},
             {"status", keep ? "kept" : "deleted"},
             {"changed", changed},
             {"feedback", wire::feedback(s.feedback)}};
    });
    return json_response(out);
  }

  HttpResponse evaluate(const std::string& id, const json& body) {
    json out;
    svc.store_.mutate(id, [&](SessionState& s) {
      const auto cid = pick_candidate(s, body);
      const auto pos = spectrum::evaluate(*be().embedder, s.at(cid).candidate.image, typeface_text(s),
                                          imagery_description(s), svc.config_.refine.tau);
      s.spectrum_history.push_back({cid, pos, std::nullopt});
      out = {{"candidate_id", cid}, {"position", wire::position(pos)}};
    });
    return json_response(out);
  }

  HttpResponse refine(const std::string& id, const json& body) {
    const double target = decode([&] { return wire::get<double>(body, "target_display"); });
    json out;
    svc.store_.mutate(id, [&](SessionState& s) {
      const auto cid = pick_candidate(s, body);
      const auto& parent = s.at(cid);
      const std::string text = typeface_text(s);
      const std::string desc = imagery_description(s);
      std::optional<spectrum::SpectrumPosition> pos;
      for (auto it = s.spectrum_history.rbegin(); it != s.spectrum_history.rend() && !pos; ++it)
        if (it->candidate_id == cid) pos = it->position;
      if (!pos) pos = spectrum::evaluate(*be().embedder, parent.candidate.image, text, desc, svc.config_.refine.tau);

      const auto req = make_request(s, s.flags);
      auto ctx = spectrum::make_refine_context(req, be(), text, desc);
      ctx.config = svc.config_.refine;
      ctx.seed = s.next_seed++;
      const auto res = spectrum::refine(parent.candidate.image, *pos, target, ctx);

      blend::ScoredCandidate c;
      c.image = res.image;
      c.s1 = blend::typeface_score(blend::init_image(req), c.image);
      c.s2 = blend::imagery_score(*be().embedder, imagery::imagery_image(req.imagery, imagery::Background::white),
                                  c.image);
      if (req.user_prompt.find_first_not_of(" \t\r\n") != std::string::npos)
        c.s3 = blend::prompt_score(*be().embedder, req.user_prompt, c.image);
      const blend::ScoreSet set = c.scores();
      c.f = blend::aggregate(std::span(&set, 1), svc.config_.discrimination)[0];
      c.round = parent.candidate.round;
      c.seed = ctx.seed;
      c.prompt = ctx.prompt;
      const int generation = parent.generation;

      GalleryItem item{next_candidate_id(s), std::move(c), CandidateOrigin::refine, generation};
      s.gallery.push_back(std::move(item));
      const auto& added = s.gallery.back();
      s.current = added.id;
      s.spectrum_history.push_back({added.id, res.position, target});
      wire::InlineRasters r;
      out = {{"parent", cid},
             {"candidate", gallery_entry(s, added, r)},
             {"position", wire::position(res.position)},
             {"direction", spectrum::to_string(res.direction)},
             {"strength", res.strength}};
    });
    return json_response(out);
  }

  HttpResponse vectorize(const std::string& id, const json& body) {
    json out;
    svc.store_.mutate(id, [&](SessionState& s) {
      const auto cid = pick_candidate(s, body);
      const auto palette = decode([&] {
        std::vector<Rgb> p;
        if (body.contains("palette") && !body["palette"].is_null())
          for (const auto& c : body["palette"]) p.push_back(wire::color(c));
        return p;
      });
      Image img = s.at(cid).candidate.image;
      if (s.selection && same_size(img, s.selection->remainder_mask)) img = glyph::composite(img, *s.selection);
      s.design = vector::vectorize(img, palette);
      s.design_source = cid;
      out = {{"candidate_id", cid}, {"design", wire::design(*s.design)}};
    });
    return json_response(out);
  }

  HttpResponse edit(const std::string& id, const json& body) {
    const auto cmd = decode([&] { return wire::edit_command(body); });
    json out;
    svc.store_.mutate(id, [&](SessionState& s) {
      if (!s.design) throw Error(ErrorCode::conflict, "no design yet: vectorize a candidate first");
      s.design = vector::apply_edit(*s.design, cmd);
      out = {{"design", wire::design(*s.design)}};
    });
    return json_response(out);
  }

  HttpResponse export_svg(const std::string& id) {
    std::string svg;
    svc.store_.read(id, [&](const SessionState& s) {
      if (!s.design) throw Error(ErrorCode::conflict, "no design yet: vectorize a candidate first");
      svg = vector::export_svg(*s.design);
    });
    return {200, "image/svg+xml", svg};
  }

  HttpResponse fonts_list() { return json_response({{"fonts", font_library().available()}}); }

  HttpResponse route(std::string_view method, std::string_view path, std::string_view raw_body) {
    const auto seg = split_path(path);
    const auto n = seg.size();
    auto body = [&] { return decode([&] { return wire::parse_body(raw_body); }); };
    auto not_allowed = [] {
      return error_response(Error(ErrorCode::invalid_input, "method not allowed"), 405);
    };

    if (n == 1 && seg[0] == "health") return json_response({{"status", "ok"}});
    if (n == 1 && seg[0] == "fonts") return method == "GET" ? fonts_list() : not_allowed();
    if (n == 0 || seg[0] != "sessions") throw Error(ErrorCode::not_found, "no route for " + std::string(path));
    if (n == 1) return method == "POST" ? create_session() : not_allowed();
    const std::string& id = seg[1];
    if (!svc.store_.contains(id)) throw Error(ErrorCode::not_found, "unknown session '" + id + "'");
    if (n == 2) return method == "GET" ? get_session(id) : not_allowed();

    const std::string& a = seg[2];
    if (n == 3 && a == "export.svg") return method == "GET" ? export_svg(id) : not_allowed();
    if (n == 4 && a == "gallery" && method == "DELETE") return feedback(id, seg[3], false);
    if (n == 5 && a == "gallery" && seg[4] == "keep")
      return method == "POST" ? feedback(id, seg[3], true) : not_allowed();
    if (n == 4 && a == "gallery") return not_allowed();

    const bool post = method == "POST";
    if (n == 3) {
      if (a == "ideate") return post ? ideate(id, body()) : not_allowed();
      if (a == "typeface") return post ? typeface(id, body()) : not_allowed();
      if (a == "imagery") return post ? upload_imagery(id, body()) : not_allowed();
      if (a == "priors") return post ? compute_priors_endpoint(id, body()) : not_allowed();
      if (a == "generate") return post ? generate(id, body()) : not_allowed();
      if (a == "evaluate") return post ? evaluate(id, body()) : not_allowed();
      if (a == "refine") return post ? refine(id, body()) : not_allowed();
      if (a == "vectorize") return post ? vectorize(id, body()) : not_allowed();
      if (a == "edit") return post ? edit(id, body()) : not_allowed();
    }
    if (n == 4 && a == "typeface" && seg[3] == "select") return post ? select(id, body()) : not_allowed();
    if (n == 4 && a == "imagery" && seg[3] == "segment") return post ? segment(id, body()) : not_allowed();
    throw Error(ErrorCode::not_found, "no route for " + std::string(path));
  }
};

Service::Service(ServiceConfig config, backends::Backends backends, SessionStore::Clock clock,
                 SessionStore::IdSource ids)
    : config_(std::move(config)),
      backends_(std::move(backends)),
      store_(config_.sessions_dir, std::move(clock), std::move(ids)),
      impl_(std::make_unique<Impl>(*this)) {
  if (!backends_.captioner || !backends_.embedder || !backends_.segmenter || !backends_.generator ||
      !backends_.ideator)
    throw Error(ErrorCode::invalid_argument, "service needs all five backends");
  config_.discrimination.validate();
}

Service::~Service() = default;

HttpResponse Service::handle(std::string_view method, std::string_view path, std::string_view body) {
  try {
    return impl_->route(method, path, body);
  } catch (const BadRequest& e) {
    return error_response(e, e.code() == ErrorCode::not_found ? 404 : 400);
  } catch (const Error& e) {
    return error_response(e, http_status(e));
  } catch (const std::exception& e) {
    return error_response(Error(ErrorCode::io_error, e.what()), 500);
  }
}

// ---------------------------------------------------------------------------

struct HttpServer::Impl {
  Service& service;
  httplib::Server server;
  std::string host;
  int port = 0;
  std::atomic<bool> bound{false};

  explicit Impl(Service& s) : service(s) {
    auto forward = [this](const httplib::Request& req, httplib::Response& res) {
      const auto r = service.handle(req.method, req.path, req.body);
      res.status = r.status;
      res.set_content(r.body, r.content_type.c_str());
    };
    server.Get(".*", forward);
    server.Post(".*", forward);
    server.Delete(".*", forward);
    server.Put(".*", forward);
    if (!service.config().static_dir.empty() && std::filesystem::is_directory(service.config().static_dir))
      server.set_mount_point("/", service.config().static_dir.string());
  }
};

HttpServer::HttpServer(Service& service) : impl_(std::make_unique<Impl>(service)) {}
HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
  impl_->host = host;
  if (port == 0) {
    impl_->port = impl_->server.bind_to_any_port(host);
  } else {
    impl_->port = impl_->server.bind_to_port(host, port) ? port : -1;
  }
  if (impl_->port < 0) throw Error(ErrorCode::io_error, "cannot bind " + host + ":" + std::to_string(port));
  impl_->bound = true;
  return impl_->port;
}

void HttpServer::listen() {
  if (!impl_->bound) throw Error(ErrorCode::invalid_argument, "bind before listen");
  impl_->server.listen_after_bind();
}

void HttpServer::stop() {
  if (impl_ && impl_->server.is_running()) impl_->server.stop();
}

bool HttpServer::running() const { return impl_->server.is_running(); }

}  // namespace typeblend
