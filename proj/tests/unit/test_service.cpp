#include <gtest/gtest.h>

#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <random>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "test_support.hpp"
#include "typeblend/error.hpp"
#include "typeblend/service.hpp"
#include "typeblend/session.hpp"
#include "typeblend/vector.hpp"

using namespace typeblend;
using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    static std::atomic<int> counter{0};
    path = fs::temp_directory_path() /
           ("typeblend-service-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

struct CaptureGenerator final : backends::Generator {
  mutable std::mutex mu;
  mutable std::vector<backends::GenerationParams> calls;
  std::vector<Image> generate(const backends::GenerationParams& p) const override {
    {
      std::lock_guard lock(mu);
      calls.push_back(p);
    }
    return backends::MockGenerator().generate(p);
  }
};

struct DownCaptioner final : backends::Captioner {
  std::string caption(const Image&) const override {
    throw Error(ErrorCode::backend_unreachable, "connection refused", "caption", true);
  }
};

struct DownGenerator final : backends::Generator {
  std::vector<Image> generate(const backends::GenerationParams&) const override {
    throw Error(ErrorCode::backend_timeout, "timed out after 3 attempts", "generate", true);
  }
};

// Deterministic clock: every reading advances one second.
SessionStore::Clock ticking_clock() {
  auto t = std::make_shared<std::chrono::system_clock::time_point>(std::chrono::sys_days{std::chrono::year{2024} / 5 / 1});
  return [t] {
    *t += std::chrono::seconds(1);
    return *t;
  };
}

SessionStore::IdSource counting_ids() {
  auto n = std::make_shared<int>(0);
  return [n] { return "s" + std::to_string(++*n); };
}

ServiceConfig config_for(const fs::path& dir) {
  ServiceConfig c;
  c.sessions_dir = dir;
  c.fonts_dir = tbtest::fonts_dir();
  c.style_db = tbtest::data_dir() / "styles.ndjson";
  c.canvas_size = 128;
  return c;
}

struct Harness {
  std::shared_ptr<CaptureGenerator> gen = std::make_shared<CaptureGenerator>();
  backends::Backends be;
  std::unique_ptr<Service> svc;

  explicit Harness(const fs::path& dir, backends::Backends overrides = {}) {
    be = backends::make_mock_backends(tbtest::fixtures());
    be.generator = gen;
    if (overrides.captioner) be.captioner = overrides.captioner;
    if (overrides.generator) be.generator = overrides.generator;
    svc = std::make_unique<Service>(config_for(dir), be, ticking_clock(), counting_ids());
  }

  HttpResponse call(std::string_view method, const std::string& path, const json& body = nullptr) {
    return svc->handle(method, path, body.is_null() ? std::string() : body.dump());
  }
  json ok(std::string_view method, const std::string& path, const json& body = nullptr, int status = 200) {
    const auto r = call(method, path, body);
    EXPECT_EQ(r.status, status) << method << " " << path << ": " << r.body;
    return json::parse(r.body);
  }
  std::string create() { return ok("POST", "/sessions", nullptr, 201).at("id"); }

  // Typeface, selection, imagery and segmentation; ready to generate.
  std::string prepared() {
    const auto id = create();
    const std::string s = "/sessions/" + id;
    ok("POST", s + "/typeface", {{"text", "E"}, {"font_id", "DejaVuSansMono"}});
    ok("POST", s + "/typeface/select", {{"boxes", json::array({json::array({0, 0, 128, 128})})}});
    ok("POST", s + "/imagery", {{"image", image_to_base64_png(tbtest::vase_image())}});
    ok("POST", s + "/imagery/segment",
       {{"prompts",
         json::array({{{"kind", "point"}, {"coords", {80, 110}}, {"label", "foreground"}},
                      {{"kind", "point"}, {"coords", {80, 26}}, {"label", "foreground"}}})}});
    return id;
  }
};

json error_of(const HttpResponse& r) { return json::parse(r.body).at("error"); }

}  // namespace

TEST(Service, HealthAndFonts) {
  TempDir dir;
  Harness h(dir.path);
  EXPECT_EQ(h.ok("GET", "/health")["status"], "ok");
  const auto fonts = h.ok("GET", "/fonts")["fonts"];
  EXPECT_NE(std::find(fonts.begin(), fonts.end(), "ipaexg"), fonts.end());
}

TEST(Service, CreateAndGetSession) {
  TempDir dir;
  Harness h(dir.path);
  const auto id = h.create();
  EXPECT_EQ(id, "s1");
  const auto s = h.ok("GET", "/sessions/" + id);
  EXPECT_EQ(s["id"], id);
  EXPECT_FALSE(s["created_at"].get<std::string>().empty());
  EXPECT_EQ(s["gallery"].size(), 0u);
  EXPECT_NE(h.create(), id);
}

TEST(Service, StatusCodes) {
  TempDir dir;
  Harness h(dir.path);
  const auto id = h.create();
  const std::string s = "/sessions/" + id;

  auto r = h.call("GET", "/sessions/nope");
  EXPECT_EQ(r.status, 404);
  EXPECT_EQ(error_of(r)["code"], "not-found");
  EXPECT_EQ(h.call("POST", "/nowhere").status, 404);
  EXPECT_EQ(h.call("POST", s + "/bogus").status, 404);
  EXPECT_EQ(h.call("DELETE", s).status, 405);
  EXPECT_EQ(h.call("GET", s + "/generate").status, 405);

  EXPECT_EQ(h.svc->handle("POST", s + "/typeface", "{not json").status, 400);
  EXPECT_EQ(h.call("POST", s + "/typeface", {{"text", "E"}}).status, 400);
  EXPECT_EQ(h.call("POST", s + "/typeface", {{"text", 3}, {"font_id", "ipaexg"}}).status, 400);

  r = h.call("POST", s + "/typeface", {{"text", "   "}, {"font_id", "ipaexg"}});
  EXPECT_EQ(r.status, 422);
  EXPECT_EQ(error_of(r)["code"], "empty-text");
  r = h.call("POST", s + "/typeface", {{"text", "E"}, {"font_id", "no-such-font"}});
  EXPECT_EQ(r.status, 422);
  EXPECT_EQ(error_of(r)["code"], "unknown-font");

  r = h.call("GET", s + "/export.svg");
  EXPECT_EQ(r.status, 409);
  EXPECT_EQ(h.call("POST", s + "/edit", {{"target_id", "e1"}, {"op", "delete"}}).status, 409);
  EXPECT_EQ(h.call("POST", s + "/generate", json::object()).status, 409);
  EXPECT_EQ(h.call("POST", s + "/evaluate", json::object()).status, 409);
}

TEST(Service, InvariantViolationsAre422) {
  TempDir dir;
  Harness h(dir.path);
  const auto id = h.prepared();
  const std::string s = "/sessions/" + id;
  auto r = h.call("POST", s + "/generate", {{"strength", 1.5}});
  EXPECT_EQ(r.status, 422) << r.body;
  r = h.call("POST", s + "/typeface/select", {{"boxes", json::array({json::array({0, 0, 4, 4})})}});
  EXPECT_EQ(r.status, 422) << r.body;
  EXPECT_EQ(error_of(r)["code"], "empty-selection");
  r = h.call("POST", s + "/ideate", {{"topic", "  "}});
  EXPECT_EQ(r.status, 422);
}

TEST(Service, BackendFailureIs502WithName) {
  TempDir dir;
  backends::Backends down;
  down.captioner = std::make_shared<DownCaptioner>();
  Harness h(dir.path, down);
  const auto id = h.prepared();
  auto r = h.call("POST", "/sessions/" + id + "/priors", {{"flags", {{"semantics", true}}}});
  EXPECT_EQ(r.status, 502);
  const auto e = error_of(r);
  EXPECT_EQ(e["backend"], "caption");
  EXPECT_EQ(e["code"], "backend-unreachable");
  EXPECT_TRUE(e["retryable"].get<bool>());

  TempDir dir2;
  backends::Backends gen_down;
  gen_down.generator = std::make_shared<DownGenerator>();
  Harness h2(dir2.path, gen_down);
  const auto id2 = h2.prepared();
  r = h2.call("POST", "/sessions/" + id2 + "/generate", {{"seed", 1}, {"prompt", "spring"}});
  EXPECT_EQ(r.status, 502);
  EXPECT_EQ(error_of(r)["backend"], "generate");
}

TEST(Service, HttpStatusMapping) {
  EXPECT_EQ(http_status(Error(ErrorCode::not_found, "x")), 404);
  EXPECT_EQ(http_status(Error(ErrorCode::conflict, "x")), 409);
  EXPECT_EQ(http_status(Error(ErrorCode::invalid_argument, "x")), 422);
  EXPECT_EQ(http_status(Error(ErrorCode::empty_selection, "x")), 422);
  EXPECT_EQ(http_status(Error(ErrorCode::backend_timeout, "x", "embed", true)), 502);
  EXPECT_EQ(http_status(Error(ErrorCode::parse_error, "bad reply", "ideate", false)), 502);
}

TEST(Service, Ideate) {
  TempDir dir;
  Harness h(dir.path);
  const auto id = h.create();
  const auto r = h.ok("POST", "/sessions/" + id + "/ideate", {{"topic", "Hawaii"}});
  ASSERT_EQ(r["ideas"].size(), 5u);
  EXPECT_EQ(r["ideas"][0]["imagery"], "Hula Dancer");
  EXPECT_FALSE(r["ideas"][0]["explanation"].get<std::string>().empty());
  EXPECT_EQ(h.ok("POST", "/sessions/" + id + "/ideate", {{"topic", "spring"}, {"n", 2}})["ideas"].size(), 2u);
  EXPECT_EQ(h.ok("GET", "/sessions/" + id)["topic"], "spring");
}

TEST(Service, TypefaceAndSelection) {
  TempDir dir;
  Harness h(dir.path);
  const auto id = h.create();
  const std::string s = "/sessions/" + id;
  const auto tf = h.ok("POST", s + "/typeface", {{"text", "E"}, {"font_id", "DejaVuSansMono"}});
  const Image canvas = h.svc->store().snapshot(id).typeface->canvas;
  EXPECT_EQ(canvas.width(), 128);
  EXPECT_EQ(tf["text"], "E");

  const auto sel = h.ok("POST", s + "/typeface/select", {{"boxes", json::array({json::array({0, 0, 64, 128})})}});
  ASSERT_TRUE(sel.contains("selected_image"));
  ASSERT_TRUE(sel.contains("remainder_image"));
  const auto state = h.svc->store().snapshot(id);
  ASSERT_TRUE(state.selection);
  // selected and remainder partition the glyph
  const auto& a = state.selection->selected_mask;
  const auto& b = state.selection->remainder_mask;
  for (int y = 0; y < 128; ++y)
    for (int x = 0; x < 128; ++x) {
      EXPECT_FALSE(a.get(x, y) && b.get(x, y));
      if (x >= 64) { EXPECT_FALSE(a.get(x, y)); }
    }
  EXPECT_TRUE(a.any());
  EXPECT_TRUE(b.any());
}

TEST(Service, ImagerySegmentation) {
  TempDir dir;
  Harness h(dir.path);
  const auto id = h.create();
  const std::string s = "/sessions/" + id;
  EXPECT_EQ(h.call("POST", s + "/imagery/segment", {{"prompts", json::array()}}).status, 409);
  const auto up = h.ok("POST", s + "/imagery", {{"image", image_to_base64_png(tbtest::vase_image())}});
  EXPECT_EQ(up["width"], 160);
  EXPECT_EQ(h.call("POST", s + "/imagery", {{"image", "%%%"}}).status, 400);
  const auto seg = h.ok("POST", s + "/imagery/segment",
                        {{"prompts", json::array({{{"kind", "point"}, {"coords", {80, 110}}, {"label", "foreground"}}})}});
  const Mask m = mask_from_base64(seg["mask"].get<std::string>());
  EXPECT_TRUE(m.get(80, 110));
  EXPECT_FALSE(m.get(2, 2));
  const Image cut = image_from_base64(seg["cutout"].get<std::string>());
  EXPECT_EQ(cut.rgb(80, 110), tbtest::kVaseYellow);
}

TEST(Service, Priors) {
  TempDir dir;
  Harness h(dir.path);
  const auto id = h.prepared();
  const auto r = h.ok("POST", "/sessions/" + id + "/priors",
                      {{"flags", {{"semantics", true}, {"color", true}, {"shape", true}}}});
  const auto& p = r["priors"];
  EXPECT_EQ(p["semantics"]["scene"], "a yellow vase with pink flowers");
  EXPECT_EQ(p["color"]["colors"].size(), 5u);
  EXPECT_EQ(p["shape"]["contour_points"].size(), 20u);
  EXPECT_EQ(h.call("POST", "/sessions/" + id + "/priors", {{"flags", {{"colour", true}}}}).status, 400);
}

TEST(Service, GenerateReturnsFourScoredCandidates) {
  TempDir dir;
  Harness h(dir.path);
  const auto id = h.prepared();
  const auto r = h.ok("POST", "/sessions/" + id + "/generate",
                      {{"prompt", "spring"}, {"strength", 0.75}, {"flags", {{"color", true}}}, {"seed", 7}});
  const auto& c = r["candidates"];
  ASSERT_EQ(c.size(), 4u);
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_EQ(c[i]["id"], "c" + std::to_string(i + 1));
    for (const char* k : {"s1", "s2", "s3", "f", "seed", "image"}) EXPECT_TRUE(c[i].contains(k)) << k;
    EXPECT_EQ(c[i]["status"], "live");
  }
  EXPECT_EQ(h.gen->calls.size(), 4u);
  for (const auto& call : h.gen->calls) {
    EXPECT_EQ(call.strength, 0.75);
    EXPECT_TRUE(call.palette_image.has_value());
  }
  const auto state = h.svc->store().snapshot(id);
  EXPECT_EQ(state.gallery.size(), 4u);
  ASSERT_TRUE(state.current);
  // current is the highest-f winner
  double best = -1e9;
  std::string best_id;
  for (const auto& g : state.gallery)
    if (g.candidate.f > best) best = g.candidate.f, best_id = g.id;
  EXPECT_EQ(*state.current, best_id);
}

TEST(Service, GenerateIsByteIdenticalAcrossServices) {
  std::string bodies[2];
  for (auto& body : bodies) {
    TempDir dir;
    Harness h(dir.path);
    const auto id = h.prepared();
    body = h.call("POST", "/sessions/" + id + "/generate",
                  {{"prompt", "spring"}, {"flags", {{"semantics", true}, {"color", true}, {"shape", true}}}, {"seed", 11}})
               .body;
  }
  EXPECT_EQ(bodies[0], bodies[1]);
  EXPECT_EQ(json::parse(bodies[0])["candidates"].size(), 4u);
}

TEST(Service, DeletedCandidateReachesGeneratorAsNegativeRef) {
  TempDir dir;
  Harness h(dir.path);
  const auto id = h.prepared();
  const std::string s = "/sessions/" + id;
  h.ok("POST", s + "/generate", {{"seed", 3}, {"prompt", "spring"}});
  const Image deleted = h.svc->store().snapshot(id).at("c2").candidate.image;
  const Image kept = h.svc->store().snapshot(id).at("c3").candidate.image;
  h.ok("DELETE", s + "/gallery/c2");
  h.ok("POST", s + "/gallery/c3/keep");
  h.gen->calls.clear();
  h.ok("POST", s + "/generate", json::object());
  ASSERT_EQ(h.gen->calls.size(), 4u);
  for (const auto& call : h.gen->calls) {
    ASSERT_EQ(call.negative_refs.size(), 1u);
    EXPECT_EQ(call.negative_refs[0], deleted);
    ASSERT_EQ(call.positive_refs.size(), 1u);
    EXPECT_EQ(call.positive_refs[0], kept);
  }
  // fresh seeds on the second round of generation
  EXPECT_EQ(h.gen->calls[0].seed, 3u + 16u);
  EXPECT_EQ(h.svc->store().snapshot(id).gallery.size(), 8u);
}

TEST(Service, FeedbackIsIdempotent) {
  TempDir dir;
  Harness h(dir.path);
  const auto id = h.prepared();
  const std::string s = "/sessions/" + id;
  h.ok("POST", s + "/generate", {{"seed", 3}, {"prompt", "spring"}});
  auto r = h.ok("DELETE", s + "/gallery/c1");
  EXPECT_TRUE(r["changed"].get<bool>());
  for (int i = 0; i < 3; ++i) {
    r = h.ok("DELETE", s + "/gallery/c1");
    EXPECT_FALSE(r["changed"].get<bool>());
  }
  EXPECT_EQ(r["feedback"]["negatives"], json::array({"c1"}));
  h.ok("POST", s + "/gallery/c2/keep");
  r = h.ok("POST", s + "/gallery/c2/keep");
  EXPECT_FALSE(r["changed"].get<bool>());
  EXPECT_EQ(r["feedback"]["positives"], json::array({"c2"}));
  EXPECT_EQ(h.svc->store().snapshot(id).current, "c2");

  // keeping a deleted candidate moves it, never duplicates it
  r = h.ok("POST", s + "/gallery/c1/keep");
  EXPECT_EQ(r["feedback"]["negatives"], json::array());
  EXPECT_EQ(r["feedback"]["positives"], json::array({"c2", "c1"}));

  EXPECT_EQ(h.call("DELETE", s + "/gallery/c99").status, 404);
  EXPECT_EQ(h.call("POST", s + "/gallery/c99/keep").status, 404);
}

TEST(Service, EvaluateAndRefine) {
  TempDir dir;
  Harness h(dir.path);
  const auto id = h.prepared();
  const std::string s = "/sessions/" + id;
  h.ok("POST", s + "/generate", {{"seed", 5}, {"prompt", "spring"}});
  const auto ev = h.ok("POST", s + "/evaluate", {{"candidate_id", "c1"}});
  const auto& p = ev["position"];
  EXPECT_NEAR(p["raw_type"].get<double>() + p["raw_imagery"].get<double>(), 1.0, 1e-12);
  const double q = p["quantized"];
  EXPECT_NEAR(std::round(q / 0.05) * 0.05, q, 1e-12);
  EXPECT_EQ(h.call("POST", s + "/evaluate", {{"candidate_id", "zz"}}).status, 404);

  const bool toward_type = q > -0.5;
  const double target = toward_type ? q - 0.25 : q + 0.25;
  const auto rf = h.ok("POST", s + "/refine", {{"candidate_id", "c1"}, {"target_display", target}});
  EXPECT_EQ(rf["parent"], "c1");
  EXPECT_EQ(rf["candidate"]["id"], "c5");
  EXPECT_EQ(rf["candidate"]["origin"], "refine");
  EXPECT_EQ(rf["direction"], toward_type ? "typeface" : "imagery");
  const auto state = h.svc->store().snapshot(id);
  EXPECT_EQ(state.current, "c5");
  ASSERT_EQ(state.spectrum_history.size(), 2u);
  EXPECT_EQ(state.spectrum_history[1].target, target);

  EXPECT_EQ(h.call("POST", s + "/refine", {{"target_display", 0.33}}).status, 422);
  EXPECT_EQ(h.call("POST", s + "/refine", {{"target_display", 2.0}}).status, 422);
  EXPECT_EQ(h.call("POST", s + "/refine", json::object()).status, 400);
}

TEST(Service, VectorizeEditExport) {
  TempDir dir;
  Harness h(dir.path);
  const auto id = h.prepared();
  const std::string s = "/sessions/" + id;
  h.ok("POST", s + "/generate", {{"seed", 5}, {"prompt", "spring"}});
  const auto v = h.ok("POST", s + "/vectorize", {{"candidate_id", "c1"}});
  const auto& elems = v["design"]["elements"];
  ASSERT_GE(elems.size(), 2u);
  const std::string victim = elems[0]["id"];

  auto svg = h.call("GET", s + "/export.svg");
  EXPECT_EQ(svg.status, 200);
  EXPECT_EQ(svg.content_type, "image/svg+xml");
  EXPECT_EQ(vector::parse_svg(svg.body).elements.size(), elems.size());

  const auto e = h.ok("POST", s + "/edit", {{"target_id", victim}, {"op", "delete"}});
  EXPECT_EQ(e["design"]["elements"].size(), elems.size() - 1);
  const std::string other = elems[1]["id"];
  const auto rc = h.ok("POST", s + "/edit", {{"target_id", other}, {"op", "recolor"}, {"color", "#123456"}});
  for (const auto& el : rc["design"]["elements"])
    if (el["id"] == other) { EXPECT_EQ(el["fill"], "#123456"); }
  EXPECT_EQ(h.call("POST", s + "/edit", {{"target_id", "nope"}, {"op", "delete"}}).status, 404);
  EXPECT_EQ(h.call("POST", s + "/edit", {{"target_id", victim}, {"op", "explode"}}).status, 400);

  svg = h.call("GET", s + "/export.svg");
  const auto parsed = vector::parse_svg(svg.body);
  const auto design = h.svc->store().snapshot(id).design.value();
  ASSERT_EQ(parsed.elements.size(), design.elements.size());
  for (std::size_t i = 0; i < parsed.elements.size(); ++i) {
    EXPECT_EQ(parsed.elements[i].id, design.elements[i].id);
    EXPECT_EQ(parsed.elements[i].fill, design.elements[i].fill);
    EXPECT_LE(tbtest::max_abs_diff(parsed.elements[i].rings, design.elements[i].rings), 1e-6);
  }
}

TEST(Service, MutationsBumpUpdatedAt) {
  TempDir dir;
  Harness h(dir.path);
  const auto id = h.create();
  const std::string s = "/sessions/" + id;
  std::string last = h.ok("GET", s)["updated_at"];
  auto bumped = [&] {
    const std::string now = h.ok("GET", s)["updated_at"];
    const bool later = now > last;
    last = now;
    return later;
  };
  h.ok("POST", s + "/ideate", {{"topic", "spring"}});
  EXPECT_TRUE(bumped());
  h.ok("POST", s + "/typeface", {{"text", "E"}, {"font_id", "DejaVuSansMono"}});
  EXPECT_TRUE(bumped());
  h.ok("GET", s);
  EXPECT_FALSE(bumped());
  // a rejected mutation leaves the state untouched
  h.call("POST", s + "/typeface", {{"text", "E"}, {"font_id", "nope"}});
  EXPECT_FALSE(bumped());
}

TEST(Service, StateSurvivesRestart) {
  TempDir dir;
  std::string before, svg_before, id;
  {
    Harness h(dir.path);
    id = h.prepared();
    const std::string s = "/sessions/" + id;
    h.ok("POST", s + "/generate", {{"seed", 9}, {"flags", {{"color", true}, {"shape", true}}}, {"prompt", "spring"}});
    h.ok("DELETE", s + "/gallery/c4");
    h.ok("POST", s + "/evaluate", json::object());
    h.ok("POST", s + "/vectorize", json::object());
    before = h.call("GET", s).body;
    svg_before = h.call("GET", s + "/export.svg").body;
    EXPECT_TRUE(fs::exists(dir.path / id / "state.json"));
  }
  Harness again(dir.path);
  const std::string s = "/sessions/" + id;
  EXPECT_EQ(again.call("GET", s).body, before);
  EXPECT_EQ(again.call("GET", s + "/export.svg").body, svg_before);
  // and keeps working: seeds continue, deleted image is still a negative ref
  again.ok("POST", s + "/generate", json::object());
  EXPECT_EQ(again.gen->calls.front().seed, 9u + 16u);
  EXPECT_EQ(again.gen->calls.front().negative_refs.size(), 1u);
}

TEST(Service, EveryCommittedMutationIsOnDisk) {
  TempDir dir;
  Harness h(dir.path);
  const auto id = h.prepared();
  const std::string s = "/sessions/" + id;
  auto on_disk = [&] {
    SessionStore fresh(dir.path);
    return session_to_json(fresh.snapshot(id));
  };
  EXPECT_EQ(on_disk(), h.call("GET", s).body);
  h.ok("POST", s + "/generate", {{"seed", 2}, {"prompt", "spring"}});
  EXPECT_EQ(on_disk(), h.call("GET", s).body);
  h.ok("POST", s + "/gallery/c1/keep");
  EXPECT_EQ(on_disk(), h.call("GET", s).body);
}

TEST(Service, SessionJsonRoundTrip) {
  TempDir dir;
  Harness h(dir.path);
  const auto id = h.prepared();
  h.ok("POST", "/sessions/" + id + "/generate", {{"seed", 2}, {"flags", {{"semantics", true}}}, {"prompt", "spring"}});
  h.ok("POST", "/sessions/" + id + "/vectorize", json::object());
  const auto text = session_to_json(h.svc->store().snapshot(id));
  EXPECT_EQ(session_to_json(session_from_json(text)), text);
  EXPECT_THROW(session_from_json("{\"id\": 3"), Error);
}

TEST(Service, InvalidStateIsRejected) {
  SessionState s;
  s.id = "x";
  s.gallery.push_back({"c1", {}, CandidateOrigin::generate, 1});
  s.gallery.push_back({"c1", {}, CandidateOrigin::generate, 1});
  EXPECT_THROW(s.validate(), Error);
  s.gallery.pop_back();
  s.current = "c9";
  EXPECT_THROW(s.validate(), Error);
  s.current = "c1";
  EXPECT_NO_THROW(s.validate());
}

TEST(Service, ConcurrentSessionsAreIndependent) {
  TempDir dir;
  Harness h(dir.path);
  constexpr int kThreads = 6;
  std::vector<std::string> ids(kThreads), bodies(kThreads);
  for (auto& id : ids) id = h.prepared();
  std::vector<std::thread> threads;
  for (int t = 0; t < kThreads; ++t)
    threads.emplace_back([&, t] {
      bodies[t] = h.call("POST", "/sessions/" + ids[t] + "/generate", {{"seed", 21}, {"prompt", "spring"}}).body;
    });
  for (auto& t : threads) t.join();
  for (int t = 1; t < kThreads; ++t) EXPECT_EQ(bodies[t], bodies[0]);
  for (const auto& id : ids) EXPECT_EQ(h.svc->store().snapshot(id).gallery.size(), 4u);
}

TEST(Service, SameSessionMutationsSerialize) {
  TempDir dir;
  Harness h(dir.path);
  const auto id = h.prepared();
  const std::string s = "/sessions/" + id;
  constexpr int kThreads = 4;
  std::vector<std::thread> threads;
  std::atomic<int> reads{0};
  for (int t = 0; t < kThreads; ++t)
    threads.emplace_back([&] { h.call("POST", s + "/generate", {{"prompt", "spring"}}); });
  for (int t = 0; t < kThreads; ++t)
    threads.emplace_back([&] {
      for (int i = 0; i < 5; ++i)
        if (h.call("GET", s).status == 200) ++reads;
    });
  for (auto& t : threads) t.join();
  EXPECT_EQ(reads.load(), kThreads * 5);
  const auto state = h.svc->store().snapshot(id);
  EXPECT_EQ(state.gallery.size(), 4u * kThreads);
  EXPECT_EQ(state.generation_count, kThreads);
  std::set<std::string> gids;
  for (const auto& g : state.gallery) gids.insert(g.id);
  EXPECT_EQ(gids.size(), state.gallery.size());
  std::set<std::uint64_t> seeds;
  for (const auto& g : state.gallery) seeds.insert(g.candidate.seed);
  EXPECT_EQ(seeds.size(), state.gallery.size());
}

TEST(Service, HttpServerRoundTrip) {
  TempDir dir, web;
  {
    std::ofstream(web.path / "index.html") << "<html>typeblend</html>";
  }
  auto be = backends::make_mock_backends(tbtest::fixtures());
  auto cfg = config_for(dir.path);
  cfg.static_dir = web.path;
  Service svc(cfg, be);
  HttpServer server(svc);
  const int port = server.bind("127.0.0.1", 0);
  ASSERT_GT(port, 0);
  std::thread th([&] { server.listen(); });
  for (int i = 0; i < 200 && !server.running(); ++i) std::this_thread::sleep_for(std::chrono::milliseconds(5));

  httplib::Client cli("127.0.0.1", port);
  auto r = cli.Post("/sessions", "", "application/json");
  ASSERT_TRUE(r);
  EXPECT_EQ(r->status, 201);
  const std::string id = json::parse(r->body)["id"];
  r = cli.Get("/sessions/" + id);
  ASSERT_TRUE(r);
  EXPECT_EQ(r->status, 200);
  EXPECT_EQ(json::parse(r->body)["id"], id);
  r = cli.Get("/sessions/missing");
  ASSERT_TRUE(r);
  EXPECT_EQ(r->status, 404);
  EXPECT_EQ(json::parse(r->body)["error"]["code"], "not-found");
  r = cli.Get("/sessions/" + id + "/export.svg");
  ASSERT_TRUE(r);
  EXPECT_EQ(r->status, 409);
  r = cli.Post("/sessions/" + id + "/ideate", R"({"topic": "hawaii"})", "application/json");
  ASSERT_TRUE(r);
  EXPECT_EQ(json::parse(r->body)["ideas"].size(), 5u);
  r = cli.Delete("/sessions/" + id + "/gallery/c1");
  ASSERT_TRUE(r);
  EXPECT_EQ(r->status, 404);
  r = cli.Get("/");
  ASSERT_TRUE(r);
  EXPECT_EQ(r->status, 200);
  EXPECT_NE(r->body.find("typeblend"), std::string::npos);
  r = cli.Get("/health");
  ASSERT_TRUE(r);
  EXPECT_EQ(r->status, 200);

  server.stop();
  th.join();
}
