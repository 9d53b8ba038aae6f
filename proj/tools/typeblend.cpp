#include <csignal>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "typeblend/backends.hpp"
#include "typeblend/pipeline.hpp"
#include "typeblend/priors.hpp"
#include "typeblend/service.hpp"

namespace fs = std::filesystem;
using namespace typeblend;

namespace {

fs::path default_data_dir() {
  if (auto env = process_env()("TYPEBLEND_DATA_DIR")) return *env;
  const fs::path source = TYPEBLEND_SOURCE_DATA_DIR;
  if (fs::exists(source / "fonts")) return source;
  return TYPEBLEND_DEFAULT_DATA_DIR;
}

std::optional<bool> parse_bool(const std::string& s) {
  if (s == "1" || s == "true" || s == "yes" || s == "on") return true;
  if (s == "0" || s == "false" || s == "no" || s == "off" || s.empty()) return false;
  return std::nullopt;
}

HttpServer* g_server = nullptr;
extern "C" void on_signal(int) {
  if (g_server) g_server->stop();
}

int cmd_run(const fs::path& config, std::optional<std::uint64_t> seed, std::optional<fs::path> out,
            std::optional<bool> mock) {
  PipelineConfig cfg;
  try {
    cfg = load_pipeline_config(config, CliOverrides{seed, out, mock}, default_data_dir());
  } catch (const ConfigError& e) {
    std::cerr << "typeblend: " << e.what() << "\n";
    return 2;
  }
  try {
    const auto backends = make_backends(cfg.mock_backends, cfg.mock_fixtures);
    const auto summary = run_pipeline(cfg, backends);
    for (const auto& w : summary.warnings) std::cerr << "warning: " << w << "\n";
    std::cout << "wrote " << summary.files.size() << " files to " << cfg.out.string() << " (best round "
              << summary.best_round << ")\n";
  } catch (const ConfigError& e) {
    std::cerr << "typeblend: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "typeblend: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

struct ServeOptions {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string sessions_dir;
  std::string static_dir;
  std::string fonts_dir;
  std::string style_db;
  std::string fixtures;
  std::optional<bool> mock;
};

int cmd_serve(ServeOptions o, const CLI::App& sub) {
  const auto env = process_env();
  auto from_env = [&](const char* opt, const char* var, std::string& dst) {
    if (sub.count(opt) == 0)
      if (auto v = env(var)) dst = *v;
  };
  from_env("--host", "TYPEBLEND_HOST", o.host);
  from_env("--sessions-dir", "TYPEBLEND_SESSIONS_DIR", o.sessions_dir);
  from_env("--static-dir", "TYPEBLEND_STATIC_DIR", o.static_dir);
  from_env("--fonts-dir", "TYPEBLEND_FONTS_DIR", o.fonts_dir);
  from_env("--style-db", "TYPEBLEND_STYLE_DB", o.style_db);
  from_env("--fixtures", "TYPEBLEND_MOCK_FIXTURES", o.fixtures);
  if (sub.count("--port") == 0)
    if (auto v = env("TYPEBLEND_PORT")) o.port = std::atoi(v->c_str());
  bool mock = true;
  if (o.mock) {
    mock = *o.mock;
  } else if (auto v = env("TYPEBLEND_MOCK_BACKENDS")) {
    mock = parse_bool(*v).value_or(true);
  } else if (env("BACKEND_GENERATE_URL")) {
    mock = false;
  }

  const fs::path data = default_data_dir();
  ServiceConfig cfg;
  cfg.sessions_dir = o.sessions_dir.empty() ? fs::path("typeblend-sessions") : fs::path(o.sessions_dir);
  cfg.static_dir = o.static_dir;
  cfg.fonts_dir = o.fonts_dir.empty() ? data / "fonts" : fs::path(o.fonts_dir);
  cfg.style_db = o.style_db.empty() ? data / "styles.ndjson" : fs::path(o.style_db);
  const fs::path fixtures = o.fixtures.empty() ? data / "mock_fixtures.json" : fs::path(o.fixtures);

  try {
    Service service(cfg, make_backends(mock, fixtures));
    HttpServer server(service);
    const int port = server.bind(o.host, o.port);
    std::cout << "typeblend listening on http://" << o.host << ":" << port << " ("
              << (mock ? "mock" : "remote") << " backends, sessions in " << cfg.sessions_dir.string() << ")"
              << std::endl;
    g_server = &server;
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    server.listen();
    g_server = nullptr;
  } catch (const std::exception& e) {
    std::cerr << "typeblend: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

int cmd_style_db(const fs::path& styles, const fs::path& out, int dim) {
  std::ifstream in(styles);
  if (!in) {
    std::cerr << "typeblend: cannot read " << styles.string() << "\n";
    return 1;
  }
  backends::MockEmbedder embedder(dim);
  std::vector<priors::StyleEntry> entries;
  for (std::string line; std::getline(in, line);) {
    if (line.empty() || line[0] == '#') continue;
    entries.push_back({line, embedder.embed_text(line)});
  }
  try {
    priors::save_style_db(entries, out);
  } catch (const std::exception& e) {
    std::cerr << "typeblend: " << e.what() << "\n";
    return 1;
  }
  std::cout << "wrote " << entries.size() << " styles to " << out.string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"typeblend: typographic logo authoring"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "Run the batch pipeline from a JSON config");
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  bool mock_flag = false, remote_flag = false;
  run->add_option("--config,-c", config, "Pipeline config file (JSON)")->required();
  run->add_option("--seed", seed, "Base seed (overrides TYPEBLEND_SEED and the config)");
  run->add_option("--out,-o", out, "Output directory (overrides TYPEBLEND_OUT and the config)");
  run->add_flag("--mock-backends", mock_flag, "Use the deterministic mock backends");
  run->add_flag("--remote-backends", remote_flag, "Use the BACKEND_*_URL endpoints")->excludes("--mock-backends");

  auto* serve = app.add_subcommand("serve", "Serve the session HTTP API");
  ServeOptions so;
  bool serve_mock = false, serve_remote = false;
  serve->add_option("--host", so.host, "Bind address (TYPEBLEND_HOST)");
  serve->add_option("--port,-p", so.port, "Port, 0 for any free port (TYPEBLEND_PORT)");
  serve->add_option("--sessions-dir", so.sessions_dir, "Session storage (TYPEBLEND_SESSIONS_DIR)");
  serve->add_option("--static-dir", so.static_dir, "Web client assets to serve at / (TYPEBLEND_STATIC_DIR)");
  serve->add_option("--fonts-dir", so.fonts_dir, "Font directory (TYPEBLEND_FONTS_DIR)");
  serve->add_option("--style-db", so.style_db, "Style database, ndjson (TYPEBLEND_STYLE_DB)");
  serve->add_option("--fixtures", so.fixtures, "Mock backend fixtures (TYPEBLEND_MOCK_FIXTURES)");
  serve->add_flag("--mock-backends", serve_mock, "Use the deterministic mock backends");
  serve->add_flag("--remote-backends", serve_remote, "Use the BACKEND_*_URL endpoints")->excludes("--mock-backends");

  auto* style = app.add_subcommand("style-db", "Embed a style list into an ndjson style database");
  std::string styles_txt, styles_out;
  int dim = backends::kDefaultEmbeddingDim;
  style->add_option("--styles", styles_txt, "One style description per line")->required();
  style->add_option("--out,-o", styles_out, "Output ndjson")->required();
  style->add_option("--dim", dim, "Embedding dimension of the mock embedder");

  CLI11_PARSE(app, argc, argv);

  if (*run) {
    std::optional<bool> mock;
    if (mock_flag) mock = true;
    if (remote_flag) mock = false;
    std::optional<fs::path> out_path;
    if (out) out_path = *out;
    return cmd_run(config, seed, out_path, mock);
  }
  if (*serve) {
    if (serve_mock) so.mock = true;
    if (serve_remote) so.mock = false;
    return cmd_serve(so, *serve);
  }
  if (*style) return cmd_style_db(styles_txt, styles_out, dim);
  return 0;
}
