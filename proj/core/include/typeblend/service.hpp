#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "typeblend/backends.hpp"
#include "typeblend/blend.hpp"
#include "typeblend/error.hpp"
#include "typeblend/glyph.hpp"
#include "typeblend/priors.hpp"
#include "typeblend/session.hpp"
#include "typeblend/spectrum.hpp"

namespace typeblend {

inline constexpr int kDefaultCanvasSize = 512;
inline constexpr int kDefaultIdeaCount = 5;

struct ServiceConfig {
  std::filesystem::path sessions_dir;  // empty: in-memory only
  std::filesystem::path fonts_dir;
  std::filesystem::path style_db;      // ndjson; needed for the semantics prior
  std::filesystem::path static_dir;    // web client assets, optional
  int canvas_size = kDefaultCanvasSize;
  blend::DiscriminationConfig discrimination;
  spectrum::RefineConfig refine;
};

struct HttpResponse {
  int status = 200;
  std::string content_type = "application/json";
  std::string body;
};

// HTTP status for a module error: 404 not found, 409 conflict, 502 backend
// failure, 422 other invariant violations, 400 malformed requests.
int http_status(const Error& e);

// Session-scoped workflow endpoints. handle() is transport independent; the
// HTTP server forwards every request to it.
class Service {
 public:
  Service(ServiceConfig config, backends::Backends backends, SessionStore::Clock clock = {},
          SessionStore::IdSource ids = {});
  ~Service();

  HttpResponse handle(std::string_view method, std::string_view path, std::string_view body);

  SessionStore& store() { return store_; }
  const ServiceConfig& config() const { return config_; }

 private:
  struct Impl;
  ServiceConfig config_;
  backends::Backends backends_;
  SessionStore store_;
  std::unique_ptr<Impl> impl_;
};

// Blocking HTTP front end for a Service.
class HttpServer {
 public:
  explicit HttpServer(Service& service);
  ~HttpServer();

  // Binds to the port (0: any free port) and returns the bound port.
  int bind(const std::string& host, int port);
  // Serves until stop(); call after bind().
  void listen();
  void stop();
  bool running() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace typeblend
