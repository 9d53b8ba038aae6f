#include <cstdlib>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "typeblend/backends.hpp"
#include "typeblend/error.hpp"

namespace typeblend::backends {

using nlohmann::json;

RemoteConfig RemoteConfig::from_env() {
  auto env = [](const char* name) -> std::string {
    const char* v = std::getenv(name);
    return v ? v : "";
  };
  RemoteConfig c;
  c.caption = {env("BACKEND_CAPTION_URL"), env("BACKEND_CAPTION_KEY")};
  c.embed = {env("BACKEND_EMBED_URL"), env("BACKEND_EMBED_KEY")};
  c.segment = {env("BACKEND_SEGMENT_URL"), env("BACKEND_SEGMENT_KEY")};
  c.generate = {env("BACKEND_GENERATE_URL"), env("BACKEND_GENERATE_KEY")};
  c.ideate = {env("BACKEND_IDEATE_URL"), env("BACKEND_IDEATE_KEY")};
  return c;
}

namespace {

// POSTs JSON to one endpoint with exponential-backoff retries.
class JsonEndpoint {
 public:
  JsonEndpoint(std::string backend, RemoteEndpoint endpoint, const RemoteConfig& cfg)
      : backend_(std::move(backend)), endpoint_(std::move(endpoint)), cfg_(cfg) {
    const auto& url = endpoint_.url;
    const auto scheme_end = url.find("://");
    const auto host_start = scheme_end == std::string::npos ? 0 : scheme_end + 3;
    const auto path_start = url.find('/', host_start);
    origin_ = path_start == std::string::npos ? url : url.substr(0, path_start);
    path_ = path_start == std::string::npos ? "/" : url.substr(path_start);
  }

  json post(const json& body) const {
    if (endpoint_.url.empty())
      throw Error(ErrorCode::backend_unreachable, backend_ + " backend URL is not configured", backend_, false);
    const std::string payload = body.dump();
    auto delay = cfg_.backoff;
    std::string last_error;
    ErrorCode last_code = ErrorCode::backend_unreachable;
    for (int attempt = 1; attempt <= std::max(1, cfg_.max_attempts); ++attempt) {
      httplib::Client client(origin_);
      const auto secs = std::chrono::duration_cast<std::chrono::seconds>(cfg_.timeout);
      const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(cfg_.timeout - secs);
      client.set_connection_timeout(secs.count(), static_cast<time_t>(usecs.count()));
      client.set_read_timeout(secs.count(), static_cast<time_t>(usecs.count()));
      client.set_write_timeout(secs.count(), static_cast<time_t>(usecs.count()));
      httplib::Headers headers;
      if (!endpoint_.api_key.empty()) headers.emplace("Authorization", "Bearer " + endpoint_.api_key);
      auto res = client.Post(path_, headers, payload, "application/json");
      if (!res) {
        const auto err = res.error();
        last_code = err == httplib::Error::Read || err == httplib::Error::ConnectionTimeout ? ErrorCode::backend_timeout
                                                                                            : ErrorCode::backend_unreachable;
        last_error = httplib::to_string(err);
      } else if (res->status == 429 || res->status >= 500) {
        last_code = ErrorCode::backend_unreachable;
        last_error = "HTTP " + std::to_string(res->status);
      } else if (res->status >= 400) {
        throw Error(ErrorCode::invalid_input,
                    backend_ + " backend rejected the request: HTTP " + std::to_string(res->status) + " " + res->body,
                    backend_, false);
      } else {
        try {
          return json::parse(res->body);
        } catch (const json::exception& e) {
          throw Error(ErrorCode::parse_error, backend_ + " backend returned invalid JSON: " + e.what(), backend_, false);
        }
      }
      if (attempt < cfg_.max_attempts) {
        std::this_thread::sleep_for(delay);
        delay *= 2;
      }
    }
    throw Error(last_code, backend_ + " backend failed: " + last_error, backend_, true);
  }

  const std::string& backend() const { return backend_; }

 private:
  std::string backend_;
  RemoteEndpoint endpoint_;
  RemoteConfig cfg_;
  std::string origin_;
  std::string path_;
};

template <typename F>
auto read_field(const JsonEndpoint& ep, F&& f) {
  try {
    return f();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::parse_error, ep.backend() + " backend reply has the wrong shape: " + e.what(), ep.backend(),
                false);
  }
}

class RemoteCaptioner final : public Captioner {
 public:
  explicit RemoteCaptioner(const RemoteConfig& c) : ep_("caption", c.caption, c) {}
  std::string caption(const Image& image) const override {
    if (image.empty()) throw Error(ErrorCode::invalid_input, "cannot caption an empty image");
    const auto reply = ep_.post({{"image", image_to_base64_png(image)}});
    auto text = read_field(ep_, [&] { return reply.at("caption").get<std::string>(); });
    if (text.empty()) throw Error(ErrorCode::parse_error, "caption backend returned an empty caption", "caption", false);
    return text;
  }

 private:
  JsonEndpoint ep_;
};

class RemoteEmbedder final : public Embedder {
 public:
  explicit RemoteEmbedder(const RemoteConfig& c) : ep_("embed", c.embed, c), dim_(c.embedding_dim) {}
  EmbeddingVector embed_image(const Image& image) const override {
    if (image.empty()) throw Error(ErrorCode::invalid_input, "cannot embed an empty image");
    return decode(ep_.post({{"image", image_to_base64_png(image)}}));
  }
  EmbeddingVector embed_text(std::string_view text) const override {
    if (text.empty()) throw Error(ErrorCode::invalid_input, "cannot embed empty text");
    return decode(ep_.post({{"text", std::string(text)}}));
  }

 private:
  EmbeddingVector decode(const json& reply) const {
    EmbeddingVector v;
    v.values = read_field(ep_, [&] { return reply.at("embedding").get<std::vector<double>>(); });
    if (dim_ > 0 && v.dim() != dim_)
      throw Error(ErrorCode::parse_error,
                  "embed backend returned dimension " + std::to_string(v.dim()) + ", expected " + std::to_string(dim_),
                  "embed", false);
    v.normalize();
    return v;
  }
  JsonEndpoint ep_;
  int dim_;
};

json prompt_to_json(const SegmentPrompt& p) {
  json coords = p.kind == PromptKind::point ? json::array({p.coords[0], p.coords[1]})
                                            : json::array({p.coords[0], p.coords[1], p.coords[2], p.coords[3]});
  return {{"kind", to_string(p.kind)}, {"coords", coords}, {"label", to_string(p.label)}};
}

class RemoteSegmenter final : public Segmenter {
 public:
  explicit RemoteSegmenter(const RemoteConfig& c) : ep_("segment", c.segment, c) {}
  SegmentResult segment(const Image& image, std::span<const SegmentPrompt> prompts) const override {
    if (image.empty()) throw Error(ErrorCode::invalid_input, "cannot segment an empty image");
    if (prompts.empty()) throw Error(ErrorCode::invalid_prompt, "segmentation needs at least one prompt");
    json jp = json::array();
    for (const auto& p : prompts) {
      if (!p.valid_for(image.width(), image.height())) throw Error(ErrorCode::invalid_prompt, "prompt outside the image");
      jp.push_back(prompt_to_json(p));
    }
    const auto reply = ep_.post({{"image", image_to_base64_png(image)}, {"prompts", jp}});
    SegmentResult res;
    res.mask = mask_from_base64(read_field(ep_, [&] { return reply.at("mask").get<std::string>(); }));
    if (!same_size(image, res.mask))
      throw Error(ErrorCode::parse_error, "segment backend returned a mask of the wrong size", "segment", false);
    if (reply.contains("warnings")) res.warnings = reply["warnings"].get<std::vector<std::string>>();
    if (!res.mask.any() && res.warnings.empty()) res.warnings.push_back("no region found");
    return res;
  }

 private:
  JsonEndpoint ep_;
};

class RemoteGenerator final : public Generator {
 public:
  explicit RemoteGenerator(const RemoteConfig& c) : ep_("generate", c.generate, c) {}
  std::vector<Image> generate(const GenerationParams& params) const override {
    params.validate();
    json body = {
        {"init_image", image_to_base64_png(params.init_image)},
        {"prompt", params.prompt},
        {"negative_prompt", params.negative_prompt},
        {"strength", params.strength},
        {"seed", params.seed},
        {"count", params.count},
        {"positive_refs", json::array()},
        {"negative_refs", json::array()},
    };
    if (params.palette_image) body["palette_image"] = image_to_base64_png(*params.palette_image);
    for (const auto& r : params.positive_refs) body["positive_refs"].push_back(image_to_base64_png(r));
    for (const auto& r : params.negative_refs) body["negative_refs"].push_back(image_to_base64_png(r));
    const auto reply = ep_.post(body);
    const auto encoded = read_field(ep_, [&] { return reply.at("images").get<std::vector<std::string>>(); });
    if (static_cast<int>(encoded.size()) != params.count)
      throw Error(ErrorCode::parse_error, "generate backend returned " + std::to_string(encoded.size()) + " images",
                  "generate", false);
    std::vector<Image> out;
    for (const auto& e : encoded) {
      auto img = image_from_base64(e);
      if (!same_size(img, params.init_image)) img = resize_nearest(img, params.init_image.width(), params.init_image.height());
      out.push_back(std::move(img));
    }
    return out;
  }

 private:
  JsonEndpoint ep_;
};

class RemoteIdeator final : public Ideator {
 public:
  explicit RemoteIdeator(const RemoteConfig& c) : ep_("ideate", c.ideate, c) {}
  std::vector<Idea> ideate(std::string_view topic, int n) const override {
    if (topic.find_first_not_of(" \t\r\n") == std::string_view::npos)
      throw Error(ErrorCode::invalid_input, "ideation topic is empty");
    if (n <= 0) throw Error(ErrorCode::invalid_argument, "number of ideas must be positive");
    const auto reply = ep_.post({{"prompt", ideation_prompt(topic, n)}, {"n", n}});
    return parse_ideas(read_field(ep_, [&] { return reply.at("text").get<std::string>(); }), n);
  }

 private:
  JsonEndpoint ep_;
};

}  // namespace

Backends make_remote_backends(const RemoteConfig& config) {
  return Backends{
      std::make_shared<RemoteCaptioner>(config),
      std::make_shared<RemoteEmbedder>(config),
      std::make_shared<RemoteSegmenter>(config),
      std::make_shared<RemoteGenerator>(config),
      std::make_shared<RemoteIdeator>(config),
  };
}

}  // namespace typeblend::backends
