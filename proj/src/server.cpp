#include "moonshine/server.hpp"

#include <chrono>
#include <fstream>
#include <sstream>

#include "moonshine/aligner.hpp"
#include "moonshine/concurrency.hpp"
#include "moonshine/dataset.hpp"
#include "moonshine/ddm.hpp"
#include "moonshine/error.hpp"
#include "moonshine/fdm.hpp"
#include "moonshine/metadata.hpp"
#include "moonshine/metrics.hpp"
#include "moonshine/render.hpp"

// After the Eigen users: <resolv.h> defines a _res macro.
#include <httplib.h>

#ifndef MOONSHINE_VERSION
#define MOONSHINE_VERSION "0.0.0"
#endif
#ifndef MOONSHINE_SCHEMA_DIR
#define MOONSHINE_SCHEMA_DIR "schemas"
#endif

namespace moonshine {

namespace {

using Json = nlohmann::json;
using OJson = nlohmann::ordered_json;

class HttpError : public std::runtime_error {
 public:
  HttpError(int status, const std::string& what) : std::runtime_error(what), status(status) {}
  int status;
};

void send_json(httplib::Response& res, int status, const OJson& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& message) {
  send_json(res, status, {{"error", message}});
}

Json parse_body(const httplib::Request& req) {
  try {
    auto j = Json::parse(req.body);
    if (!j.is_object()) throw HttpError(400, "request body must be a JSON object");
    return j;
  } catch (const Json::parse_error& e) {
    throw HttpError(400, std::string("malformed JSON: ") + e.what());
  }
}

MapGrid grid_field(const Json& body) {
  if (!body.contains("grid")) throw HttpError(400, "missing field: grid");
  try {
    return grid_from_json(body["grid"], std::nullopt);
  } catch (const DataError& e) {
    throw HttpError(400, e.what());
  }
}

std::string prompt_field(const Json& body, std::size_t max_bytes) {
  if (!body.contains("prompt") || !body["prompt"].is_string()) throw HttpError(400, "prompt must be a string");
  auto prompt = body["prompt"].get<std::string>();
  if (prompt.find_first_not_of(" \t\r\n") == std::string::npos) throw HttpError(400, "prompt must not be empty");
  if (prompt.size() > max_bytes) {
    throw HttpError(400, "prompt exceeds " + std::to_string(max_bytes) + " bytes");
  }
  return prompt;
}

std::string_view content_type(const std::filesystem::path& p) {
  const auto ext = p.extension().string();
  if (ext == ".html" || ext == ".htm") return "text/html; charset=utf-8";
  if (ext == ".js" || ext == ".mjs") return "text/javascript; charset=utf-8";
  if (ext == ".css") return "text/css; charset=utf-8";
  if (ext == ".json" || ext == ".map") return "application/json";
  if (ext == ".svg") return "image/svg+xml";
  if (ext == ".png") return "image/png";
  if (ext == ".ico") return "image/x-icon";
  if (ext == ".woff2") return "font/woff2";
  return "application/octet-stream";
}

std::optional<std::string> read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) return std::nullopt;
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string hex_color(Rgb c) {
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", c.r, c.g, c.b);
  return buf;
}

OJson connectivity_json(const ConnectivityReport& r) {
  return {{"components", r.components}, {"largest", r.largest}, {"fragmentation", r.fragmentation}};
}

}  // namespace

void ServeConfig::validate() const {
  if (port < 0 || port > 65535) throw UsageError("port must be in 0..65535");
  if (max_concurrent < 1) throw UsageError("max_concurrent must be at least 1");
  if (queue_limit < 0) throw UsageError("queue limit must be non-negative");
  if (max_prompt_bytes == 0) throw UsageError("max prompt size must be positive");
}

OJson tiles_json() {
  auto out = OJson::array();
  for (const auto& t : kTileTable) {
    out.push_back({{"id", tile_id(t.tile)},
                   {"name", t.name},
                   {"color", hex_color(t.color)},
                   {"char", std::string(1, t.glyph)},
                   {"class", tile_class_name(t.cls)}});
  }
  return out;
}

struct ApiServer::Impl {
  ServeConfig config;
  std::optional<FdmModel> fdm;
  std::optional<DdmModel> ddm;
  std::optional<AlignerModel> aligner;
  AdmissionGate gate;
  httplib::Server http;
  int port = 0;

  explicit Impl(ServeConfig cfg) : config(std::move(cfg)), gate(config.max_concurrent, config.queue_limit) {
    config.validate();
    if (config.fdm_path) fdm = load_fdm(*config.fdm_path);
    if (config.ddm_path) ddm = load_ddm(*config.ddm_path);
    if (config.aligner_path) aligner = load_aligner(*config.aligner_path);
    if (!config.schema_dir) config.schema_dir = MOONSHINE_SCHEMA_DIR;
    const auto threads = static_cast<std::size_t>(config.max_concurrent + config.queue_limit + 4);
    http.new_task_queue = [threads] { return new httplib::ThreadPool(threads); };
    http.set_payload_max_length(8u << 20);
    routes();
  }

  OJson models() const {
    auto m = OJson::array();
    if (fdm) m.push_back("fdm");
    if (ddm) m.push_back("ddm");
    return m;
  }

  void guarded(const httplib::Request& req, httplib::Response& res,
               const std::function<void(const httplib::Request&, httplib::Response&)>& fn) {
    try {
      fn(req, res);
    } catch (const HttpError& e) {
      send_error(res, e.status, e.what());
    } catch (const UsageError& e) {
      send_error(res, 400, e.what());
    } catch (const std::exception& e) {
      send_error(res, 500, e.what());
    }
  }

  void generate(const httplib::Request& req, httplib::Response& res) {
    const auto body = parse_body(req);
    if (!body.contains("model") || !body["model"].is_string()) throw HttpError(400, "model must be a string");
    const auto model = body["model"].get<std::string>();
    if (!((model == "fdm" && fdm) || (model == "ddm" && ddm))) throw HttpError(404, "model not loaded: " + model);
    const auto prompt = prompt_field(body, config.max_prompt_bytes);
    std::uint64_t seed = 0;
    if (body.contains("seed")) {
      if (!body["seed"].is_number_unsigned()) throw HttpError(400, "seed must be a non-negative integer");
      seed = body["seed"].get<std::uint64_t>();
    }
    int steps = 0;
    if (body.contains("steps") && !body["steps"].is_null()) {
      if (!body["steps"].is_number_integer()) throw HttpError(400, "steps must be an integer");
      steps = body["steps"].get<int>();
      const int limit = ddm ? ddm->config.steps : 0;
      if (model == "ddm" && (steps < 1 || steps > limit)) {
        throw HttpError(400, "steps must be in 1.." + std::to_string(limit));
      }
    }
    bool dump = false;
    if (body.contains("dump_steps")) {
      if (!body["dump_steps"].is_boolean()) throw HttpError(400, "dump_steps must be a boolean");
      dump = body["dump_steps"].get<bool>();
    }

    const auto ticket = gate.enter();
    if (!ticket) throw HttpError(429, "too many concurrent generations");
    const auto t0 = std::chrono::steady_clock::now();
    OJson out{{"model", model}, {"seed", seed}};
    MapGrid grid;
    std::vector<MapGrid> frames;
    if (model == "fdm") {
      grid = fdm_generate(*fdm, prompt, seed);
    } else {
      auto sample = ddm_sample(*ddm, prompt, seed, SampleOptions{steps, dump});
      grid = std::move(sample.grid);
      frames = std::move(sample.frames);
      out["steps"] = steps > 0 ? steps : ddm->config.steps;
    }
    const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    out["grid"] = grid_to_json(grid);
    out["ascii"] = render_ascii(grid);
    out["duration_ms"] = ms;
    if (dump && model == "ddm") {
      auto f = OJson::array();
      for (const auto& g : frames) f.push_back(grid_to_json(g));
      out["frames"] = std::move(f);
    }
    send_json(res, 200, out);
  }

  void serve_static(const httplib::Request& req, httplib::Response& res) {
    if (req.path.rfind("/api/", 0) == 0 || req.path == "/api") throw HttpError(404, "no such endpoint: " + req.path);
    if (!config.static_dir) throw HttpError(404, "no static directory configured");
    const auto root = std::filesystem::weakly_canonical(*config.static_dir);
    std::filesystem::path target = root;
    const std::string rel = req.path.substr(1);
    if (!rel.empty()) {
      const auto candidate = std::filesystem::weakly_canonical(root / rel);
      const auto [r, c] = std::mismatch(root.begin(), root.end(), candidate.begin(), candidate.end());
      if (r == root.end() && std::filesystem::is_regular_file(candidate)) target = candidate;
    }
    if (std::filesystem::is_directory(target)) target /= "index.html";
    const auto content = read_file(target);
    if (!content) throw HttpError(404, "index.html not found in static directory");
    res.status = 200;
    res.set_content(*content, std::string(content_type(target)));
  }

  void routes() {
    auto wrap = [this](auto fn) {
      return [this, fn](const httplib::Request& req, httplib::Response& res) { guarded(req, res, fn); };
    };
    http.Get("/api/health", wrap([this](const httplib::Request&, httplib::Response& res) {
      const auto m = models();
      if (m.empty()) {
        send_json(res, 503, {{"status", "unavailable"}, {"models", m}, {"aligner", aligner.has_value()}});
      } else {
        send_json(res, 200, {{"status", "ok"}, {"models", m}, {"aligner", aligner.has_value()}});
      }
    }));
    http.Get("/api/tiles", wrap([](const httplib::Request&, httplib::Response& res) { send_json(res, 200, tiles_json()); }));
    http.Get("/api/version", wrap([this](const httplib::Request&, httplib::Response& res) {
      OJson schemas = OJson::object();
      for (const auto* name : {"health", "tiles", "generate_request", "generate_response", "analyze_request",
                               "analyze_response", "score_request", "score_response", "version", "error"}) {
        schemas[name] = std::string("/api/schemas/") + name + ".json";
      }
      send_json(res, 200, {{"version", MOONSHINE_VERSION}, {"api", kApiVersion}, {"schemas", schemas}});
    }));
    http.Get(R"(/api/schemas/([a-z_]+)\.json)", wrap([this](const httplib::Request& req, httplib::Response& res) {
      const auto content = read_file(*config.schema_dir / (req.matches[1].str() + ".json"));
      if (!content) throw HttpError(404, "unknown schema");
      res.status = 200;
      res.set_content(*content, "application/schema+json");
    }));
    http.Post("/api/generate", wrap([this](const httplib::Request& req, httplib::Response& res) { generate(req, res); }));
    http.Post("/api/analyze", wrap([](const httplib::Request& req, httplib::Response& res) {
      const auto grid = grid_field(parse_body(req));
      send_json(res, 200, {{"meta", meta_to_json(analyze(grid))}, {"connectivity", connectivity_json(connectivity_report(grid))}});
    }));
    http.Post("/api/score", wrap([this](const httplib::Request& req, httplib::Response& res) {
      if (!aligner) throw HttpError(404, "aligner not loaded");
      const auto body = parse_body(req);
      const auto prompt = prompt_field(body, config.max_prompt_bytes);
      const auto grid = grid_field(body);
      if (grid.height() != aligner->config.height || grid.width() != aligner->config.width) {
        throw HttpError(400, "grid shape does not match the aligner");
      }
      send_json(res, 200, {{"aligner_score", align_score(*aligner, prompt, grid)}});
    }));
    http.Get(".*", wrap([this](const httplib::Request& req, httplib::Response& res) { serve_static(req, res); }));
    http.set_error_handler([](const httplib::Request& req, httplib::Response& res) {
      if (res.body.empty()) send_error(res, res.status, "no route for " + req.method + " " + req.path);
    });
  }
};

ApiServer::ApiServer(ServeConfig config) : impl_(std::make_unique<Impl>(std::move(config))) {}

ApiServer::~ApiServer() { stop(); }

int ApiServer::bind() {
  auto& im = *impl_;
  if (im.config.port == 0) {
    im.port = im.http.bind_to_any_port(im.config.host);
  } else {
    im.port = im.http.bind_to_port(im.config.host, im.config.port) ? im.config.port : -1;
  }
  if (im.port <= 0) throw NetworkError("cannot bind " + im.config.host + ":" + std::to_string(im.config.port));
  return im.port;
}

void ApiServer::run() { impl_->http.listen_after_bind(); }

void ApiServer::stop() {
  if (impl_) impl_->http.stop();
}

void ApiServer::wait_until_ready() const { impl_->http.wait_until_ready(); }

}  // namespace moonshine
