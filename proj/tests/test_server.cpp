#include <doctest.h>

#include <fstream>
#include <thread>

#include "fixtures.hpp"
#include "moonshine/aligner.hpp"
#include "moonshine/ddm.hpp"
#include "moonshine/error.hpp"
#include "moonshine/fdm.hpp"
#include "moonshine/render.hpp"
#include "moonshine/server.hpp"
#include "schema_check.hpp"
// After the model headers: <resolv.h> defines _res.
#include <httplib.h>

using namespace moonshine;
using nlohmann::json;

namespace {

// Small untrained checkpoints written once per process.
struct Checkpoints {
  fixtures::TempDir dir{"server"};
  std::filesystem::path fdm = dir / "fdm.mshm";
  std::filesystem::path ddm = dir / "ddm.mshm";
  std::filesystem::path slow_ddm = dir / "slow_ddm.mshm";
  std::filesystem::path aligner = dir / "aligner.mshm";
  std::filesystem::path web = dir / "web";

  Checkpoints() {
    FdmConfig f;
    f.base_channels = 16;
    f.height = f.width = 16;
    save_fdm(fdm, fdm_init(f));
    DdmConfig d;
    d.base_channels = 8;
    d.time_dim = 16;
    d.steps = 20;
    d.height = d.width = 16;
    save_ddm(ddm, ddm_init(d));
    d.steps = 1000;
    save_ddm(slow_ddm, ddm_init(d));
    AlignerConfig a;
    a.height = a.width = 16;
    a.proj_dim = 32;
    save_aligner(aligner, aligner_init(a));
    std::filesystem::create_directories(web / "assets");
    std::ofstream(web / "index.html") << "<!doctype html><title>spa</title>";
    std::ofstream(web / "assets" / "app.js") << "console.log(1);";
  }
};

const Checkpoints& checkpoints() {
  static Checkpoints c;
  return c;
}

struct Running {
  ApiServer server;
  std::thread thread;
  int port;
  httplib::Client client;

  explicit Running(ServeConfig cfg)
      : server((cfg.port = 0, std::move(cfg))), port(server.bind()), client("127.0.0.1", port) {
    thread = std::thread([this] { server.run(); });
    server.wait_until_ready();
    client.set_read_timeout(60, 0);
  }
  ~Running() {
    server.stop();
    thread.join();
  }

  httplib::Result post(const std::string& path, const json& body) {
    return client.Post(path, body.dump(), "application/json");
  }
};

ServeConfig full_config() {
  ServeConfig cfg;
  cfg.fdm_path = checkpoints().fdm;
  cfg.ddm_path = checkpoints().ddm;
  cfg.aligner_path = checkpoints().aligner;
  cfg.static_dir = checkpoints().web;
  return cfg;
}

json body_of(const httplib::Result& r) { return json::parse(r->body); }

std::string first_error(const std::vector<std::string>& errors) { return errors.empty() ? "" : errors.front(); }

#define CHECK_SCHEMA(name, value) CHECK_MESSAGE(schema_check::validate(name, value).empty(), first_error(schema_check::validate(name, value)))

json grid16(Tile fill) { return grid_to_json(MapGrid(16, 16, fill)); }

}  // namespace

TEST_SUITE("server") {
  TEST_CASE("no models loaded") {
    ServeConfig cfg;
    Running s(cfg);
    auto h = s.client.Get("/api/health");
    REQUIRE(h);
    CHECK(h->status == 503);
    CHECK(body_of(h)["status"] == "unavailable");
    CHECK_SCHEMA("health", body_of(h));
    auto g = s.post("/api/generate", {{"model", "fdm"}, {"prompt", "x"}});
    CHECK(g->status == 404);
    CHECK_SCHEMA("error", body_of(g));
    CHECK(s.post("/api/score", {{"prompt", "x"}, {"grid", grid16(Tile::Ground)}})->status == 404);
    // Analysis needs no model.
    CHECK(s.post("/api/analyze", {{"grid", grid16(Tile::Ground)}})->status == 200);
    // No static dir: non-API paths are 404 too.
    CHECK(s.client.Get("/")->status == 404);
  }

  TEST_CASE("health, tiles and version") {
    Running s(full_config());
    auto h = s.client.Get("/api/health");
    CHECK(h->status == 200);
    CHECK(body_of(h) == json{{"status", "ok"}, {"models", {"fdm", "ddm"}}, {"aligner", true}});
    CHECK_SCHEMA("health", body_of(h));

    auto t = s.client.Get("/api/tiles");
    CHECK(t->status == 200);
    const auto tiles = body_of(t);
    CHECK_SCHEMA("tiles", tiles);
    CHECK(tiles[9]["name"] == "Lava");
    CHECK(tiles[9]["class"] == "hazard");
    CHECK(tiles[7]["char"] == ".");

    auto v = s.client.Get("/api/version");
    CHECK(v->status == 200);
    const auto version = body_of(v);
    CHECK_SCHEMA("version", version);
    CHECK(version["api"] == std::string(kApiVersion));
    for (const auto& [name, url] : version["schemas"].items()) {
      auto r = s.client.Get(url.get<std::string>());
      REQUIRE_MESSAGE(r->status == 200, name);
      const auto schema = json::parse(r->body);
      CHECK(schema["$id"] == "moonshine/" + name + ".json");
    }
    CHECK(s.client.Get("/api/schemas/nothing.json")->status == 404);
  }

  TEST_CASE("generate") {
    Running s(full_config());
    auto a = s.post("/api/generate", {{"model", "fdm"}, {"prompt", "a lake of lava"}, {"seed", 7}});
    REQUIRE(a->status == 200);
    const auto ja = body_of(a);
    CHECK_SCHEMA("generate_response", ja);
    CHECK(ja["seed"] == 7);
    const auto grid = grid_from_json(ja["grid"], std::nullopt);
    CHECK(grid.height() == 16);
    CHECK(ja["ascii"] == render_ascii(grid));
    CHECK(body_of(s.post("/api/generate", {{"model", "fdm"}, {"prompt", "a lake of lava"}, {"seed", 7}}))["grid"] == ja["grid"]);
    CHECK_FALSE(ja.contains("frames"));

    auto d = s.post("/api/generate", {{"model", "ddm"}, {"prompt", "a lake of lava"}, {"seed", 3}, {"dump_steps", true}});
    REQUIRE(d->status == 200);
    const auto jd = body_of(d);
    CHECK_SCHEMA("generate_response", jd);
    CHECK(jd["steps"] == 20);
    REQUIRE(jd["frames"].size() == 11);
    CHECK(jd["frames"].back() == jd["grid"]);
    auto fast = body_of(s.post("/api/generate", {{"model", "ddm"}, {"prompt", "a lake of lava"}, {"seed", 3}, {"steps", 4}}));
    CHECK(fast["steps"] == 4);
    CHECK_FALSE(fast.contains("frames"));
    CHECK(body_of(s.post("/api/generate", {{"model", "ddm"}, {"prompt", "a lake of lava"}, {"seed", 3}}))["grid"] == jd["grid"]);
  }

  TEST_CASE("generate request validation") {
    auto cfg = full_config();
    cfg.max_prompt_bytes = 64;
    Running s(cfg);
    auto status = [&](const json& body) { return s.post("/api/generate", body)->status; };
    CHECK(s.client.Post("/api/generate", "{not json", "application/json")->status == 400);
    CHECK(s.client.Post("/api/generate", "[1,2]", "application/json")->status == 400);
    CHECK(status({{"prompt", "x"}}) == 400);
    CHECK(status({{"model", "fdm"}}) == 400);
    CHECK(status({{"model", "fdm"}, {"prompt", "   "}}) == 400);
    CHECK(status({{"model", "fdm"}, {"prompt", std::string(65, 'a')}}) == 400);
    CHECK(status({{"model", "fdm"}, {"prompt", std::string(64, 'a')}}) == 200);
    CHECK(status({{"model", "fdm"}, {"prompt", "x"}, {"seed", -1}}) == 400);
    CHECK(status({{"model", "fdm"}, {"prompt", "x"}, {"seed", "12"}}) == 400);
    CHECK(status({{"model", "ddm"}, {"prompt", "x"}, {"steps", 0}}) == 400);
    CHECK(status({{"model", "ddm"}, {"prompt", "x"}, {"steps", 21}}) == 400);
    CHECK(status({{"model", "ddm"}, {"prompt", "x"}, {"steps", "5"}}) == 400);
    CHECK(status({{"model", "ddm"}, {"prompt", "x"}, {"dump_steps", 1}}) == 400);
    CHECK(status({{"model", "gan"}, {"prompt", "x"}}) == 404);
    const auto err = body_of(s.post("/api/generate", {{"model", "fdm"}, {"prompt", ""}}));
    CHECK_SCHEMA("error", err);
    CHECK_SCHEMA("generate_request", json({{"model", "ddm"}, {"prompt", "x"}, {"seed", 1}, {"steps", 5}, {"dump_steps", true}}));
  }

  TEST_CASE("busy server answers 429") {
    ServeConfig cfg;
    cfg.ddm_path = checkpoints().slow_ddm;
    cfg.max_concurrent = 1;
    cfg.queue_limit = 0;
    Running s(cfg);
    std::atomic<int> ok{0}, busy{0}, other{0};
    std::vector<std::thread> clients;
    for (int i = 0; i < 4; ++i) {
      clients.emplace_back([&, i] {
        httplib::Client c("127.0.0.1", s.port);
        c.set_read_timeout(120, 0);
        auto r = c.Post("/api/generate", json{{"model", "ddm"}, {"prompt", "x"}, {"seed", i}}.dump(), "application/json");
        if (r && r->status == 200) {
          ++ok;
        } else if (r && r->status == 429) {
          ++busy;
        } else {
          ++other;
        }
      });
      if (i == 0) std::this_thread::sleep_for(std::chrono::milliseconds(100));
    }
    for (auto& t : clients) t.join();
    CHECK(ok >= 1);
    CHECK(busy >= 1);
    CHECK(other == 0);
  }

  TEST_CASE("analyze") {
    Running s(full_config());
    MapGrid m(32, 32, Tile::None);
    fixtures::fill_rect(m, 2, 2, 5, 5, Tile::Ground);
    fixtures::fill_rect(m, 4, 7, 1, 6, Tile::Ground);
    fixtures::fill_rect(m, 2, 13, 5, 5, Tile::Ground);
    fixtures::fill_rect(m, 20, 20, 1, 3, Tile::Sand);
    auto r = s.post("/api/analyze", {{"grid", grid_to_json(m)}});
    REQUIRE(r->status == 200);
    const auto j = body_of(r);
    CHECK_SCHEMA("analyze_response", j);
    CHECK(j["connectivity"]["components"] == 2);
    CHECK(j["connectivity"]["largest"] == 56);
    CHECK(j["meta"] == json::parse(meta_to_json(analyze(m)).dump()));
    auto bad = grid_to_json(m);
    bad[0][0] = 14;
    CHECK(s.post("/api/analyze", {{"grid", bad}})->status == 400);
    auto ragged = grid_to_json(m);
    ragged[3].erase(0);
    CHECK(s.post("/api/analyze", {{"grid", ragged}})->status == 400);
    CHECK(s.post("/api/analyze", json::object())->status == 400);
    CHECK_SCHEMA("analyze_request", json({{"grid", grid_to_json(m)}}));
  }

  TEST_CASE("score") {
    Running s(full_config());
    const auto model = load_aligner(checkpoints().aligner);
    const MapGrid m(16, 16, Tile::Ice);
    auto r = s.post("/api/score", {{"prompt", "an icy cave"}, {"grid", grid_to_json(m)}});
    REQUIRE(r->status == 200);
    const auto j = body_of(r);
    CHECK_SCHEMA("score_response", j);
    CHECK(j["aligner_score"].get<double>() == doctest::Approx(align_score(model, std::string("an icy cave"), m)));
    CHECK(s.post("/api/score", {{"prompt", "an icy cave"}, {"grid", grid_to_json(MapGrid(32, 32, Tile::Ice))}})->status == 400);
    CHECK(s.post("/api/score", {{"grid", grid_to_json(m)}})->status == 400);
  }

  TEST_CASE("static files and spa fallback") {
    Running s(full_config());
    auto root = s.client.Get("/");
    CHECK(root->status == 200);
    CHECK(root->body.find("spa") != std::string::npos);
    CHECK(root->get_header_value("Content-Type").find("text/html") == 0);
    auto js = s.client.Get("/assets/app.js");
    CHECK(js->status == 200);
    CHECK(js->get_header_value("Content-Type").find("text/javascript") == 0);
    auto deep = s.client.Get("/maps/42/view");
    CHECK(deep->status == 200);
    CHECK(deep->body == root->body);
    auto traversal = s.client.Get("/../../../../etc/passwd");
    CHECK(traversal->body.find("root:") == std::string::npos);
    auto api = s.client.Get("/api/nothing");
    CHECK(api->status == 404);
    CHECK_SCHEMA("error", body_of(api));
    auto api_post = s.post("/api/nothing", json::object());
    CHECK(api_post->status == 404);
    CHECK_SCHEMA("error", body_of(api_post));
  }

  TEST_CASE("config validation and bad checkpoints") {
    ServeConfig cfg;
    cfg.max_concurrent = 0;
    CHECK_THROWS_AS(cfg.validate(), UsageError);
    cfg = ServeConfig{};
    cfg.port = 70000;
    CHECK_THROWS_AS(cfg.validate(), UsageError);
    cfg = ServeConfig{};
    cfg.fdm_path = checkpoints().dir / "missing.mshm";
    CHECK_THROWS_AS(ApiServer{cfg}, DataError);
    cfg.fdm_path = checkpoints().ddm;
    CHECK_THROWS_AS(ApiServer{cfg}, DataError);
  }
}

TEST_SUITE("schemas") {
  TEST_CASE("dataset records and model configs conform") {
    for (const auto& r : fixtures::labeled_records(20, 5)) {
      const auto j = json::parse(record_to_line(r));
      CHECK_SCHEMA("dataset_record", j);
    }
    CHECK_SCHEMA("model_config", json::parse(FdmConfig{}.to_json().dump()));
    CHECK_SCHEMA("model_config", json::parse(DdmConfig{}.to_json().dump()));
    CHECK_SCHEMA("model_config", json::parse(AlignerConfig{}.to_json().dump()));
    auto bad = json::parse(FdmConfig{}.to_json().dump());
    bad["base_channels"] = 6;
    CHECK_FALSE(schema_check::validate("model_config", bad).empty());
    CHECK_FALSE(schema_check::validate("dataset_record", json{{"id", "x"}, {"seed", 1}, {"grid", json::array()}}).empty());
  }
}
