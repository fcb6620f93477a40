#include <filesystem>
#include <future>
#include <thread>

#include "aqd/errors.hpp"
#include "artifacts.hpp"
#include "doctest.h"
#include "httplib.h"
#include "json.hpp"
#include "manifest.hpp"
#include "service.hpp"
#include "small_run.hpp"
#include "temp_dir.hpp"

using namespace aqd;
using namespace aqd::cli;
using nlohmann::json;

namespace {

struct Served {
  TempDir dir;
  std::filesystem::path manifest;
  Served() {
    manifest = write_manifest(dir.path);
    for (const char* s : {"synth", "features", "pseudo-gt", "train-upsampler", "downscale"}) {
      if (run_stage(s, manifest) != 0) throw std::runtime_error(std::string("stage failed: ") + s);
    }
  }
};

Served& served() {
  static Served s;
  return s;
}

}  // namespace

TEST_CASE("bind parsing") {
  CHECK(parse_bind("127.0.0.1:8080") == std::pair<std::string, int>{"127.0.0.1", 8080});
  CHECK_THROWS_AS(parse_bind("localhost"), ConfigError);
  CHECK_THROWS_AS(parse_bind("host:99999"), ConfigError);
}

TEST_CASE("predictions match downscaled output") {
  const auto& s = served();
  const auto m = Manifest::load(s.manifest);
  const PredictionService svc(m);
  const WorkPaths wp{m.work_dir()};
  const auto pts = read_downscale_csv(wp.downscaled_csv(2002));
  REQUIRE(!pts.empty());
  for (std::size_t i = 0; i < pts.size(); i += 7) {
    const auto p = svc.predict(pts[i].location, 2002);
    CHECK(p.max_gwl_m == pts[i].max_gwl);
    CHECK(p.min_gwl_m == pts[i].min_gwl);
  }
  CHECK_THROWS_AS(svc.predict(pts[0].location, 1990), CoverageError);
  CHECK_THROWS_AS(svc.predict(GeoPoint{0.0, 0.0}, 2002), CoverageError);
}

TEST_CASE("request handling") {
  const auto m = Manifest::load(served().manifest);
  const PredictionService svc(m);
  const auto pts = read_downscale_csv(WorkPaths{m.work_dir()}.downscaled_csv(2003));
  const json req{{"lat", pts[3].location.lat}, {"lon", pts[3].location.lon}, {"year", 2003}};

  const auto ok = svc.handle_predict(req.dump());
  REQUIRE(ok.status == 200);
  const auto body = json::parse(ok.body);
  CHECK(body["max_gwl_m"].get<double>() == pts[3].max_gwl);
  CHECK(body.contains("recharge_cm"));
  CHECK(svc.handle_predict(req.dump()).body == ok.body);

  CHECK(svc.handle_predict("{\"lat\": 1,").status == 400);
  CHECK(svc.handle_predict("[1,2]").status == 400);
  CHECK(svc.handle_predict(R"({"lat": 23.1, "lon": 89.1})").status == 400);
  CHECK(svc.handle_predict(R"({"lat": "x", "lon": 89.1, "year": 2003})").status == 400);
  CHECK(svc.handle_predict(R"({"lat": 10.0, "lon": 10.0, "year": 2003})").status == 422);
  auto unknown = req;
  unknown["year"] = 1990;
  CHECK(svc.handle_predict(unknown.dump()).status == 422);
}

TEST_CASE("http round trip") {
  const auto m = Manifest::load(served().manifest);
  const PredictionService svc(m);
  httplib::Server server;
  svc.mount(server);
  const int port = server.bind_to_any_port("127.0.0.1");
  REQUIRE(port > 0);
  std::thread t([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  httplib::Client client("127.0.0.1", port);
  const auto health = client.Get("/health");
  REQUIRE(health);
  CHECK(health->status == 200);
  CHECK(json::parse(health->body) == json{{"status", "ok"}});

  const auto pts = read_downscale_csv(WorkPaths{m.work_dir()}.downscaled_csv(2001));
  const json req{{"lat", pts[0].location.lat}, {"lon", pts[0].location.lon}, {"year", 2001}};
  std::vector<std::future<std::string>> replies;
  for (int i = 0; i < 4; ++i) {
    replies.push_back(std::async(std::launch::async, [&] {
      httplib::Client c("127.0.0.1", port);
      const auto r = c.Post("/predict", req.dump(), "application/json");
      return r && r->status == 200 ? r->body : std::string();
    }));
  }
  std::string first;
  for (auto& f : replies) {
    const auto body = f.get();
    CHECK(!body.empty());
    if (first.empty()) first = body;
    CHECK(body == first);
  }
  CHECK(json::parse(first)["min_gwl_m"].get<double>() == pts[0].min_gwl);

  const auto bad = client.Post("/predict", "nope", "application/json");
  REQUIRE(bad);
  CHECK(bad->status == 400);
  const auto far = client.Post("/predict", R"({"lat": -40, "lon": 10, "year": 2001})", "application/json");
  REQUIRE(far);
  CHECK(far->status == 422);

  server.stop();
  t.join();
}
