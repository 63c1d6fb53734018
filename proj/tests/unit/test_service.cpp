#include <doctest.h>

#include <filesystem>
#include <sstream>
#include <thread>

#include "blockflow/service.hpp"
#include "blockflow/wind_io.hpp"

// After Eigen: <resolv.h> defines a _res macro that clashes with Eigen.
#include <httplib.h>

using namespace blockflow;

namespace {

struct Running {
  Service service;
  int port;
  explicit Running(ServiceOptions o = {}) : service([&] {
                                             o.port = 0;
                                             return o;
                                           }()),
                                           port(service.start()) {}
  httplib::Client client() const {
    httplib::Client c("127.0.0.1", port);
    c.set_read_timeout(10, 0);
    return c;
  }
};

json body_of(const httplib::Result& r) {
  REQUIRE(r);
  return json::parse(r->body);
}

std::string create_session(httplib::Client& c) {
  const auto r = c.Post("/api/v1/sessions", "{}", "application/json");
  REQUIRE(r);
  CHECK(r->status == 201);
  return body_of(r).at("session").get<std::string>();
}

json pose_body(double x) { return {{"q", {1, 0, 0, 0}}, {"t", {x, 0.3, 0.0075}}}; }

std::vector<json> ndjson(const std::string& text) {
  std::vector<json> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) out.push_back(json::parse(line));
  }
  return out;
}

const std::string kTinyWind = R"({"nx":32,"ny":16,"dx":0.02,"origin":[-0.32,-0.16],"max_iterations":300})";

void wait_for_idle(Service& s, const std::string& id) { s.store().find(id)->wait_idle(); }

}  // namespace

TEST_CASE("health and sessions") {
  Running r;
  auto c = r.client();
  const auto h = c.Get("/api/v1/health");
  REQUIRE(h);
  CHECK(h->status == 200);
  const std::string a = create_session(c);
  const std::string b = create_session(c);
  CHECK(a != b);
  const json list = body_of(c.Get("/api/v1/sessions"));
  CHECK(list.at("sessions").size() == 2);
  const json scene = body_of(c.Get("/api/v1/sessions/" + a + "/scene"));
  CHECK(scene.at("version") == 0);
  CHECK(scene.at("dirty") == true);
  CHECK(scene.at("scene").at("blocks").size() == 3);
}

TEST_CASE("error statuses") {
  Running r;
  auto c = r.client();
  const std::string id = create_session(c);
  CHECK(c.Get("/api/v1/sessions/nope/scene")->status == 404);
  CHECK(c.Post("/api/v1/sessions/" + id + "/blocks/green/pose", pose_body(0).dump(), "application/json")->status == 404);
  const json bad_q{{"q", {2, 0, 0, 0}}, {"t", {0, 0, 0}}};
  const auto rot = c.Post("/api/v1/sessions/" + id + "/blocks/red/pose", bad_q.dump(), "application/json");
  CHECK(rot->status == 422);
  CHECK(body_of(rot).at("error").at("code") == "InvalidRotation");
  CHECK(c.Post("/api/v1/sessions/" + id + "/blocks/red/pose", "{oops", "application/json")->status == 400);
  CHECK(c.Post("/api/v1/sessions/" + id + "/wind", R"({"tau":0.4})", "application/json")->status == 422);
  CHECK(c.Get("/api/v1/sessions/" + id + "/wind")->status == 404);
  CHECK(c.Get("/api/v1/sessions/" + id + "/stream?from=x")->status == 400);
  CHECK(c.Post("/api/v1/sessions", R"({"scene":{"blocks":1}})", "application/json")->status == 400);
}

TEST_CASE("validation endpoint") {
  Running r;
  auto c = r.client();
  const std::string id = create_session(c);
  CHECK(body_of(c.Get("/api/v1/sessions/" + id + "/validate")).at("violations").empty());
  // Move red onto blue.
  const json onto{{"q", {1, 0, 0, 0}}, {"t", {0, -0.05, 0.0075}}};
  c.Post("/api/v1/sessions/" + id + "/blocks/red/pose", onto.dump(), "application/json");
  const json v = body_of(c.Get("/api/v1/sessions/" + id + "/validate"));
  REQUIRE(v.at("violations").size() == 1);
  CHECK(v.at("violations")[0].at("kind") == "interpenetration");
}

TEST_CASE("concurrent edits each bump the version") {
  Running r;
  auto c = r.client();
  const std::string id = create_session(c);
  std::vector<std::thread> threads;
  for (int i = 0; i < 2; ++i) {
    threads.emplace_back([&, i] {
      auto own = r.client();
      const auto res = own.Post("/api/v1/sessions/" + id + "/blocks/yellow/pose", pose_body(0.1 * i).dump(), "application/json");
      CHECK(res->status == 200);
    });
  }
  for (auto& t : threads) t.join();
  CHECK(body_of(c.Get("/api/v1/sessions/" + id + "/scene")).at("version") == 2);
}

TEST_CASE("wind runs, staleness and streaming") {
  Running r;
  auto c = r.client();
  const std::string id = create_session(c);
  const auto started = c.Post("/api/v1/sessions/" + id + "/wind", kTinyWind, "application/json");
  REQUIRE(started);
  CHECK(started->status == 202);
  wait_for_idle(r.service, id);

  json wind = body_of(c.Get("/api/v1/sessions/" + id + "/wind"));
  CHECK(wind.at("scene_version") == 0);
  CHECK(wind.at("dirty") == false);
  CHECK(wind.at("ux").size() == 32 * 16);
  CHECK(body_of(c.Get("/api/v1/sessions/" + id + "/scene")).at("dirty") == false);

  const auto bin = c.Get("/api/v1/sessions/" + id + "/wind?format=binary");
  REQUIRE(bin);
  CHECK(bin->get_header_value("X-Scene-Version") == "0");
  const WindField parsed = parse_wind_binary(bin->body);
  CHECK(parsed.nx == 32);
  CHECK(parsed.ux == wind.at("ux").get<std::vector<double>>());

  c.Post("/api/v1/sessions/" + id + "/blocks/blue/pose", pose_body(0.05).dump(), "application/json");
  wind = body_of(c.Get("/api/v1/sessions/" + id + "/wind"));
  CHECK(wind.at("scene_version") == 0);
  CHECK(wind.at("current_version") == 1);
  CHECK(wind.at("dirty") == true);

  const std::size_t total = r.service.store().find(id)->events().size();
  const std::string url = "/api/v1/sessions/" + id + "/stream?from=0&limit=" + std::to_string(total);
  std::string first, second;
  std::thread t1([&] { first = r.client().Get(url)->body; });
  std::thread t2([&] { second = r.client().Get(url)->body; });
  t1.join();
  t2.join();
  CHECK(first == second);
  const std::vector<json> events = ndjson(first);
  REQUIRE(events.size() == total);
  for (std::size_t i = 0; i < events.size(); ++i) CHECK(events[i].at("seq") == i);
  CHECK(events.front().at("type") == "wind_started");
  CHECK(events.back().at("type") == "scene_updated");
  CHECK(events[events.size() - 2].at("type") == "wind_done");
  CHECK(events[1].at("type") == "wind_progress");

  const std::vector<json> tail = ndjson(r.client().Get("/api/v1/sessions/" + id + "/stream?from=" + std::to_string(total - 1) + "&limit=1")->body);
  REQUIRE(tail.size() == 1);
  CHECK(tail[0] == events.back());
}

TEST_CASE("second run is rejected while one is active") {
  Running r;
  auto c = r.client();
  const std::string id = create_session(c);
  const std::string slow = R"({"nx":128,"ny":64,"tolerance":1e-12,"max_iterations":1000000})";
  CHECK(c.Post("/api/v1/sessions/" + id + "/wind", slow, "application/json")->status == 202);
  CHECK(c.Post("/api/v1/sessions/" + id + "/wind", slow, "application/json")->status == 409);
  r.service.store().find(id)->cancel();
  wait_for_idle(r.service, id);
  CHECK(c.Post("/api/v1/sessions/" + id + "/wind", kTinyWind, "application/json")->status == 202);
  wait_for_idle(r.service, id);
}

TEST_CASE("fully blocked inlet fails the request") {
  Running r;
  auto c = r.client();
  const std::string id = create_session(c);
  const json wall{{"q", {1, 0, 0, 0}}, {"t", {-0.315, 0.0, 0.0075}}};
  // The block spans the whole height of a narrow grid at its inlet.
  c.Post("/api/v1/sessions/" + id + "/blocks/blue/pose", wall.dump(), "application/json");
  const std::string narrow = R"({"nx":16,"ny":16,"dx":0.001,"origin":[-0.32,-0.008]})";
  const auto res = c.Post("/api/v1/sessions/" + id + "/wind", narrow, "application/json");
  CHECK(res->status == 422);
  CHECK(body_of(res).at("error").at("code") == "FullyBlocked");
}

TEST_CASE("sessions persist through a snapshot file") {
  const auto path = std::filesystem::temp_directory_path() / "blockflow_sessions.json";
  std::filesystem::remove(path);
  std::string id;
  {
    ServiceOptions o;
    o.snapshot = path;
    Running r(o);
    auto c = r.client();
    id = create_session(c);
    c.Post("/api/v1/sessions/" + id + "/blocks/red/pose", pose_body(0.2).dump(), "application/json");
    r.service.stop();
  }
  ServiceOptions o;
  o.snapshot = path;
  Running r(o);
  auto c = r.client();
  const json scene = body_of(c.Get("/api/v1/sessions/" + id + "/scene"));
  CHECK(scene.at("version") == 1);
  CHECK(scene.at("scene").dump().find("0.2") != std::string::npos);
  r.service.stop();
  std::filesystem::remove(path);
}

TEST_CASE("wind request parsing") {
  const WindRequest req = wind_request_from_json(json::parse(R"({"nx":20,"tolerance":1e-4,"max_iterations":50})"));
  CHECK(req.spec.nx == 20);
  CHECK(req.options.tolerance == 1e-4);
  CHECK(req.options.max_iterations == 50);
  CHECK_THROWS_AS(wind_request_from_json(json::parse(R"({"tolerance":"small"})")), Error);
  CHECK_THROWS_AS(wind_request_from_json(json::parse(R"({"tolerance":0})")), Error);
}
