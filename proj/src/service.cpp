#include "blockflow/service.hpp"

#include <httplib.h>

#include <cmath>

#include "blockflow/wind_io.hpp"

namespace blockflow {

std::size_t EventLog::append(json event) {
  std::size_t seq;
  {
    std::lock_guard lock(mu_);
    seq = events_.size();
    event["seq"] = seq;
    events_.push_back(std::move(event));
  }
  cv_.notify_all();
  return seq;
}

std::vector<json> EventLog::since(std::size_t from) const {
  std::lock_guard lock(mu_);
  if (from >= events_.size()) return {};
  return {events_.begin() + static_cast<std::ptrdiff_t>(from), events_.end()};
}

std::vector<json> EventLog::wait_since(std::size_t from, std::chrono::milliseconds timeout) const {
  std::unique_lock lock(mu_);
  cv_.wait_for(lock, timeout, [&] { return closed_ || events_.size() > from; });
  if (from >= events_.size()) return {};
  return {events_.begin() + static_cast<std::ptrdiff_t>(from), events_.end()};
}

std::size_t EventLog::size() const {
  std::lock_guard lock(mu_);
  return events_.size();
}

void EventLog::close() {
  {
    std::lock_guard lock(mu_);
    closed_ = true;
  }
  cv_.notify_all();
}

bool EventLog::closed() const {
  std::lock_guard lock(mu_);
  return closed_;
}

WindRequest wind_request_from_json(const json& body) {
  if (!body.is_object()) throw Error(ErrorCode::ParseError, "wind request must be a JSON object");
  WindRequest req;
  req.options.tolerance = 1e-5;
  req.options.max_iterations = 20000;
  json spec = body;
  try {
    if (spec.contains("tolerance")) {
      req.options.tolerance = spec.at("tolerance").get<double>();
      spec.erase("tolerance");
    }
    if (spec.contains("max_iterations")) {
      req.options.max_iterations = spec.at("max_iterations").get<int>();
      spec.erase("max_iterations");
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("wind request: ") + e.what());
  }
  if (!(req.options.tolerance > 0.0)) throw Error(ErrorCode::ConfigError, "tolerance must be positive");
  if (req.options.max_iterations < 0) throw Error(ErrorCode::ConfigError, "max_iterations must be non-negative");
  req.spec = grid_spec_from_json(spec);
  return req;
}

Session::Session(std::string id, Scene scene, int version) : id_(std::move(id)), scene_(std::move(scene)), version_(version) {}

Session::~Session() {
  cancel();
  if (worker_.joinable()) worker_.join();
  events_.close();
}

SceneSnapshot Session::snapshot() const {
  std::lock_guard lock(mu_);
  return {scene_, version_, !wind_ || wind_->scene_version != version_};
}

int Session::move_block(const std::string& block_id, const Pose& block_to_world) {
  std::lock_guard lock(mu_);
  if (!scene_.find(block_id)) throw Error(ErrorCode::InvalidArgument, "unknown block '" + block_id + "'");
  if (block_to_world.source() != block_id || block_to_world.target() != kWorldFrame) {
    throw Error(ErrorCode::FrameMismatch, "pose must map '" + block_id + "' to '" + kWorldFrame + "'");
  }
  scene_.world_poses.insert_or_assign(block_id, block_to_world);
  ++version_;
  events_.append({{"type", "scene_updated"}, {"version", version_}, {"block", block_id}});
  return version_;
}

std::optional<std::string> Session::start_wind(const WindRequest& request) {
  std::lock_guard lock(mu_);
  if (active_) return std::nullopt;
  // The solve reads this mask, built from the scene as of now; later edits
  // only mark the result stale.
  ObstacleMask mask = voxelize(scene_, request.spec);
  if (worker_.joinable()) worker_.join();
  const std::string run_id = id_ + "-run" + std::to_string(++runs_started_);
  active_ = true;
  cancel_ = false;
  events_.append({{"type", "wind_started"}, {"run_id", run_id}, {"version", version_}});
  worker_ = std::thread([this, run_id, version = version_, request, mask = std::move(mask)] {
    run_wind(run_id, version, mask, request);
  });
  return run_id;
}

void Session::run_wind(const std::string& run_id, int version, const ObstacleMask& mask, const WindRequest& request) {
  bool progressed = false;
  SteadyOptions options = request.options;
  options.on_progress = [&](int iteration, double residual) {
    progressed = true;
    events_.append({{"type", "wind_progress"},
                    {"run_id", run_id},
                    {"iteration", iteration},
                    {"residual", std::isfinite(residual) ? json(residual) : json(nullptr)}});
  };
  options.should_stop = [this] { return cancel_.load(); };
  try {
    WindField field = run_to_steady(mask, request.spec, options);
    std::lock_guard lock(mu_);
    if (!progressed) {
      events_.append({{"type", "wind_progress"}, {"run_id", run_id}, {"iteration", field.iterations}, {"residual", nullptr}});
    }
    const bool converged = field.converged;
    const int iterations = field.iterations;
    wind_ = WindResult{run_id, version, request.spec, std::move(field)};
    active_ = false;
    events_.append({{"type", "wind_done"},
                    {"run_id", run_id},
                    {"version", version},
                    {"current_version", version_},
                    {"converged", converged},
                    {"iterations", iterations}});
  } catch (const Error& e) {
    std::lock_guard lock(mu_);
    active_ = false;
    events_.append({{"type", "wind_failed"}, {"run_id", run_id}, {"code", std::string(to_string(e.code()))}, {"reason", e.message()}});
  } catch (const std::exception& e) {
    std::lock_guard lock(mu_);
    active_ = false;
    events_.append({{"type", "wind_failed"}, {"run_id", run_id}, {"code", "Internal"}, {"reason", e.what()}});
  }
}

std::optional<WindResult> Session::wind() const {
  std::lock_guard lock(mu_);
  return wind_;
}

bool Session::wind_active() const {
  std::lock_guard lock(mu_);
  return active_;
}

void Session::wait_idle() {
  std::thread worker;
  {
    std::lock_guard lock(mu_);
    if (!worker_.joinable()) return;
    worker = std::move(worker_);
  }
  worker.join();
}

void Session::cancel() { cancel_ = true; }

std::shared_ptr<Session> SessionStore::create(std::optional<Scene> scene) {
  std::lock_guard lock(mu_);
  std::string id = "s" + std::to_string(next_id_++);
  while (sessions_.count(id)) id = "s" + std::to_string(next_id_++);
  auto session = std::make_shared<Session>(id, scene ? std::move(*scene) : default_scene());
  sessions_.emplace(id, session);
  return session;
}

std::shared_ptr<Session> SessionStore::find(const std::string& id) const {
  std::lock_guard lock(mu_);
  auto it = sessions_.find(id);
  return it == sessions_.end() ? nullptr : it->second;
}

std::vector<std::string> SessionStore::ids() const {
  std::lock_guard lock(mu_);
  std::vector<std::string> out;
  for (const auto& [id, s] : sessions_) out.push_back(id);
  return out;
}

void SessionStore::restore(const std::string& id, Scene scene, int version) {
  std::lock_guard lock(mu_);
  sessions_.insert_or_assign(id, std::make_shared<Session>(id, std::move(scene), version));
}

json SessionStore::snapshot_json() const {
  json list = json::array();
  for (const std::string& id : ids()) {
    auto s = find(id);
    if (!s) continue;
    const SceneSnapshot snap = s->snapshot();
    list.push_back({{"id", id}, {"version", snap.version}, {"scene", to_json(snap.scene)}});
  }
  return {{"sessions", list}};
}

void SessionStore::load_snapshot(const json& j) {
  try {
    for (const json& entry : j.at("sessions")) {
      restore(entry.at("id").get<std::string>(), scene_from_json(entry.at("scene")), entry.at("version").get<int>());
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("session snapshot: ") + e.what());
  }
}

void SessionStore::shutdown() {
  std::vector<std::shared_ptr<Session>> all;
  {
    std::lock_guard lock(mu_);
    for (auto& [id, s] : sessions_) all.push_back(s);
  }
  for (auto& s : all) {
    s->cancel();
    s->wait_idle();
    s->events().close();
  }
}

namespace {

int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::ParseError: return 400;
    case ErrorCode::InvalidRotation:
    case ErrorCode::FrameMismatch:
    case ErrorCode::ConfigError:
    case ErrorCode::InvalidArgument:
    case ErrorCode::FullyBlocked: return 422;
    default: return 500;
  }
}

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump() + "\n", "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& code, const std::string& message) {
  send_json(res, status, {{"error", {{"code", code}, {"message", message}}}});
}

json parse_body(const httplib::Request& req) {
  if (req.body.empty()) return json::object();
  json j = json::parse(req.body, nullptr, false);
  if (j.is_discarded()) throw Error(ErrorCode::ParseError, "request body is not valid JSON");
  return j;
}

json wind_json(const WindResult& w, const SceneSnapshot& snap) {
  json out = wind_sidecar(w.field, w.spec);
  out["run_id"] = w.run_id;
  out["scene_version"] = w.scene_version;
  out["current_version"] = snap.version;
  out["dirty"] = snap.dirty;
  out["nx"] = w.field.nx;
  out["ny"] = w.field.ny;
  out["velocity_scale"] = w.spec.inlet_speed_mps / w.spec.inlet_velocity;
  out["rho"] = w.field.rho;
  out["ux"] = w.field.ux;
  out["uy"] = w.field.uy;
  std::vector<int> solid(w.field.solid.begin(), w.field.solid.end());
  out["solid"] = solid;
  return out;
}

}  // namespace

struct Service::Impl {
  httplib::Server server;
  std::atomic<bool> stopping{false};
};

Service::Service(ServiceOptions options) : options_(std::move(options)), impl_(std::make_unique<Impl>()) {
  if (!options_.snapshot.empty() && std::filesystem::exists(options_.snapshot)) {
    store_.load_snapshot(read_json_file(options_.snapshot));
  }
  auto& svr = impl_->server;
  Impl* impl = impl_.get();
  SessionStore* store = &store_;

  // Wraps a handler that needs a session: 404 when absent, Error mapped to
  // a status code.
  auto with_session = [store](auto handler) {
    return [store, handler](const httplib::Request& req, httplib::Response& res) {
      auto session = store->find(req.matches[1]);
      if (!session) return send_error(res, 404, "NotFound", "unknown session '" + std::string(req.matches[1]) + "'");
      try {
        handler(*session, req, res);
      } catch (const Error& e) {
        send_error(res, http_status(e.code()), std::string(to_string(e.code())), e.message());
      }
    };
  };

  svr.Get("/api/v1/health", [](const httplib::Request&, httplib::Response& res) { send_json(res, 200, {{"status", "ok"}}); });

  svr.Post("/api/v1/sessions", [store](const httplib::Request& req, httplib::Response& res) {
    try {
      const json body = parse_body(req);
      std::optional<Scene> scene;
      if (body.contains("scene")) scene = scene_from_json(body.at("scene"));
      auto s = store->create(std::move(scene));
      send_json(res, 201, {{"session", s->id()}, {"version", s->snapshot().version}});
    } catch (const Error& e) {
      send_error(res, http_status(e.code()), std::string(to_string(e.code())), e.message());
    }
  });

  svr.Get("/api/v1/sessions", [store](const httplib::Request&, httplib::Response& res) {
    send_json(res, 200, {{"sessions", store->ids()}});
  });

  svr.Get(R"(/api/v1/sessions/([^/]+)/scene)", with_session([](Session& s, const httplib::Request&, httplib::Response& res) {
            const SceneSnapshot snap = s.snapshot();
            send_json(res, 200, {{"session", s.id()}, {"version", snap.version}, {"dirty", snap.dirty}, {"scene", to_json(snap.scene)}});
          }));

  svr.Get(R"(/api/v1/sessions/([^/]+)/validate)", with_session([](Session& s, const httplib::Request&, httplib::Response& res) {
            const SceneSnapshot snap = s.snapshot();
            json list = json::array();
            for (const Violation& v : validate_scene(snap.scene)) {
              static const char* kKinds[] = {"duplicate_id", "missing_pose", "interpenetration"};
              list.push_back({{"kind", kKinds[static_cast<int>(v.kind)]}, {"blocks", v.block_ids}, {"message", v.message}});
            }
            send_json(res, 200, {{"version", snap.version}, {"violations", list}});
          }));

  svr.Post(R"(/api/v1/sessions/([^/]+)/blocks/([^/]+)/pose)",
           with_session([](Session& s, const httplib::Request& req, httplib::Response& res) {
             const std::string block = req.matches[2];
             if (!s.snapshot().scene.find(block)) return send_error(res, 404, "NotFound", "unknown block '" + block + "'");
             json body = parse_body(req);
             if (body.contains("pose")) body = body.at("pose");
             if (!body.is_object()) throw Error(ErrorCode::ParseError, "pose must be an object");
             if (!body.contains("src")) body["src"] = block;
             if (!body.contains("dst")) body["dst"] = kWorldFrame;
             const int version = s.move_block(block, pose_from_json(body));
             send_json(res, 200, {{"version", version}});
           }));

  svr.Post(R"(/api/v1/sessions/([^/]+)/wind)", with_session([](Session& s, const httplib::Request& req, httplib::Response& res) {
             const WindRequest request = wind_request_from_json(parse_body(req));
             const auto run = s.start_wind(request);
             if (!run) return send_error(res, 409, "Conflict", "a wind run is already active for this session");
             send_json(res, 202, {{"run_id", *run}, {"version", s.snapshot().version}});
           }));

  svr.Get(R"(/api/v1/sessions/([^/]+)/wind)", with_session([](Session& s, const httplib::Request& req, httplib::Response& res) {
            const auto wind = s.wind();
            if (!wind) return send_error(res, 404, "NotFound", "no wind result yet");
            const SceneSnapshot snap = s.snapshot();
            if (req.get_param_value("format") == "binary") {
              res.set_header("X-Scene-Version", std::to_string(wind->scene_version));
              res.set_header("X-Run-Id", wind->run_id);
              res.set_content(serialize_wind_binary(wind->field, wind->spec), "application/octet-stream");
              return;
            }
            send_json(res, 200, wind_json(*wind, snap));
          }));

  svr.Get(R"(/api/v1/sessions/([^/]+)/stream)",
          [store, impl](const httplib::Request& req, httplib::Response& res) {
            auto session = store->find(req.matches[1]);
            if (!session) return send_error(res, 404, "NotFound", "unknown session");
            std::size_t from = 0;
            long long limit = -1;
            try {
              if (req.has_param("from")) from = std::stoull(req.get_param_value("from"));
              if (req.has_param("limit")) limit = std::stoll(req.get_param_value("limit"));
            } catch (const std::exception&) {
              return send_error(res, 400, "ParseError", "from and limit must be integers");
            }
            auto cursor = std::make_shared<std::size_t>(from);
            auto sent = std::make_shared<long long>(0);
            res.set_chunked_content_provider("application/x-ndjson", [session, impl, cursor, sent, limit](std::size_t, httplib::DataSink& sink) {
              if (limit >= 0 && *sent >= limit) {
                sink.done();
                return true;
              }
              const auto events = session->events().wait_since(*cursor, std::chrono::milliseconds(200));
              for (const json& e : events) {
                const std::string line = e.dump() + "\n";
                if (!sink.write(line.data(), line.size())) return false;
                ++*cursor;
                if (limit >= 0 && ++*sent >= limit) break;
              }
              if ((limit >= 0 && *sent >= limit) || impl->stopping || (events.empty() && session->events().closed())) {
                sink.done();
              }
              return true;
            });
          });
}

Service::~Service() { stop(); }

int Service::bind() {
  int port = options_.port;
  if (port == 0) {
    port = impl_->server.bind_to_any_port(options_.host);
  } else if (!impl_->server.bind_to_port(options_.host, port)) {
    port = -1;
  }
  if (port < 0) throw Error(ErrorCode::IoError, "cannot bind " + options_.host + ":" + std::to_string(options_.port));
  port_ = port;
  return port_;
}

void Service::serve() { impl_->server.listen_after_bind(); }

int Service::start() {
  const int port = bind();
  thread_ = std::thread([this] { serve(); });
  impl_->server.wait_until_ready();
  return port;
}

void Service::stop() {
  if (stopped_) return;
  stopped_ = true;
  impl_->stopping = true;
  store_.shutdown();
  impl_->server.stop();
  if (thread_.joinable()) thread_.join();
  if (!options_.snapshot.empty()) write_text_file(options_.snapshot, store_.snapshot_json().dump(2) + "\n");
}

}  // namespace blockflow
