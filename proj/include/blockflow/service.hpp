#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "blockflow/json_io.hpp"
#include "blockflow/wind.hpp"

// Local design-loop service. Sessions hold an editable scene, a monotonic
// version, the latest wind result (tagged with the version it was solved
// from) and an ordered event log streamed to clients as NDJSON.
//
// HTTP surface, all under /api/v1:
//   GET  /health
//   POST /sessions                          -> 201 {"session","version"}
//   GET  /sessions                          -> {"sessions":[...]}
//   GET  /sessions/{id}/scene               -> {"session","version","dirty","scene"}
//   POST /sessions/{id}/blocks/{block}/pose -> {"version"}; 404 block, 422 bad rotation
//   GET  /sessions/{id}/validate            -> {"violations":[...]}
//   POST /sessions/{id}/wind                -> 202 {"run_id","version"}; 409 while a run is active
//   GET  /sessions/{id}/wind[?format=binary]
//   GET  /sessions/{id}/stream[?from=N&limit=M]  NDJSON events

namespace blockflow {

/// Append-only, totally ordered event list. Every reader sees the same order.
class EventLog {
 public:
  /// Stamps "seq" and appends; returns the sequence number.
  std::size_t append(json event);
  std::vector<json> since(std::size_t from) const;
  /// Blocks until an event with index >= from exists, the timeout passes or
  /// close() was called.
  std::vector<json> wait_since(std::size_t from, std::chrono::milliseconds timeout) const;
  std::size_t size() const;
  void close();
  bool closed() const;

 private:
  mutable std::mutex mu_;
  mutable std::condition_variable cv_;
  std::vector<json> events_;
  bool closed_ = false;
};

struct WindResult {
  std::string run_id;
  int scene_version = 0;
  GridSpec spec;
  WindField field;
};

struct SceneSnapshot {
  Scene scene;
  int version = 0;
  bool dirty = true;
};

struct WindRequest {
  GridSpec spec;
  SteadyOptions options;
};

/// Parses a POST /wind body: grid spec keys plus optional "tolerance" and
/// "max_iterations". Throws ParseError or ConfigError.
WindRequest wind_request_from_json(const json& body);

class Session {
 public:
  Session(std::string id, Scene scene, int version = 0);
  ~Session();

  const std::string& id() const { return id_; }
  SceneSnapshot snapshot() const;
  /// Replaces a block's world pose atomically; returns the new version.
  /// Throws InvalidArgument for an unknown block.
  int move_block(const std::string& block_id, const Pose& block_to_world);
  /// Starts a background solve over the current scene; nullopt while
  /// another run is active. Voxelization errors are thrown here.
  std::optional<std::string> start_wind(const WindRequest& request);
  std::optional<WindResult> wind() const;
  bool wind_active() const;
  /// Waits for the active run, if any, to finish.
  void wait_idle();
  /// Asks an active run to stop at its next progress check.
  void cancel();

  EventLog& events() { return events_; }

 private:
  void run_wind(const std::string& run_id, int version, const ObstacleMask& mask, const WindRequest& request);

  const std::string id_;
  mutable std::mutex mu_;
  Scene scene_;
  int version_ = 0;
  std::optional<WindResult> wind_;
  bool active_ = false;
  int runs_started_ = 0;
  std::thread worker_;
  std::atomic<bool> cancel_{false};
  EventLog events_;
};

class SessionStore {
 public:
  std::shared_ptr<Session> create(std::optional<Scene> scene = std::nullopt);
  std::shared_ptr<Session> find(const std::string& id) const;
  std::vector<std::string> ids() const;
  void restore(const std::string& id, Scene scene, int version);
  /// {"sessions":[{"id","version","scene"}]}
  json snapshot_json() const;
  void load_snapshot(const json& j);
  void shutdown();

 private:
  mutable std::mutex mu_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  int next_id_ = 1;
};

struct ServiceOptions {
  std::string host = "127.0.0.1";
  int port = 7780;  // 0 picks a free port
  std::filesystem::path snapshot;  // empty: no persistence
};

class Service {
 public:
  explicit Service(ServiceOptions options);
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  /// Binds the listening socket and returns the port. Throws IoError.
  int bind();
  /// Serves until stop(); call after bind().
  void serve();
  /// bind() + serve() on a background thread; returns the port.
  int start();
  void stop();

  SessionStore& store() { return store_; }
  int port() const { return port_; }

 private:
  struct Impl;
  ServiceOptions options_;
  SessionStore store_;
  std::unique_ptr<Impl> impl_;
  std::thread thread_;
  int port_ = -1;
  bool stopped_ = false;
};

}  // namespace blockflow
