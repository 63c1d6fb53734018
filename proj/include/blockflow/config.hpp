#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "blockflow/json_io.hpp"
#include "blockflow/tracking.hpp"
#include "blockflow/wind.hpp"

namespace blockflow {

/// Settings addressed by dotted keys ("wind.tau", "tracking.passes", ...).
/// Every key has a default; values from a JSON file (nested objects or
/// dotted keys) are applied first, then explicit overrides. Unknown keys and
/// type changes are ConfigError.
class RunConfig {
 public:
  RunConfig();

  void merge_json(const json& j);
  void merge_file(const std::filesystem::path& path);
  /// "key=value"; value is parsed as JSON when possible, else taken as a string.
  void apply_override(const std::string& assignment);
  void set(const std::string& key, json value);

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  const json& get(const std::string& key) const;
  int get_int(const std::string& key) const;
  std::uint64_t get_seed() const;
  double get_double(const std::string& key) const;
  bool get_bool(const std::string& key) const;
  std::string get_string(const std::string& key) const;
  std::vector<double> get_doubles(const std::string& key) const;

  std::vector<std::string> keys() const;
  /// Flat {"dotted.key": value} object, keys sorted.
  json to_json() const;

  CameraIntrinsics intrinsics() const;
  GridSpec grid_spec() const;
  TrackerConfig tracker_config() const;
  NoiseModel noise_model() const;

 private:
  std::map<std::string, json> values_;
};

}  // namespace blockflow
