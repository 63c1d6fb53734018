#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "blockflow/config.hpp"
#include "blockflow/ground_truth.hpp"
#include "blockflow/render.hpp"

namespace blockflow::cli {

/// Output directory that records every artifact for manifest.json.
class OutputDir {
 public:
  explicit OutputDir(std::filesystem::path root);

  const std::filesystem::path& root() const { return root_; }
  std::filesystem::path write_text(const std::string& relative, const std::string& content);
  std::filesystem::path write_image(const std::string& relative, const Image& img);
  /// Registers a file written by other code (path relative to root).
  void record(const std::string& relative);
  /// Writes manifest.json: command, seed, flat config and the artifact list
  /// with byte sizes and FNV-1a 64 hashes. No timestamps.
  void write_manifest(const std::string& command, const RunConfig& config, const json& extra = json::object());

 private:
  std::filesystem::path root_;
  std::vector<std::string> files_;
};

std::string fnv1a64_hex(const std::string& bytes);

json to_json(const CameraTrajectory& camera);
CameraTrajectory camera_from_json(const json& j);
json to_json(const Metrics& m);
json to_json(const OcclusionSchedule& schedule);

struct Common {
  RunConfig config;
  std::filesystem::path out;
};

struct NormalizeArgs {
  std::filesystem::path input;
  std::vector<double> crop_min, crop_max, x_axis, z_axis;
  bool ascii = false;
};
struct SynthArgs {};
struct TrackArgs {
  std::filesystem::path log;
  std::filesystem::path truth;
};
struct OverlayArgs {
  std::filesystem::path scene;
  std::filesystem::path trajectories;
  std::filesystem::path camera;
  std::filesystem::path wind;
  std::filesystem::path background;
};
struct WindArgs {
  std::filesystem::path scene;
};

int cmd_normalize(const Common& c, const NormalizeArgs& a);
int cmd_synth(const Common& c, const SynthArgs& a);
int cmd_track(const Common& c, const TrackArgs& a);
int cmd_study(const Common& c);
int cmd_wind(const Common& c, const WindArgs& a);
int cmd_overlay(const Common& c, const OverlayArgs& a);
int cmd_repro_exp1(const Common& c);
int cmd_repro_exp2(const Common& c);
int cmd_serve(const Common& c);

/// Parses argv and dispatches. Returns the process exit code: 0 success,
/// 1 runtime failure (JSON error on stderr), 2 usage error.
int run(int argc, char** argv);

}  // namespace blockflow::cli
