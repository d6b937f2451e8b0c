#pragma once

#include <filesystem>

#include "sgnv/codec/train.hpp"
#include "sgnv/generator/train.hpp"
#include "sgnv/geometry/train.hpp"

namespace sgnv {

struct ScenesConfig {
  int n_scenes = 1;
  int n_frames = 32;
  int width = 64, height = 64;
  double focal = 64.0;  // pixels; fx = fy
  std::string trajectory = "orbit";

  nlohmann::json to_json() const;
  static ScenesConfig from_json(const nlohmann::json& j);
  CameraIntrinsics intrinsics() const;
  Trajectory trajectory_enum() const;
};

/// Layered run configuration: built-in defaults, overridden by the JSON
/// config file, overridden by CLI flags. The resolved config is written next
/// to every command's outputs.
struct PipelineConfig {
  ScenesConfig scenes;
  GeometryConfig geometry;
  GeometryTrainConfig geometry_train;
  CodecConfig codec;
  CodecTrainConfig codec_train;
  GeneratorConfig generator;
  GeneratorTrainConfig generator_train;

  uint64_t seed = 0;
  std::filesystem::path out_dir = "out";
  int n_obs = 4;
  int scene_index = 0;
  int target_frame = -1;  // -1: first novel view of the sampled split
  std::string sample_mode = "multinomial";

  nlohmann::json to_json() const;
  void apply_json(const nlohmann::json& j);

  /// Defaults, then the JSON file (when non-empty). The SGNV_OUT_ROOT
  /// environment variable, when set, prefixes relative output directories.
  static PipelineConfig load(const std::filesystem::path& config_file);

  void validate() const;
};

}  // namespace sgnv
