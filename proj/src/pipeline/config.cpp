#include "sgnv/pipeline/config.hpp"

#include <cstdlib>
#include <fstream>

namespace sgnv {

nlohmann::json ScenesConfig::to_json() const {
  return {{"n_scenes", n_scenes}, {"n_frames", n_frames},
          {"width", width},       {"height", height},
          {"focal", focal},       {"trajectory", trajectory}};
}

ScenesConfig ScenesConfig::from_json(const nlohmann::json& j) {
  ScenesConfig c;
  c.n_scenes = j.value("n_scenes", c.n_scenes);
  c.n_frames = j.value("n_frames", c.n_frames);
  c.width = j.value("width", c.width);
  c.height = j.value("height", c.height);
  c.focal = j.value("focal", c.focal);
  c.trajectory = j.value("trajectory", c.trajectory);
  return c;
}

CameraIntrinsics ScenesConfig::intrinsics() const {
  CameraIntrinsics intr;
  intr.fx = intr.fy = focal;
  intr.cx = width / 2.0;
  intr.cy = height / 2.0;
  intr.width = width;
  intr.height = height;
  return intr;
}

Trajectory ScenesConfig::trajectory_enum() const {
  if (trajectory == "orbit") return Trajectory::kOrbit;
  if (trajectory == "line") return Trajectory::kLine;
  if (trajectory == "random_walk") return Trajectory::kRandomWalk;
  throw Error("config_invalid", "unknown trajectory '" + trajectory + "'");
}

nlohmann::json PipelineConfig::to_json() const {
  nlohmann::json geo = geometry.to_json();
  geo["train"] = geometry_train.to_json();
  nlohmann::json cod = codec.to_json();
  cod["train"] = codec_train.to_json();
  nlohmann::json gen = generator.to_json();
  gen["train"] = generator_train.to_json();
  return {{"scenes", scenes.to_json()},
          {"geometry", geo},
          {"codec", cod},
          {"generator", gen},
          {"seed", seed},
          {"out_dir", out_dir.string()},
          {"n_obs", n_obs},
          {"scene_index", scene_index},
          {"target_frame", target_frame},
          {"sample_mode", sample_mode}};
}

void PipelineConfig::apply_json(const nlohmann::json& j) {
  // the *_from_json helpers start from struct defaults, so feed them the
  // current values first to keep the layering additive
  nlohmann::json base = to_json();
  base.merge_patch(j);
  scenes = ScenesConfig::from_json(base.at("scenes"));
  geometry = GeometryConfig::from_json(base.at("geometry"));
  geometry_train = GeometryTrainConfig::from_json(base.at("geometry")["train"]);
  codec = CodecConfig::from_json(base.at("codec"));
  codec_train = CodecTrainConfig::from_json(base.at("codec")["train"]);
  generator = GeneratorConfig::from_json(base.at("generator"));
  generator_train =
      GeneratorTrainConfig::from_json(base.at("generator")["train"]);
  seed = base.value("seed", seed);
  out_dir = base.value("out_dir", out_dir.string());
  n_obs = base.value("n_obs", n_obs);
  scene_index = base.value("scene_index", scene_index);
  target_frame = base.value("target_frame", target_frame);
  sample_mode = base.value("sample_mode", sample_mode);
}

PipelineConfig PipelineConfig::load(const std::filesystem::path& config_file) {
  PipelineConfig cfg;
  if (!config_file.empty()) {
    std::ifstream in(config_file);
    if (!in)
      throw Error("config_missing",
                  "cannot open config file " + config_file.string());
    nlohmann::json j;
    try {
      in >> j;
    } catch (const std::exception& e) {
      throw Error("config_invalid", std::string("config parse: ") + e.what());
    }
    cfg.apply_json(j);
  }
  if (const char* root = std::getenv("SGNV_OUT_ROOT"))
    if (cfg.out_dir.is_relative()) cfg.out_dir = root / cfg.out_dir;
  return cfg;
}

void PipelineConfig::validate() const {
  scenes.intrinsics().validate();
  scenes.trajectory_enum();
  geometry.validate();
  codec.validate();
  generator.validate();
  if (n_obs < 1) throw Error("config_invalid", "n_obs must be >= 1");
  if (sample_mode != "greedy" && sample_mode != "multinomial")
    throw Error("config_invalid",
                "sample_mode must be 'greedy' or 'multinomial'");
  if (scenes.width % codec.downsample != 0 ||
      scenes.height % codec.downsample != 0)
    throw Error("config_invalid",
                "image dims must be divisible by codec.downsample");
  if (scenes.width % generator.patch_stride != 0 ||
      scenes.height % generator.patch_stride != 0)
    throw Error("config_invalid",
                "image dims must be divisible by generator.patch_stride");
  if (generator.codebook_size != codec.codebook_size)
    throw Error("config_invalid",
                "generator.codebook_size must match codec.codebook_size");
  int tokens = (scenes.width / codec.downsample) *
               (scenes.height / codec.downsample);
  if (tokens > generator.max_tokens)
    throw Error("config_invalid",
                "token grid larger than generator.max_tokens");
  int patches = (scenes.width / generator.patch_stride) *
                (scenes.height / generator.patch_stride);
  if (patches > generator.max_patches)
    throw Error("config_invalid",
                "patch grid larger than generator.max_patches");
}

}  // namespace sgnv
