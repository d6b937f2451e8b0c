#include "sgnv/pipeline/pipeline.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>

#include "sgnv/core/checkpoint.hpp"
#include "sgnv/scene/io.hpp"
#include "sgnv/scene/raycast.hpp"

namespace sgnv {

namespace fs = std::filesystem;

namespace {

fs::path scene_dir(const PipelineConfig& cfg, int index) {
  char name[32];
  std::snprintf(name, sizeof(name), "scene_%03d", index);
  return cfg.out_dir / "scenes" / name;
}

std::vector<fs::path> list_scene_dirs(const PipelineConfig& cfg) {
  fs::path root = cfg.out_dir / "scenes";
  std::vector<fs::path> dirs;
  if (fs::exists(root))
    for (const auto& e : fs::directory_iterator(root))
      if (e.is_directory()) dirs.push_back(e.path());
  std::sort(dirs.begin(), dirs.end());
  if (dirs.empty())
    throw Error("scene_missing", "no scenes under " + root.string() +
                                     "; run make-scenes first");
  return dirs;
}

void write_json(const fs::path& path, const nlohmann::json& j) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw Error("io_error", "cannot write " + path.string());
  out << j.dump(2) << "\n";
}

fs::path ckpt_path(const PipelineConfig& cfg, const std::string& stage) {
  return cfg.out_dir / "checkpoints" / (stage + ".ckpt");
}

void require_checkpoint(const PipelineConfig& cfg, const std::string& stage) {
  if (!fs::exists(ckpt_path(cfg, stage)))
    throw Error("missing_prerequisite",
                "missing " + stage + " checkpoint " +
                    ckpt_path(cfg, stage).string() + "; run `train " + stage +
                    "` first");
}

/// Appends "step N loss V" lines as training progresses.
TrainLogFn make_loss_logger(const fs::path& path,
                            std::shared_ptr<std::ofstream>& keeper) {
  fs::create_directories(path.parent_path());
  keeper = std::make_shared<std::ofstream>(path, std::ios::app);
  if (!*keeper) throw Error("io_error", "cannot write " + path.string());
  return [keeper](const TrainLogEntry& e) {
    (*keeper) << "step " << e.step << " loss " << e.loss << "\n";
    keeper->flush();
  };
}

GeometryModel load_geometry(const PipelineConfig& cfg) {
  require_checkpoint(cfg, "geometry");
  ParamStore probe;
  CheckpointMeta meta = load_checkpoint(ckpt_path(cfg, "geometry"), probe);
  GeometryModel model(GeometryConfig::from_json(meta.config), 0);
  load_checkpoint_into(ckpt_path(cfg, "geometry"), model.params());
  return model;
}

CodecModel load_codec(const PipelineConfig& cfg) {
  require_checkpoint(cfg, "codec");
  ParamStore probe;
  CheckpointMeta meta = load_checkpoint(ckpt_path(cfg, "codec"), probe);
  CodecModel model(CodecConfig::from_json(meta.config), 0);
  load_checkpoint_into(ckpt_path(cfg, "codec"), model.params());
  return model;
}

GeneratorModel load_generator(const PipelineConfig& cfg) {
  require_checkpoint(cfg, "generator");
  ParamStore probe;
  CheckpointMeta meta = load_checkpoint(ckpt_path(cfg, "generator"), probe);
  GeneratorModel model(GeneratorConfig::from_json(meta.config), 0);
  load_checkpoint_into(ckpt_path(cfg, "generator"), model.params());
  return model;
}

LoadedScene load_indexed_scene(const PipelineConfig& cfg) {
  fs::path dir = scene_dir(cfg, cfg.scene_index);
  if (!fs::exists(dir))
    throw Error("scene_missing", "scene directory " + dir.string() +
                                     " does not exist; run make-scenes first");
  return load_scene(dir);
}

struct InferenceContext {
  GeometryModel geometry;
  CodecModel codec;
  GeneratorModel generator;
  LoadedScene scene;
  std::vector<View> observed;
  std::vector<int> novel_indices;
  NeuralPointCloud cloud;
};

InferenceContext make_inference_context(const PipelineConfig& cfg) {
  InferenceContext ctx{load_geometry(cfg), load_codec(cfg),
                       load_generator(cfg), load_indexed_scene(cfg),
                       {},                  {},
                       {}};
  ViewSet vs =
      sample_view_set(ctx.scene.views, cfg.n_obs, cfg.seed);
  for (int i : vs.observed_indices)
    ctx.observed.push_back(ctx.scene.views[size_t(i)]);
  ctx.novel_indices = vs.novel_indices;
  ctx.cloud = build_point_cloud(ctx.observed, ctx.scene.intrinsics, 1);
  return ctx;
}

GenerateResult generate_one(InferenceContext& ctx, const PipelineConfig& cfg,
                            const CameraPose& target_pose,
                            const Image* ground_truth, uint64_t sample_seed) {
  const CameraIntrinsics& intr = ctx.scene.intrinsics;
  PreviewSet previews = assemble_previews(
      ctx.observed, ctx.cloud, ctx.geometry, intr,
      ctx.generator.cfg().n_probed, target_pose, cfg.seed);
  if (previews.query.guidance.mask_fraction() == 0.0)
    std::cerr << "warning: target pose has an empty guidance mask\n";

  Var h = ctx.generator.encode_context(previews);
  int f = ctx.codec.cfg().downsample;
  SampleMode mode = cfg.sample_mode == "greedy" ? SampleMode::kGreedy
                                                : SampleMode::kMultinomial;
  GenerateResult res;
  res.tokens = ctx.generator.sample_tokens(
      h, intr.height / f, intr.width / f, mode,
      ctx.generator.cfg().temperature, sample_seed);
  res.generated = ctx.codec.decode_tokens(res.tokens);
  res.guidance = previews.query.guidance;
  if (ground_truth) {
    res.has_ground_truth = true;
    res.psnr_db = psnr(res.generated, *ground_truth);
    res.ssim_value = ssim(res.generated, *ground_truth);
  }
  return res;
}

Image mask_to_image(const RenderedGuidance& g) {
  Image im(g.color.width, g.color.height, 3);
  for (int y = 0; y < im.height; ++y)
    for (int x = 0; x < im.width; ++x)
      for (int c = 0; c < 3; ++c)
        im.at(x, y, c) = double(g.mask[size_t(y) * im.width + x]);
  return im;
}

}  // namespace

void cmd_make_scenes(const PipelineConfig& cfg) {
  cfg.validate();
  CameraIntrinsics intr = cfg.scenes.intrinsics();
  for (int s = 0; s < cfg.scenes.n_scenes; ++s) {
    SceneSpec spec = make_default_scene_spec(cfg.seed + uint64_t(s));
    std::vector<View> views = generate_synthetic_scene(
        spec, intr, cfg.scenes.n_frames, cfg.scenes.trajectory_enum());
    save_scene(views, intr, scene_dir(cfg, s));
  }
  write_json(cfg.out_dir / "scenes" / "config.json", cfg.to_json());
}

void cmd_train(const std::string& stage, const PipelineConfig& cfg) {
  cfg.validate();
  if (stage != "geometry" && stage != "codec" && stage != "generator")
    throw Error("config_invalid", "unknown train stage '" + stage +
                                      "'; expected geometry, codec or "
                                      "generator");
  std::vector<fs::path> dirs = list_scene_dirs(cfg);
  std::vector<LoadedScene> scenes;
  for (const fs::path& d : dirs) scenes.push_back(load_scene(d));
  const CameraIntrinsics& intr = scenes[0].intrinsics;
  std::vector<std::vector<View>> per_scene;
  for (const LoadedScene& s : scenes) per_scene.push_back(s.views);

  std::shared_ptr<std::ofstream> log_keeper;
  TrainLogFn log_fn =
      make_loss_logger(cfg.out_dir / "logs" / (stage + "_loss.txt"),
                       log_keeper);
  fs::create_directories(cfg.out_dir / "checkpoints");

  if (stage == "geometry") {
    GeometryModel model(cfg.geometry, cfg.seed);
    GeometryTrainConfig tc = cfg.geometry_train;
    tc.seed = cfg.seed;
    train_geometry(model, per_scene, intr, tc, log_fn);
    save_checkpoint(ckpt_path(cfg, stage),
                    {"geometry", tc.steps, cfg.geometry.to_json()},
                    model.params());
  } else if (stage == "codec") {
    std::vector<Image> images;
    for (const auto& views : per_scene)
      for (const View& v : views) images.push_back(v.image);
    CodecModel model(cfg.codec, cfg.seed);
    CodecTrainConfig tc = cfg.codec_train;
    tc.seed = cfg.seed;
    train_codec(model, images, tc, log_fn);
    save_checkpoint(ckpt_path(cfg, stage),
                    {"codec", tc.steps, cfg.codec.to_json()}, model.params());
  } else if (stage == "generator") {
    GeometryModel geometry = load_geometry(cfg);
    CodecModel codec = load_codec(cfg);
    GeneratorConfig gc = cfg.generator;
    gc.codebook_size = codec.cfg().codebook_size;
    GeneratorModel model(gc, cfg.seed);
    GeneratorTrainConfig tc = cfg.generator_train;
    tc.seed = cfg.seed;
    tc.n_obs = cfg.n_obs;
    train_generator(model, per_scene, geometry, codec, intr, tc, log_fn);
    save_checkpoint(ckpt_path(cfg, stage),
                    {"generator", tc.steps, gc.to_json()}, model.params());
  }
  write_json(cfg.out_dir / "checkpoints" / (stage + ".config.json"),
             cfg.to_json());
}

GenerateResult cmd_generate(const PipelineConfig& cfg) {
  cfg.validate();
  InferenceContext ctx = make_inference_context(cfg);

  int target;
  if (cfg.target_frame >= 0) {
    if (cfg.target_frame >= int(ctx.scene.views.size()))
      throw Error("config_invalid", "target_frame out of range");
    target = cfg.target_frame;
  } else {
    target = ctx.novel_indices.at(0);
  }
  const View& gt = ctx.scene.views[size_t(target)];
  GenerateResult res = generate_one(ctx, cfg, gt.pose, &gt.image, cfg.seed);

  fs::path out = cfg.out_dir / "generate";
  fs::create_directories(out);
  write_png_rgb8(out / "generated.png", res.generated);
  write_png_rgb8(out / "guidance.png", res.guidance.color);
  write_png_rgb8(out / "mask.png", mask_to_image(res.guidance));
  nlohmann::json report = {{"target_frame", target},
                           {"n_obs", cfg.n_obs},
                           {"mask_fraction", res.guidance.mask_fraction()},
                           {"psnr", res.psnr_db},
                           {"ssim", res.ssim_value}};
  write_json(out / "report.json", report);
  write_json(out / "config.json", cfg.to_json());
  return res;
}

MetricReport cmd_evaluate(const PipelineConfig& cfg) {
  cfg.validate();
  InferenceContext ctx = make_inference_context(cfg);
  fs::path out = cfg.out_dir / "evaluate";
  fs::create_directories(out);

  std::vector<Image> predictions, truths;
  for (size_t i = 0; i < ctx.novel_indices.size(); ++i) {
    const View& gt = ctx.scene.views[size_t(ctx.novel_indices[i])];
    GenerateResult res = generate_one(ctx, cfg, gt.pose, &gt.image,
                                      cfg.seed + 1000003ULL * (i + 1));
    char name[32];
    std::snprintf(name, sizeof(name), "view_%04d.png",
                  ctx.novel_indices[i]);
    write_png_rgb8(out / name, res.generated);
    predictions.push_back(res.generated);
    truths.push_back(gt.image);
  }
  MetricReport report = evaluate(predictions, truths);
  write_report(report, cfg.to_json(), out / "report.json");
  write_json(out / "config.json", cfg.to_json());
  return report;
}

}  // namespace sgnv
