#include "sgnv/geometry/train.hpp"

#include "sgnv/core/rng.hpp"

namespace sgnv {

namespace {

struct SceneState {
  std::vector<View> observed;
  NeuralPointCloud cloud;
  NeighborGrid grid;
  std::vector<Tensor> ray_maps;  // per view
};

}  // namespace

std::vector<TrainLogEntry> train_geometry(
    GeometryModel& model, const std::vector<std::vector<View>>& scenes,
    const CameraIntrinsics& intr, const GeometryTrainConfig& cfg,
    const TrainLogFn& on_log) {
  if (scenes.empty())
    throw Error("train_invalid", "at least one scene required");
  for (const auto& s : scenes) {
    if (int(s.size()) <= cfg.n_obs)
      throw Error("train_invalid", "scene smaller than n_obs");
    for (const auto& v : s)
      if (!v.has_depth())
        throw Error("train_invalid", "geometry training requires depth");
  }

  Rng rng(cfg.seed);
  std::vector<SceneState> states(scenes.size());
  for (size_t si = 0; si < scenes.size(); ++si) {
    states[si].ray_maps.reserve(scenes[si].size());
    for (const auto& v : scenes[si])
      states[si].ray_maps.push_back(compute_ray_map(v.pose, intr));
  }

  auto resample = [&]() {
    for (size_t si = 0; si < scenes.size(); ++si) {
      auto idx = rng.sample_without_replacement(int(scenes[si].size()),
                                                cfg.n_obs);
      states[si].observed.clear();
      for (int i : idx) states[si].observed.push_back(scenes[si][size_t(i)]);
      states[si].cloud =
          build_point_cloud(states[si].observed, intr, cfg.cloud_stride);
      states[si].grid =
          NeighborGrid(states[si].cloud.positions, model.cfg().radius);
    }
  };

  Adam opt(model.params(), cfg.lr);
  std::vector<TrainLogEntry> log;
  int hw = intr.width * intr.height;

  for (int step = 0; step < cfg.steps; ++step) {
    if (step % cfg.resample_interval == 0) resample();
    int scene_idx = rng.uniform_int(int(scenes.size()));
    SceneState& st = states[size_t(scene_idx)];
    const auto& scene = scenes[size_t(scene_idx)];
    int target_idx = rng.uniform_int(int(scene.size()));
    const View& target = scene[size_t(target_idx)];

    std::vector<int> pixels(size_t(cfg.rays_per_step));
    for (auto& p : pixels) p = rng.uniform_int(hw);

    model.params().zero_grads();
    Var features = model.point_features(st.cloud, st.observed);
    RayBatchRender batch =
        render_rays(st.cloud, features, st.grid, model,
                    st.ray_maps[size_t(target_idx)], pixels);
    Tensor target_colors({int(pixels.size()), 3});
    for (size_t r = 0; r < pixels.size(); ++r) {
      int x = pixels[r] % intr.width, y = pixels[r] / intr.width;
      for (int c = 0; c < 3; ++c)
        target_colors[int64_t(r) * 3 + c] = target.image.at(x, y, c);
    }
    Var loss = masked_mse_loss(batch.color, target_colors, batch.mask);
    double loss_val = loss->val[0];
    if (!std::isfinite(loss_val))
      throw Error("train_nan",
                  "non-finite loss at step " + std::to_string(step));
    backward(loss);
    opt.step();

    TrainLogEntry entry{step, loss_val};
    log.push_back(entry);
    if (on_log) on_log(entry);
  }
  return log;
}

}  // namespace sgnv
