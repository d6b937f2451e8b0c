#pragma once

#include <functional>

#include "sgnv/geometry/render.hpp"

namespace sgnv {

struct TrainLogEntry {
  int64_t step;
  double loss;
};

using TrainLogFn = std::function<void(const TrainLogEntry&)>;

struct GeometryTrainConfig {
  int steps = 2000;
  double lr = 1e-4;
  int rays_per_step = 512;
  int n_obs = 4;
  int cloud_stride = 1;
  int resample_interval = 500;  // re-draw the observed split this often
  uint64_t seed = 0;

  nlohmann::json to_json() const {
    return {{"steps", steps},         {"lr", lr},
            {"rays_per_step", rays_per_step}, {"n_obs", n_obs},
            {"cloud_stride", cloud_stride},
            {"resample_interval", resample_interval}};
  }
  static GeometryTrainConfig from_json(const nlohmann::json& j) {
    GeometryTrainConfig c;
    c.steps = j.value("steps", c.steps);
    c.lr = j.value("lr", c.lr);
    c.rays_per_step = j.value("rays_per_step", c.rays_per_step);
    c.n_obs = j.value("n_obs", c.n_obs);
    c.cloud_stride = j.value("cloud_stride", c.cloud_stride);
    c.resample_interval = j.value("resample_interval", c.resample_interval);
    return c;
  }
};

/// Adam on the masked regression loss over random ray batches; aborts with
/// the step number if the loss goes non-finite. Deterministic in cfg.seed.
std::vector<TrainLogEntry> train_geometry(
    GeometryModel& model, const std::vector<std::vector<View>>& scenes,
    const CameraIntrinsics& intr, const GeometryTrainConfig& cfg,
    const TrainLogFn& on_log = nullptr);

}  // namespace sgnv
