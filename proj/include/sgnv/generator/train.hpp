#pragma once

#include "sgnv/generator/model.hpp"
#include "sgnv/geometry/train.hpp"  // TrainLogEntry / TrainLogFn

namespace sgnv {

/// One teacher-forcing triple: previews for the context and query, plus the
/// target token sequence for the query view.
struct GeneratorExample {
  PreviewSet previews;
  std::vector<int> target;
  int h_tok = 0, w_tok = 0;
};

struct GeneratorTrainConfig {
  int steps = 3000;
  double lr = 1e-4;
  int batch = 16;
  int n_obs = 4;
  int examples_per_scene = 4;  // precomputed (split, query) pairs per scene
  uint64_t seed = 0;

  nlohmann::json to_json() const {
    return {{"steps", steps},
            {"lr", lr},
            {"batch", batch},
            {"n_obs", n_obs},
            {"examples_per_scene", examples_per_scene}};
  }
  static GeneratorTrainConfig from_json(const nlohmann::json& j) {
    GeneratorTrainConfig c;
    c.steps = j.value("steps", c.steps);
    c.lr = j.value("lr", c.lr);
    c.batch = j.value("batch", c.batch);
    c.n_obs = j.value("n_obs", c.n_obs);
    c.examples_per_scene = j.value("examples_per_scene", c.examples_per_scene);
    return c;
  }
};

/// Builds one training example from a scene: observed/novel split with
/// cfg.n_obs observed views, geometry guidance for all previews, and target
/// tokens from the frozen codec.
GeneratorExample make_generator_example(const std::vector<View>& views,
                                        GeometryModel& geometry,
                                        CodecModel& codec,
                                        const CameraIntrinsics& intr,
                                        int n_obs, int n_probed,
                                        uint64_t seed);

/// Adam on the per-token NLL over random batches of precomputed examples.
/// Logged loss is the batch-mean per-token NLL. Aborts with the step number
/// on non-finite loss.
std::vector<TrainLogEntry> train_generator_on_examples(
    GeneratorModel& model, const std::vector<GeneratorExample>& examples,
    const GeneratorTrainConfig& cfg, const TrainLogFn& on_log = nullptr);

/// Full pipeline trainer: precomputes cfg.examples_per_scene examples per
/// scene with the frozen geometry and codec models, then trains on them.
std::vector<TrainLogEntry> train_generator(
    GeneratorModel& model, const std::vector<std::vector<View>>& scenes,
    GeometryModel& geometry, CodecModel& codec, const CameraIntrinsics& intr,
    const GeneratorTrainConfig& cfg, const TrainLogFn& on_log = nullptr);

}  // namespace sgnv
