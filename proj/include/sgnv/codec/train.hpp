#pragma once

#include "sgnv/codec/model.hpp"
#include "sgnv/geometry/train.hpp"  // TrainLogEntry / TrainLogFn

namespace sgnv {

struct CodecTrainConfig {
  int steps = 5000;
  double lr = 1e-4;
  int batch = 16;
  uint64_t seed = 0;

  nlohmann::json to_json() const {
    return {{"steps", steps}, {"lr", lr}, {"batch", batch}};
  }
  static CodecTrainConfig from_json(const nlohmann::json& j) {
    CodecTrainConfig c;
    c.steps = j.value("steps", c.steps);
    c.lr = j.value("lr", c.lr);
    c.batch = j.value("batch", c.batch);
    return c;
  }
};

/// Adam on the codec loss. Codebook entries unused for a full epoch (one
/// pass worth of steps over the dataset) are reinitialized to recent encoder
/// outputs. Aborts with the step number on non-finite loss.
std::vector<TrainLogEntry> train_codec(CodecModel& model,
                                       const std::vector<Image>& images,
                                       const CodecTrainConfig& cfg,
                                       const TrainLogFn& on_log = nullptr);

}  // namespace sgnv
