#include "sgnv/generator/train.hpp"

namespace sgnv {

GeneratorExample make_generator_example(const std::vector<View>& views,
                                        GeometryModel& geometry,
                                        CodecModel& codec,
                                        const CameraIntrinsics& intr,
                                        int n_obs, int n_probed,
                                        uint64_t seed) {
  ViewSet vs = sample_view_set(views, n_obs, seed);
  std::vector<View> observed;
  for (int i : vs.observed_indices) observed.push_back(views[size_t(i)]);
  if (vs.novel_indices.empty())
    throw Error("train_invalid", "no novel views left for the query");
  Rng rng(seed ^ 0x717565727951ULL);
  const View& query =
      views[size_t(vs.novel_indices[size_t(rng.uniform_int(
          int(vs.novel_indices.size())))])];

  NeuralPointCloud cloud = build_point_cloud(observed, intr, 1);
  GeneratorExample ex;
  ex.previews = assemble_previews(observed, cloud, geometry, intr, n_probed,
                                  query.pose, seed);
  TokenSequence ts = codec.encode_image(query.image);
  ex.target = ts.tokens;
  ex.h_tok = ts.h_tok;
  ex.w_tok = ts.w_tok;
  return ex;
}

std::vector<TrainLogEntry> train_generator_on_examples(
    GeneratorModel& model, const std::vector<GeneratorExample>& examples,
    const GeneratorTrainConfig& cfg, const TrainLogFn& on_log) {
  if (examples.empty())
    throw Error("train_invalid", "at least one training example required");
  Rng rng(cfg.seed);
  Adam opt(model.params(), cfg.lr);

  std::vector<TrainLogEntry> log;
  for (int step = 0; step < cfg.steps; ++step) {
    model.params().zero_grads();
    std::vector<Var> losses;
    for (int b = 0; b < cfg.batch; ++b) {
      const GeneratorExample& ex =
          examples[size_t(rng.uniform_int(int(examples.size())))];
      Var h = model.encode_context(ex.previews);
      losses.push_back(model.sequence_nll(ex.target, h).per_token);
    }
    Var loss = losses[0];
    for (size_t i = 1; i < losses.size(); ++i) loss = add(loss, losses[i]);
    loss = scale(loss, 1.0 / double(cfg.batch));
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

std::vector<TrainLogEntry> train_generator(
    GeneratorModel& model, const std::vector<std::vector<View>>& scenes,
    GeometryModel& geometry, CodecModel& codec, const CameraIntrinsics& intr,
    const GeneratorTrainConfig& cfg, const TrainLogFn& on_log) {
  if (scenes.empty())
    throw Error("train_invalid", "at least one scene required");
  std::vector<GeneratorExample> examples;
  for (size_t s = 0; s < scenes.size(); ++s)
    for (int e = 0; e < cfg.examples_per_scene; ++e)
      examples.push_back(make_generator_example(
          scenes[s], geometry, codec, intr, cfg.n_obs,
          model.cfg().n_probed, cfg.seed + s * 1000003ULL + uint64_t(e)));
  return train_generator_on_examples(model, examples, cfg, on_log);
}

}  // namespace sgnv
