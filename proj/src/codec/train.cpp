#include "sgnv/codec/train.hpp"

namespace sgnv {

std::vector<TrainLogEntry> train_codec(CodecModel& model,
                                       const std::vector<Image>& images,
                                       const CodecTrainConfig& cfg,
                                       const TrainLogFn& on_log) {
  if (images.empty())
    throw Error("train_invalid", "at least one training image required");
  Rng rng(cfg.seed);
  Adam opt(model.params(), cfg.lr);

  int K = model.cfg().codebook_size;
  std::vector<int64_t> usage(size_t(K), 0);
  int epoch_steps =
      std::max(1, int((images.size() + size_t(cfg.batch) - 1) / size_t(cfg.batch)));
  Tensor last_latents;

  std::vector<TrainLogEntry> log;
  for (int step = 0; step < cfg.steps; ++step) {
    std::vector<Image> batch;
    for (int b = 0; b < cfg.batch; ++b)
      batch.push_back(images[size_t(rng.uniform_int(int(images.size())))]);

    model.params().zero_grads();
    CodecLoss loss = model.loss(batch);
    double loss_val = loss.total->val[0];
    if (!std::isfinite(loss_val))
      throw Error("train_nan",
                  "non-finite loss at step " + std::to_string(step));
    backward(loss.total);
    opt.step();

    // track codebook usage on the first batch item for the reinit rule
    {
      Var x = reshape(constant(batch[0].to_chw()),
                      {1, 3, batch[0].height, batch[0].width});
      Var z = model.encode_latents(x);
      last_latents = z->val;
      for (int t : nearest_codes(z->val, model.codebook()->val))
        ++usage[size_t(t)];
    }
    if ((step + 1) % epoch_steps == 0) {
      // dead-entry reinit: unused codes jump to random recent latents
      Var cb = model.codebook();
      int d = model.cfg().code_dim;
      int T = last_latents.dim(0);
      for (int k = 0; k < K; ++k) {
        if (usage[size_t(k)] > 0) continue;
        int src = rng.uniform_int(T);
        for (int c = 0; c < d; ++c)
          cb->val[int64_t(k) * d + c] =
              last_latents[int64_t(src) * d + c] + 0.01 * rng.normal();
      }
      std::fill(usage.begin(), usage.end(), 0);
    }

    TrainLogEntry entry{step, loss_val};
    log.push_back(entry);
    if (on_log) on_log(entry);
  }
  return log;
}

}  // namespace sgnv
