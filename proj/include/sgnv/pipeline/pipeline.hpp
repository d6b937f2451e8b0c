#pragma once

#include "sgnv/metrics/metrics.hpp"
#include "sgnv/pipeline/config.hpp"

namespace sgnv {

// Output layout under cfg.out_dir:
//   scenes/scene_%03d/...          (make-scenes)
//   checkpoints/<stage>.ckpt       (train)
//   logs/<stage>_loss.txt          append-only "step N loss V" lines
//   generate/generated.png, guidance.png, mask.png, report.json, config.json
//   evaluate/view_%04d.png, report.json, config.json

/// Renders cfg.scenes.n_scenes synthetic scenes to disk. Rerunning with the
/// same config and seed produces byte-identical files.
void cmd_make_scenes(const PipelineConfig& cfg);

/// Trains one stage ("geometry", "codec" or "generator") on the scenes under
/// out_dir and writes its checkpoint and loss log. The generator stage
/// requires the geometry and codec checkpoints and leaves them untouched.
void cmd_train(const std::string& stage, const PipelineConfig& cfg);

struct GenerateResult {
  Image generated;
  RenderedGuidance guidance;
  TokenSequence tokens;
  bool has_ground_truth = false;
  double psnr_db = 0, ssim_value = 0;
};

/// Feed-forward inference: observed split -> point cloud -> previews ->
/// latent -> sampled tokens -> decoded image. Writes the image, the guidance
/// pair and (when ground truth exists) metrics.
GenerateResult cmd_generate(const PipelineConfig& cfg);

/// Generates every novel view of the sampled split and aggregates metrics.
MetricReport cmd_evaluate(const PipelineConfig& cfg);

}  // namespace sgnv
