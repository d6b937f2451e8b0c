#pragma once

#include <optional>

#include "sgnv/geometry/render.hpp"
#include "sgnv/scene/sampling.hpp"

namespace sgnv {

enum class PreviewCategory { kReference = 0, kProbed = 1, kQuery = 2 };

/// One preview of the scene from a camera pose: the observed image when the
/// pose was actually captured (reference previews), plus the geometry
/// module's rendered guidance and the per-pixel ray map. All channels are
/// spatially aligned.
struct Preview {
  std::optional<Image> observed_image;  // present only for references
  RenderedGuidance guidance;            // F and M
  Tensor ray_map;                       // [H*W, 6] origins + directions
  PreviewCategory category = PreviewCategory::kReference;
  int width = 0, height = 0;

  /// Planar channel stack [14, H, W]:
  /// image(3) + guidance(3) + mask(1) + rays(6) + availability(1).
  /// Unobserved previews get zero image planes and availability 0.
  Tensor to_channels() const;

  void validate() const;
};

struct PreviewSet {
  std::vector<Preview> context;
  Preview query;
};

/// Builds the scene context: one reference preview per observed view,
/// n_probed previews at poses interpolated between consecutive observed
/// poses (spread as evenly as possible across the pose pairs), and the query
/// preview. With a single observed view the probed poses are small seeded
/// perturbations of it instead.
PreviewSet assemble_previews(const std::vector<View>& observed,
                             const NeuralPointCloud& cloud,
                             GeometryModel& geometry,
                             const CameraIntrinsics& intr, int n_probed,
                             const CameraPose& query_pose, uint64_t seed = 0);

}  // namespace sgnv
