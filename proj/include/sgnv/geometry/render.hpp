#pragma once

#include "sgnv/core/image.hpp"
#include "sgnv/geometry/model.hpp"

namespace sgnv {

/// Rendered guidance image F with validity mask M. Color is 0 wherever the
/// mask is 0.
struct RenderedGuidance {
  Image color;                 // W x H x 3
  std::vector<uint8_t> mask;   // W*H, row-major, {0,1}

  double mask_fraction() const {
    if (mask.empty()) return 0.0;
    int64_t n = 0;
    for (uint8_t m : mask) n += m;
    return double(n) / double(mask.size());
  }
};

/// Per-pixel (origin, unit direction) rows, [H*W, 6].
Tensor compute_ray_map(const CameraPose& pose, const CameraIntrinsics& intr);

/// Front-to-back compositing: out_r = sum_k T_k (1 - exp(-sigma_k delta))
/// rgb_k with T_k = exp(-delta * sum_{j<k} sigma_j). Samples are ray-major in
/// depth order; offsets has R+1 entries.
Var composite_rays(const Var& rgb, const Var& sigma, std::vector<int> offsets,
                   double delta);

struct RayBatchRender {
  Var color;                  // [R,3]
  std::vector<uint8_t> mask;  // R
};

/// Differentiable render of a set of rays (rows of ray_map selected by
/// pixel_ids). `features` is the [P,d] point-feature matrix. The mask
/// depends only on geometry (cloud, grid, config), never on weights.
RayBatchRender render_rays(const NeuralPointCloud& cloud, const Var& features,
                           const NeighborGrid& grid, GeometryModel& model,
                           const Tensor& ray_map,
                           const std::vector<int>& pixel_ids);

/// Full-image convenience wrapper; recomputes point features internally.
RenderedGuidance render_view(const NeuralPointCloud& cloud,
                             const std::vector<View>& observed,
                             const CameraPose& pose,
                             const CameraIntrinsics& intr,
                             GeometryModel& model);

/// sum(((F - I) .* M)^2) / max(1, sum(M)); target rows are pixel colors.
Var masked_mse_loss(const Var& color, const Tensor& target,
                    const std::vector<uint8_t>& mask);

/// PSNR restricted to mask=1 pixels; +inf when equal, 0 when mask empty.
double masked_psnr(const Image& a, const Image& b,
                   const std::vector<uint8_t>& mask);

}  // namespace sgnv
