#include "sgnv/generator/preview.hpp"

namespace sgnv {

void Preview::validate() const {
  int64_t px = int64_t(width) * height;
  if (width <= 0 || height <= 0)
    throw Error("preview_invalid", "empty preview");
  if (observed_image &&
      (observed_image->width != width || observed_image->height != height))
    throw Error("preview_invalid", "observed image size mismatch");
  if (observed_image.has_value() != (category == PreviewCategory::kReference))
    throw Error("preview_invalid",
                "only reference previews carry an observed image");
  if (guidance.color.width != width || guidance.color.height != height ||
      int64_t(guidance.mask.size()) != px)
    throw Error("preview_invalid", "guidance size mismatch");
  if (ray_map.dim(0) != int(px) || ray_map.dim(1) != 6)
    throw Error("preview_invalid", "ray map size mismatch");
}

Tensor Preview::to_channels() const {
  validate();
  int64_t px = int64_t(width) * height;
  Tensor out({14, height, width});
  double avail = observed_image ? 1.0 : 0.0;
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      int64_t p = int64_t(y) * width + x;
      for (int c = 0; c < 3; ++c) {
        out[int64_t(c) * px + p] = observed_image ? observed_image->at(x, y, c) : 0.0;
        out[int64_t(3 + c) * px + p] = guidance.color.at(x, y, c);
      }
      out[6 * px + p] = double(guidance.mask[size_t(p)]);
      for (int c = 0; c < 6; ++c)
        out[int64_t(7 + c) * px + p] = ray_map[p * 6 + c];
      out[13 * px + p] = avail;
    }
  }
  return out;
}

namespace {

Preview make_preview(const std::optional<Image>& image,
                     const RenderedGuidance& guidance, const CameraPose& pose,
                     const CameraIntrinsics& intr, PreviewCategory cat) {
  Preview p;
  p.observed_image = image;
  p.guidance = guidance;
  p.ray_map = compute_ray_map(pose, intr);
  p.category = cat;
  p.width = intr.width;
  p.height = intr.height;
  return p;
}

/// Small seeded rotation about the world up axis plus a translation jitter;
/// used when only one observed pose exists and interpolation is impossible.
CameraPose perturb_pose(const CameraPose& pose, Rng& rng) {
  double angle = rng.uniform(-0.15, 0.15);
  Eigen::Matrix3d spin =
      Eigen::AngleAxisd(angle, Eigen::Vector3d::UnitY()).toRotationMatrix();
  CameraPose out;
  out.rotation = spin * pose.rotation;
  out.translation = pose.translation;
  for (int i = 0; i < 3; ++i) out.translation[i] += rng.uniform(-0.05, 0.05);
  return out;
}

}  // namespace

PreviewSet assemble_previews(const std::vector<View>& observed,
                             const NeuralPointCloud& cloud,
                             GeometryModel& geometry,
                             const CameraIntrinsics& intr, int n_probed,
                             const CameraPose& query_pose, uint64_t seed) {
  if (n_probed < 0)
    throw Error("preview_invalid", "n_probed must be non-negative");
  if (observed.empty())
    throw Error("preview_invalid", "at least one observed view required");

  PreviewSet out;
  for (const View& v : observed)
    out.context.push_back(make_preview(
        v.image, render_view(cloud, observed, v.pose, intr, geometry), v.pose,
        intr, PreviewCategory::kReference));

  std::vector<CameraPose> probed;
  if (observed.size() == 1) {
    Rng rng(seed ^ 0x70726f6265ULL);
    for (int i = 0; i < n_probed; ++i)
      probed.push_back(perturb_pose(observed[0].pose, rng));
  } else {
    // spread across consecutive pose pairs, earlier pairs take the remainder
    int pairs = int(observed.size()) - 1;
    int base = n_probed / pairs, extra = n_probed % pairs;
    for (int p = 0; p < pairs; ++p) {
      int count = base + (p < extra ? 1 : 0);
      if (count == 0) continue;
      for (const CameraPose& pose : interpolate_poses(
               observed[size_t(p)].pose, observed[size_t(p) + 1].pose, count))
        probed.push_back(pose);
    }
  }
  for (const CameraPose& pose : probed)
    out.context.push_back(make_preview(
        std::nullopt, render_view(cloud, observed, pose, intr, geometry),
        pose, intr, PreviewCategory::kProbed));

  out.query = make_preview(
      std::nullopt, render_view(cloud, observed, query_pose, intr, geometry),
      query_pose, intr, PreviewCategory::kQuery);
  return out;
}

}  // namespace sgnv
