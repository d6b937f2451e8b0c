#include "sgnv/geometry/render.hpp"

#include <cmath>

namespace sgnv {

Tensor compute_ray_map(const CameraPose& pose, const CameraIntrinsics& intr) {
  pose.validate();
  intr.validate();
  Tensor rm({intr.width * intr.height, 6});
  for (int y = 0; y < intr.height; ++y)
    for (int x = 0; x < intr.width; ++x) {
      Eigen::Vector3d dir_cam((x + 0.5 - intr.cx) / intr.fx,
                              (y + 0.5 - intr.cy) / intr.fy, 1.0);
      Eigen::Vector3d dir = (pose.rotation * dir_cam).normalized();
      int64_t row = int64_t(y) * intr.width + x;
      for (int a = 0; a < 3; ++a) {
        rm[row * 6 + a] = pose.translation[a];
        rm[row * 6 + 3 + a] = dir[a];
      }
    }
  return rm;
}

Var composite_rays(const Var& rgb, const Var& sigma, std::vector<int> offsets,
                   double delta) {
  if (rgb->val.rank() != 2 || rgb->val.dim(1) != 3)
    throw std::invalid_argument("composite_rays: rgb must be [S,3]");
  if (sigma->val.size() != rgb->val.dim(0))
    throw std::invalid_argument("composite_rays: sigma size mismatch");
  if (offsets.empty() || offsets.back() != rgb->val.dim(0))
    throw std::invalid_argument("composite_rays: bad offsets");
  int R = int(offsets.size()) - 1;
  Tensor out({R, 3});
  for (int r = 0; r < R; ++r) {
    double T = 1.0;
    for (int k = offsets[r]; k < offsets[r + 1]; ++k) {
      double att = std::exp(-sigma->val[k] * delta);
      double w = T * (1.0 - att);
      for (int c = 0; c < 3; ++c)
        out[int64_t(r) * 3 + c] += w * rgb->val[int64_t(k) * 3 + c];
      T *= att;
    }
  }
  return make_op(std::move(out), {rgb, sigma},
                 [offsets = std::move(offsets), delta](Node& n) {
    Var& rgb = n.parents[0];
    Var& sigma = n.parents[1];
    if (rgb->requires_grad) rgb->ensure_grad();
    if (sigma->requires_grad) sigma->ensure_grad();
    int R = int(offsets.size()) - 1;
    for (int r = 0; r < R; ++r) {
      const double* g = n.grad.data() + int64_t(r) * 3;
      // forward sweep for the transmittances, then a suffix sweep for
      // d/d sigma_k of the downstream contributions
      int lo = offsets[r], hi = offsets[r + 1];
      std::vector<double> T(size_t(hi - lo) + 1);
      T[0] = 1.0;
      for (int k = lo; k < hi; ++k)
        T[size_t(k - lo + 1)] =
            T[size_t(k - lo)] * std::exp(-sigma->val[k] * delta);
      // suffix[k] = sum_{m>=k} T_m (1-att_m) (rgb_m . g)
      double suffix = 0.0;
      for (int k = hi - 1; k >= lo; --k) {
        double att = std::exp(-sigma->val[k] * delta);
        double w = T[size_t(k - lo)] * (1.0 - att);
        double dot = 0.0;
        for (int c = 0; c < 3; ++c) dot += rgb->val[int64_t(k) * 3 + c] * g[c];
        if (rgb->requires_grad)
          for (int c = 0; c < 3; ++c) rgb->grad[int64_t(k) * 3 + c] += w * g[c];
        if (sigma->requires_grad)
          sigma->grad[k] +=
              delta * (T[size_t(k - lo + 1)] * dot - suffix);
        suffix += w * dot;
      }
    }
  });
}

RayBatchRender render_rays(const NeuralPointCloud& cloud, const Var& features,
                           const NeighborGrid& grid, GeometryModel& model,
                           const Tensor& ray_map,
                           const std::vector<int>& pixel_ids) {
  const GeometryConfig& cfg = model.cfg();
  int R = int(pixel_ids.size());
  double delta = (cfg.far - cfg.near) / cfg.steps;

  RayBatchRender out;
  out.mask.assign(size_t(R), 0);

  // neighbor aggregation for every contributing sample across the batch
  std::vector<int> nbr_idx;
  std::vector<double> nbr_w;
  std::vector<int> sample_offsets{0};  // per contributing sample
  std::vector<int> ray_offsets(size_t(R) + 1, 0);  // samples per ray
  constexpr double kDistEps = 1e-6;

  for (int r = 0; r < R; ++r) {
    int64_t row = int64_t(pixel_ids[size_t(r)]) * 6;
    Eigen::Vector3d o(ray_map[row], ray_map[row + 1], ray_map[row + 2]);
    Eigen::Vector3d d(ray_map[row + 3], ray_map[row + 4], ray_map[row + 5]);
    for (int k = 0; k < cfg.steps; ++k) {
      double t = cfg.near + (k + 0.5) * delta;
      auto nbrs = grid.query(o + t * d, cfg.radius, cfg.max_neighbors);
      if (nbrs.empty()) continue;
      if (int(nbrs.size()) >= cfg.mask_threshold) out.mask[size_t(r)] = 1;
      double wsum = 0.0;
      for (auto& [dist, idx] : nbrs) wsum += 1.0 / (dist + kDistEps);
      for (auto& [dist, idx] : nbrs) {
        nbr_idx.push_back(idx);
        nbr_w.push_back((1.0 / (dist + kDistEps)) / wsum);
      }
      sample_offsets.push_back(int(nbr_idx.size()));
    }
    ray_offsets[size_t(r) + 1] = int(sample_offsets.size()) - 1;
  }

  int S = int(sample_offsets.size()) - 1;
  if (S == 0) {
    out.color = constant(Tensor({R, 3}));
    return out;
  }

  Var agg = weighted_gather_rows(features, nbr_idx, nbr_w, sample_offsets);
  auto [rgb, sigma] = model.radiance(agg);
  Var composed = composite_rays(rgb, sigma, ray_offsets, delta);

  // invalid rays render as 0 regardless of what compositing produced
  Tensor mask3({R, 3});
  for (int r = 0; r < R; ++r)
    for (int c = 0; c < 3; ++c)
      mask3[int64_t(r) * 3 + c] = out.mask[size_t(r)] ? 1.0 : 0.0;
  out.color = mul(composed, constant(std::move(mask3)));
  return out;
}

RenderedGuidance render_view(const NeuralPointCloud& cloud,
                             const std::vector<View>& observed,
                             const CameraPose& pose,
                             const CameraIntrinsics& intr,
                             GeometryModel& model) {
  Tensor ray_map = compute_ray_map(pose, intr);
  NeighborGrid grid(cloud.positions, model.cfg().radius);
  std::vector<int> pixels(size_t(intr.width) * size_t(intr.height));
  for (size_t i = 0; i < pixels.size(); ++i) pixels[i] = int(i);

  RenderedGuidance rg;
  rg.color = Image(intr.width, intr.height, 3);
  rg.mask.assign(pixels.size(), 0);
  if (cloud.point_count() == 0) return rg;

  Var features = model.point_features(cloud, observed);
  RayBatchRender batch = render_rays(cloud, features, grid, model, ray_map,
                                     pixels);
  rg.mask = batch.mask;
  for (int y = 0; y < intr.height; ++y)
    for (int x = 0; x < intr.width; ++x) {
      int64_t row = int64_t(y) * intr.width + x;
      for (int c = 0; c < 3; ++c)
        rg.color.at(x, y, c) = batch.color->val[row * 3 + c];
    }
  return rg;
}

Var masked_mse_loss(const Var& color, const Tensor& target,
                    const std::vector<uint8_t>& mask) {
  if (!color->val.same_shape(target))
    throw Error("loss_shape_mismatch", "rendered/target shapes differ");
  if (int(mask.size()) != color->val.dim(0))
    throw Error("loss_shape_mismatch", "mask length differs from ray count");
  int R = color->val.dim(0);
  Tensor m3({R, 3});
  int64_t valid = 0;
  for (int r = 0; r < R; ++r) {
    valid += mask[size_t(r)];
    for (int c = 0; c < 3; ++c)
      m3[int64_t(r) * 3 + c] = mask[size_t(r)] ? 1.0 : 0.0;
  }
  Var diff = mul(sub(color, constant(target)), constant(std::move(m3)));
  return scale(sum(mul(diff, diff)), 1.0 / double(std::max<int64_t>(1, valid)));
}

double masked_psnr(const Image& a, const Image& b,
                   const std::vector<uint8_t>& mask) {
  if (a.width != b.width || a.height != b.height)
    throw Error("metric_shape_mismatch", "masked_psnr: shapes differ");
  double se = 0.0;
  int64_t n = 0;
  for (int y = 0; y < a.height; ++y)
    for (int x = 0; x < a.width; ++x) {
      if (!mask[size_t(y) * size_t(a.width) + size_t(x)]) continue;
      for (int c = 0; c < 3; ++c) {
        double d = a.at(x, y, c) - b.at(x, y, c);
        se += d * d;
        ++n;
      }
    }
  if (n == 0) return 0.0;
  double mse = se / double(n);
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(1.0 / mse);
}

}  // namespace sgnv
