#include "sgnv/geometry/point_cloud.hpp"

#include <cmath>
#include <unordered_map>

namespace sgnv {

NeuralPointCloud build_point_cloud(const std::vector<View>& observed,
                                   const CameraIntrinsics& intr, int stride) {
  if (stride < 1) throw Error("cloud_invalid", "stride must be >= 1");
  NeuralPointCloud cloud;
  for (size_t vi = 0; vi < observed.size(); ++vi) {
    const View& v = observed[vi];
    if (!v.has_depth())
      throw Error("cloud_invalid",
                  "observed view " + std::to_string(vi) + " has no depth");
    for (int y = 0; y < intr.height; y += stride)
      for (int x = 0; x < intr.width; x += stride) {
        double z = v.depth_at(x, y);
        if (z <= 0.0) continue;
        Eigen::Vector3d p_cam(z * (x + 0.5 - intr.cx) / intr.fx,
                              z * (y + 0.5 - intr.cy) / intr.fy, z);
        cloud.positions.push_back(v.pose.to_world(p_cam));
        cloud.source.emplace_back(int(vi), y * intr.width + x);
      }
  }
  return cloud;
}

NeighborGrid::NeighborGrid(const std::vector<Eigen::Vector3d>& points,
                           double cell_size)
    : points_(&points), cell_(cell_size) {
  for (size_t i = 0; i < points.size(); ++i) {
    const auto& p = points[i];
    cells_[cell_key(int(std::floor(p.x() / cell_)),
                    int(std::floor(p.y() / cell_)),
                    int(std::floor(p.z() / cell_)))]
        .push_back(int(i));
  }
}

int64_t NeighborGrid::cell_key(int ix, int iy, int iz) const {
  // 21 bits per axis, offset to keep keys positive
  auto enc = [](int v) { return int64_t(v + (1 << 20)) & ((1 << 21) - 1); };
  return (enc(ix) << 42) | (enc(iy) << 21) | enc(iz);
}

std::vector<std::pair<double, int>> NeighborGrid::query(
    const Eigen::Vector3d& p, double radius, int k) const {
  std::vector<std::pair<double, int>> found;
  if (!points_ || points_->empty() || k <= 0) return found;
  int lo[3], hi[3];
  for (int a = 0; a < 3; ++a) {
    lo[a] = int(std::floor((p[a] - radius) / cell_));
    hi[a] = int(std::floor((p[a] + radius) / cell_));
  }
  double r2 = radius * radius;
  for (int ix = lo[0]; ix <= hi[0]; ++ix)
    for (int iy = lo[1]; iy <= hi[1]; ++iy)
      for (int iz = lo[2]; iz <= hi[2]; ++iz) {
        auto it = cells_.find(cell_key(ix, iy, iz));
        if (it == cells_.end()) continue;
        for (int idx : it->second) {
          double d2 = ((*points_)[size_t(idx)] - p).squaredNorm();
          if (d2 <= r2) found.emplace_back(std::sqrt(d2), idx);
        }
      }
  std::sort(found.begin(), found.end());
  if (int(found.size()) > k) found.resize(size_t(k));
  return found;
}

std::pair<Eigen::Vector3d, Eigen::Vector3d> cloud_bounds(
    const NeuralPointCloud& cloud) {
  Eigen::Vector3d lo = Eigen::Vector3d::Constant(
      std::numeric_limits<double>::infinity());
  Eigen::Vector3d hi = -lo;
  for (const auto& p : cloud.positions) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  return {lo, hi};
}

}  // namespace sgnv
