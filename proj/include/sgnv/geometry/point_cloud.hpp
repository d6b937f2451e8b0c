#pragma once

#include <unordered_map>

#include "sgnv/core/tensor.hpp"
#include "sgnv/scene/types.hpp"

namespace sgnv {

/// World-space points unprojected from observed depth maps. Features live in
/// a parallel [P,d] tensor produced by the feature extractor (see
/// GeometryModel::point_features); provenance maps each point back to its
/// (view, pixel) source.
struct NeuralPointCloud {
  std::vector<Eigen::Vector3d> positions;
  std::vector<std::pair<int, int>> source;  // (view index, pixel index)

  int point_count() const { return int(positions.size()); }
};

/// Unprojects every valid-depth pixel on the stride grid:
/// position = pose * (depth * K^-1 * (u+0.5, v+0.5, 1)).
NeuralPointCloud build_point_cloud(const std::vector<View>& observed,
                                   const CameraIntrinsics& intr, int stride);

/// Uniform hash grid for fixed-radius nearest-neighbor queries. Results are
/// sorted by (distance, index) so downstream reductions are deterministic.
class NeighborGrid {
 public:
  NeighborGrid() = default;
  NeighborGrid(const std::vector<Eigen::Vector3d>& points, double cell_size);

  /// Up to k nearest points within `radius` of p.
  std::vector<std::pair<double, int>> query(const Eigen::Vector3d& p,
                                            double radius, int k) const;

 private:
  int64_t cell_key(int ix, int iy, int iz) const;

  const std::vector<Eigen::Vector3d>* points_ = nullptr;
  double cell_ = 1.0;
  std::unordered_map<int64_t, std::vector<int>> cells_;
};

/// Axis-aligned bounds of the cloud, for deriving near/far defaults.
std::pair<Eigen::Vector3d, Eigen::Vector3d> cloud_bounds(
    const NeuralPointCloud& cloud);

}  // namespace sgnv
