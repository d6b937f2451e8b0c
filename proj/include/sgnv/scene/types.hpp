#pragma once

#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "sgnv/core/errors.hpp"
#include "sgnv/core/image.hpp"

namespace sgnv {

struct CameraIntrinsics {
  double fx = 0, fy = 0, cx = 0, cy = 0;
  int width = 0, height = 0;

  void validate() const {
    if (fx <= 0 || fy <= 0)
      throw Error("intrinsics_invalid", "focal lengths must be positive");
    if (cx <= 0 || cx >= width || cy <= 0 || cy >= height)
      throw Error("intrinsics_invalid", "principal point outside image");
  }
};

/// Camera-to-world rigid transform.
struct CameraPose {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();

  void validate(double tol = 1e-6) const {
    Eigen::Matrix3d rtr = rotation.transpose() * rotation;
    if ((rtr - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() > tol)
      throw Error("pose_invalid", "rotation is not orthonormal");
    if (std::abs(rotation.determinant() - 1.0) > tol)
      throw Error("pose_invalid", "rotation determinant is not +1");
  }

  Eigen::Vector3d to_world(const Eigen::Vector3d& p_cam) const {
    return rotation * p_cam + translation;
  }
  Eigen::Vector3d to_camera(const Eigen::Vector3d& p_world) const {
    return rotation.transpose() * (p_world - translation);
  }
};

/// One posed observation. Depth is per-pixel camera-space z in meters;
/// 0 marks an invalid depth.
struct View {
  Image image;                 // W x H x 3 in [0,1]
  CameraPose pose;
  std::vector<double> depth;   // empty or width*height

  bool has_depth() const { return !depth.empty(); }
  double depth_at(int x, int y) const {
    return depth[size_t(y) * size_t(image.width) + size_t(x)];
  }
};

struct ViewSet {
  std::vector<View> views;
  std::vector<int> observed_indices;
  std::vector<int> novel_indices;
};

/// Axis-aligned box with a flat color per face (-x,+x,-y,+y,-z,+z).
struct BoxObject {
  Eigen::Vector3d min_corner, max_corner;
  std::array<Eigen::Vector3d, 6> face_colors;
};

struct SceneSpec {
  Eigen::Vector3d room_size{4.0, 3.0, 4.0};  // meters; room spans [0, size]
  std::vector<BoxObject> objects;
  std::array<Eigen::Vector3d, 6> wall_colors{
      Eigen::Vector3d{0.8, 0.3, 0.3}, Eigen::Vector3d{0.3, 0.8, 0.3},
      Eigen::Vector3d{0.6, 0.6, 0.2}, Eigen::Vector3d{0.9, 0.9, 0.9},
      Eigen::Vector3d{0.3, 0.3, 0.8}, Eigen::Vector3d{0.7, 0.4, 0.7}};
  bool checker_walls = true;
  double checker_period = 0.5;  // meters
  Eigen::Vector3d light_dir{0.3, 1.0, 0.2};  // points from light, toward -y up
  double ambient = 0.35;
  uint64_t seed = 0;

  void validate() const {
    if (room_size.minCoeff() <= 0)
      throw Error("scene_spec_invalid", "room has zero or negative volume");
    for (const auto& o : objects) {
      if ((o.max_corner - o.min_corner).minCoeff() <= 0)
        throw Error("scene_spec_invalid", "object box has zero volume");
      if (o.min_corner.minCoeff() < 0 ||
          (room_size - o.max_corner).minCoeff() < 0)
        throw Error("scene_spec_invalid", "object outside the room");
    }
  }
};

enum class Trajectory { kOrbit, kLine, kRandomWalk };

}  // namespace sgnv
