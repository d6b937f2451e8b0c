#pragma once

#include "sgnv/scene/types.hpp"

namespace sgnv {

struct RayHit {
  bool hit = false;
  double t = 0.0;                // distance along the (unit) ray direction
  Eigen::Vector3d point = Eigen::Vector3d::Zero();
  Eigen::Vector3d normal = Eigen::Vector3d::Zero();  // faces the ray origin
  Eigen::Vector3d base_color = Eigen::Vector3d::Zero();
  bool checker = false;
};

/// Nearest intersection of a world-space ray with the room walls and object
/// boxes. The origin is assumed inside the room.
RayHit trace_scene_ray(const SceneSpec& spec, const Eigen::Vector3d& origin,
                       const Eigen::Vector3d& dir);

/// Flat Lambertian shading with optional checker modulation on walls.
Eigen::Vector3d shade_hit(const SceneSpec& spec, const RayHit& hit);

/// Renders one exact RGB-D view of the scene.
View render_scene_view(const SceneSpec& spec, const CameraPose& pose,
                       const CameraIntrinsics& intr);

/// Camera-to-world look-at with world up (0,1,0); camera y points down.
CameraPose look_at(const Eigen::Vector3d& eye, const Eigen::Vector3d& target);

std::vector<CameraPose> make_trajectory(const SceneSpec& spec, int n_frames,
                                        Trajectory trajectory);

/// Renders n_frames posed RGB-D views along the trajectory. Deterministic in
/// spec.seed.
std::vector<View> generate_synthetic_scene(const SceneSpec& spec,
                                           const CameraIntrinsics& intr,
                                           int n_frames, Trajectory trajectory);

/// Populates a spec with seed-dependent boxes, for test/demo scenes.
SceneSpec make_default_scene_spec(uint64_t seed);

}  // namespace sgnv
