#pragma once

#include "sgnv/scene/types.hpp"

namespace sgnv {

/// Uniform observed/novel split without replacement; deterministic in seed.
ViewSet sample_view_set(std::vector<View> views, int n_obs, uint64_t seed);

/// `count` poses strictly between a and b: linear translation, shortest-arc
/// quaternion SLERP for rotation (antipodal tie broken by negating b's
/// quaternion). Endpoints excluded: parameter i/(count+1), i = 1..count.
std::vector<CameraPose> interpolate_poses(const CameraPose& a,
                                          const CameraPose& b, int count);

}  // namespace sgnv
