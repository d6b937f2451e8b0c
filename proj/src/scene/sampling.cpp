#include "sgnv/scene/sampling.hpp"

#include <unordered_set>

#include "sgnv/core/rng.hpp"

namespace sgnv {

ViewSet sample_view_set(std::vector<View> views, int n_obs, uint64_t seed) {
  int n = int(views.size());
  if (n_obs < 1 || n_obs >= n)
    throw Error("view_split_invalid",
                "n_obs must satisfy 1 <= n_obs < N (got n_obs=" +
                    std::to_string(n_obs) + ", N=" + std::to_string(n) + ")");
  Rng rng(seed);
  ViewSet vs;
  vs.views = std::move(views);
  vs.observed_indices = rng.sample_without_replacement(n, n_obs);
  std::unordered_set<int> obs(vs.observed_indices.begin(),
                              vs.observed_indices.end());
  for (int i = 0; i < n; ++i)
    if (!obs.count(i)) vs.novel_indices.push_back(i);
  return vs;
}

std::vector<CameraPose> interpolate_poses(const CameraPose& a,
                                          const CameraPose& b, int count) {
  if (count < 1)
    throw Error("interp_invalid", "count must be >= 1");
  a.validate();
  b.validate();
  Eigen::Quaterniond qa(a.rotation), qb(b.rotation);
  double dot = qa.dot(qb);
  if (dot < 0.0) {  // shortest arc; also the antipodal tie convention
    qb.coeffs() = -qb.coeffs();
    dot = -dot;
  }
  dot = std::min(dot, 1.0);
  double omega = std::acos(dot);
  std::vector<CameraPose> out;
  out.reserve(size_t(count));
  for (int i = 1; i <= count; ++i) {
    double t = double(i) / double(count + 1);
    Eigen::Quaterniond q;
    if (omega < 1e-9) {
      q.coeffs() = (1.0 - t) * qa.coeffs() + t * qb.coeffs();
    } else {
      double s = std::sin(omega);
      q.coeffs() = (std::sin((1.0 - t) * omega) / s) * qa.coeffs() +
                   (std::sin(t * omega) / s) * qb.coeffs();
    }
    q.normalize();
    CameraPose p;
    p.rotation = q.toRotationMatrix();
    p.translation = (1.0 - t) * a.translation + t * b.translation;
    out.push_back(p);
  }
  return out;
}

}  // namespace sgnv
