#include "sgnv/scene/raycast.hpp"

#include <cmath>

#include "sgnv/core/rng.hpp"

namespace sgnv {

namespace {

constexpr double kEps = 1e-9;

// Face order: -x,+x,-y,+y,-z,+z.
Eigen::Vector3d face_normal(int face) {
  Eigen::Vector3d n = Eigen::Vector3d::Zero();
  n[face / 2] = (face % 2 == 0) ? -1.0 : 1.0;
  return n;
}

// Slab intersection with box [lo,hi]; returns entry/exit t. For rays
// starting inside, tmin < 0 < tmax.
bool box_slab(const Eigen::Vector3d& lo, const Eigen::Vector3d& hi,
              const Eigen::Vector3d& o, const Eigen::Vector3d& d,
              double& tmin, double& tmax, int& face_in, int& face_out) {
  tmin = -std::numeric_limits<double>::infinity();
  tmax = std::numeric_limits<double>::infinity();
  face_in = face_out = -1;
  for (int a = 0; a < 3; ++a) {
    if (std::abs(d[a]) < kEps) {
      if (o[a] < lo[a] || o[a] > hi[a]) return false;
      continue;
    }
    double inv = 1.0 / d[a];
    double t0 = (lo[a] - o[a]) * inv;
    double t1 = (hi[a] - o[a]) * inv;
    int f0 = 2 * a, f1 = 2 * a + 1;
    if (t0 > t1) {
      std::swap(t0, t1);
      std::swap(f0, f1);
    }
    if (t0 > tmin) {
      tmin = t0;
      face_in = f0;
    }
    if (t1 < tmax) {
      tmax = t1;
      face_out = f1;
    }
    if (tmin > tmax) return false;
  }
  return true;
}

// 2D checker from the in-plane coordinates of the hit point.
bool checker_cell(const Eigen::Vector3d& p, int face, double period) {
  int axis = face / 2;
  int a = (axis + 1) % 3, b = (axis + 2) % 3;
  int64_t ia = int64_t(std::floor(p[a] / period));
  int64_t ib = int64_t(std::floor(p[b] / period));
  return ((ia + ib) & 1) != 0;
}

}  // namespace

RayHit trace_scene_ray(const SceneSpec& spec, const Eigen::Vector3d& origin,
                       const Eigen::Vector3d& dir) {
  RayHit best;
  double best_t = std::numeric_limits<double>::infinity();

  // Room walls: exit point of the room box.
  {
    double tmin, tmax;
    int fin, fout;
    if (box_slab(Eigen::Vector3d::Zero(), spec.room_size, origin, dir, tmin,
                 tmax, fin, fout) &&
        tmax > kEps) {
      best.hit = true;
      best.t = tmax;
      best.point = origin + tmax * dir;
      best.normal = -face_normal(fout);  // inward
      best.base_color = spec.wall_colors[size_t(fout)];
      best.checker = spec.checker_walls &&
                     checker_cell(best.point, fout, spec.checker_period);
      best_t = tmax;
    }
  }

  for (const auto& obj : spec.objects) {
    double tmin, tmax;
    int fin, fout;
    if (!box_slab(obj.min_corner, obj.max_corner, origin, dir, tmin, tmax,
                  fin, fout))
      continue;
    double t = (tmin > kEps) ? tmin : tmax;  // inside-object rays hit the exit
    int face = (tmin > kEps) ? fin : fout;
    if (t <= kEps || t >= best_t) continue;
    best.hit = true;
    best.t = t;
    best.point = origin + t * dir;
    best.normal = (tmin > kEps) ? face_normal(face) : -face_normal(face);
    best.base_color = obj.face_colors[size_t(face)];
    best.checker = false;
    best_t = t;
  }
  return best;
}

Eigen::Vector3d shade_hit(const SceneSpec& spec, const RayHit& hit) {
  if (!hit.hit) return Eigen::Vector3d::Zero();
  Eigen::Vector3d l = -spec.light_dir.normalized();
  double diffuse = std::max(0.0, hit.normal.dot(l));
  double k = spec.ambient + (1.0 - spec.ambient) * diffuse;
  Eigen::Vector3d c = hit.base_color * k;
  if (hit.checker) c *= 0.55;
  return c.cwiseMin(1.0).cwiseMax(0.0);
}

View render_scene_view(const SceneSpec& spec, const CameraPose& pose,
                       const CameraIntrinsics& intr) {
  View v;
  v.pose = pose;
  v.image = Image(intr.width, intr.height, 3);
  v.depth.assign(size_t(intr.width) * size_t(intr.height), 0.0);
  for (int y = 0; y < intr.height; ++y)
    for (int x = 0; x < intr.width; ++x) {
      Eigen::Vector3d dir_cam((x + 0.5 - intr.cx) / intr.fx,
                              (y + 0.5 - intr.cy) / intr.fy, 1.0);
      dir_cam.normalize();
      Eigen::Vector3d dir_world = pose.rotation * dir_cam;
      RayHit hit = trace_scene_ray(spec, pose.translation, dir_world);
      if (!hit.hit) continue;
      Eigen::Vector3d c = shade_hit(spec, hit);
      for (int ch = 0; ch < 3; ++ch) v.image.at(x, y, ch) = c[ch];
      v.depth[size_t(y) * size_t(intr.width) + size_t(x)] = hit.t * dir_cam.z();
    }
  return v;
}

CameraPose look_at(const Eigen::Vector3d& eye, const Eigen::Vector3d& target) {
  Eigen::Vector3d up(0.0, 1.0, 0.0);
  Eigen::Vector3d f = (target - eye).normalized();
  if (std::abs(f.dot(up)) > 1.0 - 1e-9) up = Eigen::Vector3d(0.0, 0.0, 1.0);
  Eigen::Vector3d xc = f.cross(up).normalized();
  Eigen::Vector3d yc = f.cross(xc);
  CameraPose pose;
  pose.rotation.col(0) = xc;
  pose.rotation.col(1) = yc;
  pose.rotation.col(2) = f;
  pose.translation = eye;
  return pose;
}

std::vector<CameraPose> make_trajectory(const SceneSpec& spec, int n_frames,
                                        Trajectory trajectory) {
  Rng rng(spec.seed);
  Eigen::Vector3d center = 0.5 * spec.room_size;
  std::vector<CameraPose> poses;
  poses.reserve(size_t(n_frames));
  switch (trajectory) {
    case Trajectory::kOrbit: {
      double radius = 0.3 * std::min(spec.room_size.x(), spec.room_size.z());
      double phase = rng.uniform(0.0, 2.0 * M_PI);
      for (int i = 0; i < n_frames; ++i) {
        double th = phase + 2.0 * M_PI * i / n_frames;
        Eigen::Vector3d eye = center + Eigen::Vector3d(radius * std::cos(th),
                                                       0.0,
                                                       radius * std::sin(th));
        poses.push_back(look_at(eye, center));
      }
      break;
    }
    case Trajectory::kLine: {
      Eigen::Vector3d a = center + Eigen::Vector3d(-0.3 * spec.room_size.x(),
                                                   0.0, -0.2 * spec.room_size.z());
      Eigen::Vector3d b = center + Eigen::Vector3d(0.3 * spec.room_size.x(),
                                                   0.0, 0.2 * spec.room_size.z());
      for (int i = 0; i < n_frames; ++i) {
        double s = (n_frames == 1) ? 0.5 : double(i) / (n_frames - 1);
        Eigen::Vector3d eye = a + s * (b - a);
        Eigen::Vector3d tgt = center + Eigen::Vector3d(0, 0, 0.45 * spec.room_size.z());
        poses.push_back(look_at(eye, tgt));
      }
      break;
    }
    case Trajectory::kRandomWalk: {
      Eigen::Vector3d eye = center;
      for (int i = 0; i < n_frames; ++i) {
        Eigen::Vector3d step(rng.uniform(-0.15, 0.15), rng.uniform(-0.05, 0.05),
                             rng.uniform(-0.15, 0.15));
        eye += step;
        // stay within the inner 60% of the room
        for (int a = 0; a < 3; ++a)
          eye[a] = std::clamp(eye[a], 0.2 * spec.room_size[a],
                              0.8 * spec.room_size[a]);
        Eigen::Vector3d tgt = center + Eigen::Vector3d(rng.uniform(-0.3, 0.3),
                                                       rng.uniform(-0.2, 0.2),
                                                       rng.uniform(-0.3, 0.3));
        if ((tgt - eye).norm() < 1e-6) tgt = eye + Eigen::Vector3d(0, 0, 1);
        poses.push_back(look_at(eye, tgt));
      }
      break;
    }
  }
  return poses;
}

std::vector<View> generate_synthetic_scene(const SceneSpec& spec,
                                           const CameraIntrinsics& intr,
                                           int n_frames,
                                           Trajectory trajectory) {
  spec.validate();
  intr.validate();
  if (n_frames < 2)
    throw Error("scene_spec_invalid", "n_frames must be >= 2");
  auto poses = make_trajectory(spec, n_frames, trajectory);
  std::vector<View> views;
  views.reserve(poses.size());
  for (const auto& pose : poses)
    views.push_back(render_scene_view(spec, pose, intr));
  return views;
}

SceneSpec make_default_scene_spec(uint64_t seed) {
  SceneSpec spec;
  spec.seed = seed;
  Rng rng(seed ^ 0x9e3779b97f4a7c15ull);
  int n_objects = 2 + rng.uniform_int(3);
  for (int i = 0; i < n_objects; ++i) {
    BoxObject box;
    Eigen::Vector3d sz(rng.uniform(0.3, 0.8), rng.uniform(0.3, 1.2),
                       rng.uniform(0.3, 0.8));
    Eigen::Vector3d lo(rng.uniform(0.1, spec.room_size.x() - sz.x() - 0.1),
                       0.0,  // resting on the floor (y = 0)
                       rng.uniform(0.1, spec.room_size.z() - sz.z() - 0.1));
    box.min_corner = lo;
    box.max_corner = lo + sz;
    Eigen::Vector3d base(rng.uniform(0.2, 1.0), rng.uniform(0.2, 1.0),
                         rng.uniform(0.2, 1.0));
    for (int f = 0; f < 6; ++f)
      box.face_colors[size_t(f)] =
          (base * rng.uniform(0.7, 1.0)).cwiseMin(1.0);
    spec.objects.push_back(box);
  }
  return spec;
}

}  // namespace sgnv
