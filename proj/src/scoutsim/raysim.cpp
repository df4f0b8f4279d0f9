#include "scoutsim/raysim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace scoutsim {

namespace {
constexpr double kRayEps = 1e-9;
}

Vec3f building_color(size_t building_index) {
  const uint64_t h = Rng::splitmix64(static_cast<uint64_t>(building_index) + 0x5eed);
  auto channel = [&](int shift) {
    return 0.15f + 0.7f * static_cast<float>((h >> shift) & 0xffff) / 65535.0f;
  };
  return Vec3f(channel(0), channel(16), channel(32));
}

Vec3f ground_color() { return Vec3f(0.35f, 0.33f, 0.30f); }
Vec3f sky_color() { return Vec3f(0.53f, 0.81f, 0.92f); }

void pixel_ray(const PoseSE3& pose, const CameraModel& cam, int u, int v, Vec3* origin,
               Vec3* dir) {
  const CameraBasis b = camera_basis(pose);
  const double tx = std::tan(cam.fov / 2);
  const double ty = std::tan(cam.vfov() / 2);
  const double ndc_x = (2.0 * (u + 0.5) / cam.width - 1.0) * tx;
  const double ndc_y = (2.0 * (v + 0.5) / cam.height - 1.0) * ty;
  *origin = pose.position;
  *dir = (b.forward + ndc_x * b.right - ndc_y * b.up).normalized();
}

double cast_ray(const CityMap& map, const Vec3& origin, const Vec3& dir, double max_range,
                int* building_out) {
  double best_t = std::numeric_limits<double>::infinity();
  int best_b = -1;

  // Ground plane z = 0 extends to the horizon.
  if (dir.z() < -kRayEps) {
    const double t = -origin.z() / dir.z();
    if (t > kRayEps && t < best_t) {
      best_t = t;
      best_b = -1;
    }
  }

  const Vec2 o2(origin.x(), origin.y());
  const Vec2 d2(dir.x(), dir.y());
  const double d2n = d2.norm();
  for (size_t bi = 0; bi < map.buildings.size(); ++bi) {
    const Building& b = map.buildings[bi];
    // Walls: vertical quads over each footprint edge.
    if (d2n > kRayEps) {
      const size_t n = b.footprint.size();
      for (size_t i = 0, j = n - 1; i < n; j = i++) {
        const Vec2& q = b.footprint[j];
        const Vec2 s = b.footprint[i] - q;
        const double denom = d2.x() * s.y() - d2.y() * s.x();
        if (std::abs(denom) < 1e-15) continue;
        const Vec2 qo = q - o2;
        const double t = (qo.x() * s.y() - qo.y() * s.x()) / denom;
        const double u = (qo.x() * d2.y() - qo.y() * d2.x()) / denom;
        if (t <= kRayEps || u < 0.0 || u > 1.0 || t >= best_t) continue;
        const double z = origin.z() + t * dir.z();
        if (z >= 0.0 && z <= b.height) {
          best_t = t;
          best_b = static_cast<int>(bi);
        }
      }
    }
    // Roof plane z = height.
    if (std::abs(dir.z()) > kRayEps) {
      const double t = (b.height - origin.z()) / dir.z();
      if (t > kRayEps && t < best_t &&
          point_in_polygon(b.footprint, o2 + t * d2)) {
        best_t = t;
        best_b = static_cast<int>(bi);
      }
    }
  }

  if (!(best_t <= max_range)) {
    if (building_out) *building_out = -1;
    return max_range + 1.0;
  }
  if (building_out) *building_out = best_b;
  return best_t;
}

RgbdFrame render_rgbd(const CityMap& map, const PoseSE3& pose, const CameraModel& cam) {
  RgbdFrame frame;
  frame.width = cam.width;
  frame.height = cam.height;
  frame.pose = pose;
  frame.rgb.resize(static_cast<size_t>(cam.width) * cam.height * 3);
  frame.depth.resize(static_cast<size_t>(cam.width) * cam.height);
  const Vec3 forward = camera_basis(pose).forward;
  for (int v = 0; v < cam.height; ++v) {
    for (int u = 0; u < cam.width; ++u) {
      Vec3 o, d;
      pixel_ray(pose, cam, u, v, &o, &d);
      int hit_b = -1;
      const double t = cast_ray(map, o, d, cam.max_range, &hit_b);
      const size_t pi = frame.pixel_index(u, v);
      Vec3f color;
      if (t > cam.max_range) {
        color = sky_color();
        frame.depth[pi] = static_cast<float>(cam.no_hit());
      } else {
        color = hit_b < 0 ? ground_color() : building_color(static_cast<size_t>(hit_b));
        // Depth images hold planar depth (distance along the optical axis).
        frame.depth[pi] = static_cast<float>(t * d.dot(forward));
      }
      frame.rgb[pi * 3 + 0] = color.x();
      frame.rgb[pi * 3 + 1] = color.y();
      frame.rgb[pi * 3 + 2] = color.z();
    }
  }
  return frame;
}

bool line_of_sight(const CityMap& map, const Vec3& from, const Vec3& to) {
  return !segment_hits_building(map, from, to);
}

bool in_frustum(const PoseSE3& pose, const CameraModel& cam, const Vec3& point) {
  const CameraBasis b = camera_basis(pose);
  const Vec3 rel = point - pose.position;
  const double pf = rel.dot(b.forward);
  if (pf <= kRayEps) return false;
  if (rel.norm() > cam.max_range) return false;
  if (std::abs(rel.dot(b.right)) > pf * std::tan(cam.fov / 2)) return false;
  if (std::abs(rel.dot(b.up)) > pf * std::tan(cam.vfov() / 2)) return false;
  return true;
}

std::vector<Detection> detect_targets(const CityMap& map, const PoseSE3& pose,
                                      const CameraModel& cam, const std::vector<Vec2>& targets,
                                      Rng& rng, const DetectionModel& model) {
  std::vector<Detection> out;
  for (size_t i = 0; i < targets.size(); ++i) {
    const bool coin = rng.uniform() < model.p_detect;  // always consume one draw
    const Vec3 p3(targets[i].x(), targets[i].y(), 0.0);
    if (!coin) continue;
    if (!in_frustum(pose, cam, p3)) continue;
    if (!line_of_sight(map, pose.position, p3)) continue;
    Detection det;
    det.target_id = static_cast<int>(i);
    det.ground_point = targets[i];
    const CameraBasis b = camera_basis(pose);
    const Vec3 rel = p3 - pose.position;
    const double pf = rel.dot(b.forward);
    const double px = rel.dot(b.right) / (pf * std::tan(cam.fov / 2));
    const double py = rel.dot(b.up) / (pf * std::tan(cam.vfov() / 2));
    det.pixel_u = std::clamp(static_cast<int>((px + 1.0) / 2.0 * cam.width), 0, cam.width - 1);
    det.pixel_v = std::clamp(static_cast<int>((-py + 1.0) / 2.0 * cam.height), 0, cam.height - 1);
    out.push_back(det);
  }
  return out;
}

std::vector<uint8_t> visible_cells_gt(const CityMap& map, const PoseSE3& pose,
                                      const CameraModel& cam, const GroundGraph& graph) {
  std::vector<uint8_t> mask(graph.size(), 0);
  for (size_t j = 0; j < graph.size(); ++j) {
    const Vec3 p(graph.nodes[j].x(), graph.nodes[j].y(), 0.0);
    mask[j] = in_frustum(pose, cam, p) && line_of_sight(map, pose.position, p);
  }
  return mask;
}

}  // namespace scoutsim
