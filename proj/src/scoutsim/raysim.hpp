#pragma once

#include <cstdint>
#include <vector>

#include "scoutsim/citymap.hpp"
#include "scoutsim/common.hpp"
#include "scoutsim/pose.hpp"
#include "scoutsim/rng.hpp"

namespace scoutsim {

struct CameraModel {
  double fov = kPi / 2;  // horizontal, radians
  int width = 64;
  int height = 64;
  double max_range = 1000.0;

  double vfov() const {
    return 2.0 * std::atan(std::tan(fov / 2) * static_cast<double>(height) / width);
  }
  /// Depth value encoding "no hit" (sky).
  double no_hit() const { return max_range + 1.0; }
};

struct RgbdFrame {
  int width = 0, height = 0;
  std::vector<float> rgb;    // width*height*3, row-major, [0,1]
  std::vector<float> depth;  // width*height, meters; no_hit() when sky
  PoseSE3 pose;
  int timestamp = 0;

  size_t pixel_index(int u, int v) const { return static_cast<size_t>(v) * width + u; }
};

struct Detection {
  int target_id = -1;
  Vec2 ground_point{0, 0};  // target's true planar position
  int pixel_u = 0, pixel_v = 0;
};

// Flat shading palette. Colors only need to be consistent between frames, so
// each building gets a hash-derived color.
Vec3f building_color(size_t building_index);
Vec3f ground_color();
Vec3f sky_color();

/// Ray through the center of pixel (u, v); direction is unit length.
void pixel_ray(const PoseSE3& pose, const CameraModel& cam, int u, int v, Vec3* origin, Vec3* dir);

/// Nearest intersection distance of a ray with the extruded city (walls,
/// roofs, infinite ground plane). Returns no-hit when nothing is closer than
/// max_range; *building_out gets the building index or -1 for ground.
double cast_ray(const CityMap& map, const Vec3& origin, const Vec3& dir, double max_range,
                int* building_out);

RgbdFrame render_rgbd(const CityMap& map, const PoseSE3& pose, const CameraModel& cam);

/// True iff the open segment intersects no extruded prism.
bool line_of_sight(const CityMap& map, const Vec3& from, const Vec3& to);

bool in_frustum(const PoseSE3& pose, const CameraModel& cam, const Vec3& point);

struct DetectionModel {
  double p_detect = 0.95;
};

/// One Bernoulli draw is consumed per target on every call, whether or not
/// the target is visible, so rng streams stay aligned across outcomes.
std::vector<Detection> detect_targets(const CityMap& map, const PoseSE3& pose,
                                      const CameraModel& cam, const std::vector<Vec2>& targets,
                                      Rng& rng, const DetectionModel& model = {});

/// mask[j] = node j is inside the frustum and has line of sight from pose.
std::vector<uint8_t> visible_cells_gt(const CityMap& map, const PoseSE3& pose,
                                      const CameraModel& cam, const GroundGraph& graph);

}  // namespace scoutsim
