#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "scoutsim/common.hpp"
#include "scoutsim/pose.hpp"
#include "scoutsim/rng.hpp"

namespace scoutsim {

using Polygon = std::vector<Vec2>;

struct Building {
  Polygon footprint;  // simple polygon, meters
  double height = 0;  // meters, > 0
};

/// Ground-truth world: extruded footprints on a flat ground plane at z = 0.
/// Immutable after construction; safe for concurrent reads.
struct CityMap {
  std::vector<Building> buildings;
  Rect bounds;
  double altitude_cap = 0;

  /// Throws on invariant violations (bad polygon, nonpositive heights, ...).
  void validate() const;
};

/// 8-connected (optionally 4-connected) lattice over free ground cells.
/// Node ordering is deterministic: row-major, iy then ix ascending.
struct GroundGraph {
  double spacing = 10.0;
  Rect bounds;
  int nx = 0, ny = 0;
  std::vector<Vec2> nodes;                    // id -> position
  std::vector<std::pair<int, int>> lattice;   // id -> (ix, iy)
  std::vector<int> grid;                      // ix + iy*nx -> id, -1 if blocked
  std::vector<std::vector<std::pair<int, double>>> adj;  // id -> (nbr, cost)

  int id_at(int ix, int iy) const {
    if (ix < 0 || iy < 0 || ix >= nx || iy >= ny) return -1;
    return grid[static_cast<size_t>(iy) * nx + ix];
  }
  size_t size() const { return nodes.size(); }
  int nearest_node(const Vec2& p) const;
};

// Map file I/O. Format documented in docs/formats.md; parse failures throw
// config errors with a line number.
CityMap load_map(const std::string& path);
CityMap parse_map(const std::string& text, const std::string& origin_name);
void save_map(const CityMap& map, const std::string& path);

GroundGraph build_ground_graph(const CityMap& map, double spacing, bool eight_connected = true);

/// Minimal-cost path between graph nodes; ties broken toward the
/// lexicographically smallest node-id sequence. nullopt when unreachable.
std::optional<std::vector<int>> shortest_path(const GroundGraph& graph, int src, int dst);

/// Cost of a node path (sum of Euclidean hops).
double path_length(const GroundGraph& graph, const std::vector<int>& path);

/// Boundary-inclusive: points on a footprint edge count as inside.
bool point_in_building(const CityMap& map, const Vec2& p);

/// True when p is inside some extruded prism (2D inside footprint and z below
/// its roof). Used for 3D free-space checks.
bool point_in_prism(const CityMap& map, const Vec3& p);

/// True when the open 3D segment intersects any extruded prism.
bool segment_hits_building(const CityMap& map, const Vec3& a, const Vec3& b);

struct FreePoseParams {
  double z_min = 1.0;
  double z_max = 100.0;
  double pitch_min = -1.396263401595464;  // -80 deg
  double pitch_max = -0.08726646259971647;  // -5 deg
  int max_iters = 10000;
};

/// Uniform rejection sampling of a collision-free pose. Each attempt draws
/// x, y, z, yaw, pitch in that order. Throws when the iteration cap is hit.
PoseSE3 sample_free_pose(const CityMap& map, Rng& rng, const FreePoseParams& params);

// Low-level polygon predicates shared with the sensor simulator and tests.
bool point_in_polygon(const Polygon& poly, const Vec2& p);  // boundary-inclusive
bool segments_intersect(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& d);
bool segment_intersects_polygon(const Polygon& poly, const Vec2& a, const Vec2& b);
bool polygon_is_simple(const Polygon& poly);

}  // namespace scoutsim
