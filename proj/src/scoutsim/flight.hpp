#pragma once

#include <array>
#include <optional>
#include <vector>

#include "scoutsim/citymap.hpp"
#include "scoutsim/common.hpp"
#include "scoutsim/pose.hpp"

namespace scoutsim {

/// Endpoint derivatives (position through jerk) of one flat axis.
struct AxisBC {
  double pos = 0, vel = 0, acc = 0, jerk = 0;
};

/// Degree-7 polynomial per flat axis (x, y, z, yaw) over t in [0, T].
struct Poly7Segment {
  std::array<std::array<double, 8>, 4> coeffs{};  // axis -> ascending powers
  double duration = 0;

  double eval(int axis, double t, int deriv = 0) const;
};

/// Unique degree-7 interpolant for eight boundary conditions; with the full
/// endpoint derivative set this is also the minimum-snap trajectory.
std::array<double, 8> min_snap_axis(const AxisBC& start, const AxisBC& end, double T);

/// Integral of squared snap over [0, T] for one axis.
double snap_cost(const std::array<double, 8>& coeffs, double T);

Poly7Segment min_snap_segment(const std::array<AxisBC, 4>& start, const std::array<AxisBC, 4>& end,
                              double T);

struct FlightParams {
  double lattice_spacing = 10.0;
  double z_min = 10.0;
  double v_max = 15.0;    // m/s; segment times follow from the rest-to-rest peak
  double scan_fraction = 1.0 / 3.0;  // share of control steps spent scanning
  double scan_pitch_amp = 0.2617993877991494;  // 15 deg
  double min_scan_time = 6.0;                  // seconds, also used when route is trivial
};

/// 26-connected free-space lattice between z_min and the altitude cap with
/// collision-checked edges, built once per map and reused for every route.
class FlightLattice {
 public:
  FlightLattice(const CityMap& map, double spacing, double z_min);

  /// Shortest route start -> goal, greedily shortcut so only load-bearing
  /// waypoints remain. nullopt when no connection exists.
  std::optional<std::vector<Vec3>> route(const Vec3& start, const Vec3& goal) const;

  const CityMap& map() const { return *map_; }
  bool segment_free(const Vec3& a, const Vec3& b) const;
  int nearest_free_node(const Vec3& p) const;
  size_t node_count() const { return nodes_.size(); }
  const Vec3& node(size_t i) const { return nodes_[i]; }

 private:
  int id_at(int ix, int iy, int iz) const;

  const CityMap* map_;
  double spacing_;
  double z0_;
  int nx_ = 0, ny_ = 0, nz_ = 0;
  std::vector<Vec3> nodes_;
  std::vector<int> grid_;
  std::vector<std::vector<std::pair<int, double>>> adj_;
};

/// Transit (chained rest-to-rest min-snap legs through the route) followed by
/// a hovering scan sweeping one full yaw revolution with a sinusoidal pitch
/// modulation.
struct TrajectoryPlan {
  std::vector<Vec3> route;
  std::vector<Poly7Segment> segments;  // one per route leg
  PoseSE3 start_pose, goal_pose;
  double transit_time = 0;
  double scan_time = 0;
  double scan_pitch_amp = 0;

  double total_time() const { return transit_time + scan_time; }
};

/// Route + time allocation + per-leg min-snap polynomials. The goal yaw/pitch
/// come from the selected candidate pose.
TrajectoryPlan plan_to_waypoint(const FlightLattice& lattice, const PoseSE3& start,
                                const PoseSE3& goal, const FlightParams& params);

/// n_steps poses uniformly spaced over the plan's total time. Yaw follows the
/// min-snap yaw axis during transit; pitch interpolates linearly; the scan
/// tail sweeps yaw by 2*pi.
std::vector<PoseSE3> sample_plan(const TrajectoryPlan& plan, int n_steps);

}  // namespace scoutsim
