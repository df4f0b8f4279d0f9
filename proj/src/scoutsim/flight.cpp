#include "scoutsim/flight.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <queue>

namespace scoutsim {

namespace {
// Peak speed of the rest-to-rest degree-7 interpolant is 35/16 * d/T.
constexpr double kRestToRestPeak = 35.0 / 16.0;
}  // namespace

double Poly7Segment::eval(int axis, double t, int deriv) const {
  double acc = 0;
  for (int k = 7; k >= deriv; --k) {
    double factor = 1;
    for (int j = 0; j < deriv; ++j) factor *= (k - j);
    acc = acc * t + coeffs[axis][k] * factor;
  }
  return acc;
}

std::array<double, 8> min_snap_axis(const AxisBC& start, const AxisBC& end, double T) {
  if (!(T > 0)) throw invalid_error("min_snap_axis: duration must be > 0");
  Eigen::Matrix<double, 8, 8> A = Eigen::Matrix<double, 8, 8>::Zero();
  Eigen::Matrix<double, 8, 1> b;
  // Rows: pos/vel/acc/jerk at t=0 then at t=T.
  for (int d = 0; d < 4; ++d) {
    double factor = 1;
    for (int j = 0; j < d; ++j) factor *= (d - j);
    A(d, d) = factor;
    for (int k = d; k < 8; ++k) {
      double f = 1;
      for (int j = 0; j < d; ++j) f *= (k - j);
      A(4 + d, k) = f * std::pow(T, k - d);
    }
  }
  b << start.pos, start.vel, start.acc, start.jerk, end.pos, end.vel, end.acc, end.jerk;
  Eigen::FullPivLU<Eigen::Matrix<double, 8, 8>> lu(A);
  if (!lu.isInvertible()) throw runtime_error_("min_snap_axis: singular boundary system");
  const Eigen::Matrix<double, 8, 1> x = lu.solve(b);
  std::array<double, 8> out;
  for (int i = 0; i < 8; ++i) out[i] = x(i);
  return out;
}

double snap_cost(const std::array<double, 8>& coeffs, double T) {
  // snap(t) = sum_{k>=4} c_k * k!/(k-4)! * t^{k-4}
  double cost = 0;
  for (int j = 4; j < 8; ++j) {
    double fj = 1;
    for (int m = 0; m < 4; ++m) fj *= (j - m);
    for (int k = 4; k < 8; ++k) {
      double fk = 1;
      for (int m = 0; m < 4; ++m) fk *= (k - m);
      const int p = j + k - 8;
      cost += coeffs[j] * coeffs[k] * fj * fk * std::pow(T, p + 1) / (p + 1);
    }
  }
  return cost;
}

Poly7Segment min_snap_segment(const std::array<AxisBC, 4>& start, const std::array<AxisBC, 4>& end,
                              double T) {
  Poly7Segment seg;
  seg.duration = T;
  for (int axis = 0; axis < 4; ++axis) seg.coeffs[axis] = min_snap_axis(start[axis], end[axis], T);
  return seg;
}

FlightLattice::FlightLattice(const CityMap& map, double spacing, double z_min)
    : map_(&map), spacing_(spacing), z0_(z_min) {
  if (spacing <= 0) throw invalid_error("flight lattice spacing must be > 0");
  nx_ = static_cast<int>(std::floor(map.bounds.width() / spacing + 1e-9)) + 1;
  ny_ = static_cast<int>(std::floor(map.bounds.height() / spacing + 1e-9)) + 1;
  nz_ = std::max(1, static_cast<int>(std::floor((map.altitude_cap - z_min) / spacing + 1e-9)) + 1);
  grid_.assign(static_cast<size_t>(nx_) * ny_ * nz_, -1);
  for (int iz = 0; iz < nz_; ++iz) {
    for (int iy = 0; iy < ny_; ++iy) {
      for (int ix = 0; ix < nx_; ++ix) {
        const Vec3 p(map.bounds.xmin + ix * spacing, map.bounds.ymin + iy * spacing,
                     z0_ + iz * spacing);
        if (point_in_prism(map, p)) continue;
        grid_[(static_cast<size_t>(iz) * ny_ + iy) * nx_ + ix] =
            static_cast<int>(nodes_.size());
        nodes_.push_back(p);
      }
    }
  }
  adj_.resize(nodes_.size());
  // Edge validity is precomputed once; routes reuse it every planning step.
  size_t node_id = 0;
  for (int iz = 0; iz < nz_; ++iz) {
    for (int iy = 0; iy < ny_; ++iy) {
      for (int ix = 0; ix < nx_; ++ix) {
        const int id = id_at(ix, iy, iz);
        if (id < 0) continue;
        for (int dz = -1; dz <= 1; ++dz) {
          for (int dy = -1; dy <= 1; ++dy) {
            for (int dx = -1; dx <= 1; ++dx) {
              if (dx == 0 && dy == 0 && dz == 0) continue;
              // Each undirected edge is tested once and mirrored.
              if (dz < 0 || (dz == 0 && (dy < 0 || (dy == 0 && dx < 0)))) continue;
              const int nid = id_at(ix + dx, iy + dy, iz + dz);
              if (nid < 0) continue;
              if (!segment_free(nodes_[id], nodes_[nid])) continue;
              const double w = (nodes_[nid] - nodes_[id]).norm();
              adj_[id].emplace_back(nid, w);
              adj_[nid].emplace_back(id, w);
            }
          }
        }
        ++node_id;
      }
    }
  }
  (void)node_id;
  for (auto& nbrs : adj_) std::sort(nbrs.begin(), nbrs.end());
}

int FlightLattice::id_at(int ix, int iy, int iz) const {
  if (ix < 0 || iy < 0 || iz < 0 || ix >= nx_ || iy >= ny_ || iz >= nz_) return -1;
  return grid_[(static_cast<size_t>(iz) * ny_ + iy) * nx_ + ix];
}

bool FlightLattice::segment_free(const Vec3& a, const Vec3& b) const {
  return !segment_hits_building(*map_, a, b);
}

int FlightLattice::nearest_free_node(const Vec3& p) const {
  if (nodes_.empty()) return -1;
  const int cx = static_cast<int>(std::lround((p.x() - map_->bounds.xmin) / spacing_));
  const int cy = static_cast<int>(std::lround((p.y() - map_->bounds.ymin) / spacing_));
  const int cz = static_cast<int>(std::lround((p.z() - z0_) / spacing_));
  const int rmax = std::max(nx_, std::max(ny_, nz_));
  for (int r = 0; r <= rmax; ++r) {
    int best = -1;
    double best_d = std::numeric_limits<double>::infinity();
    for (int iz = cz - r; iz <= cz + r; ++iz) {
      for (int iy = cy - r; iy <= cy + r; ++iy) {
        for (int ix = cx - r; ix <= cx + r; ++ix) {
          const int rr = std::max({std::abs(ix - cx), std::abs(iy - cy), std::abs(iz - cz)});
          if (rr != r) continue;
          const int id = id_at(ix, iy, iz);
          if (id < 0) continue;
          const double d = (nodes_[id] - p).squaredNorm();
          if (d < best_d - 1e-12 || (std::abs(d - best_d) <= 1e-12 && id < best)) {
            best_d = d;
            best = id;
          }
        }
      }
    }
    if (best >= 0) return best;
  }
  return -1;
}

std::optional<std::vector<Vec3>> FlightLattice::route(const Vec3& start, const Vec3& goal) const {
  if ((goal - start).norm() < 1e-9) return std::vector<Vec3>{start};
  if (segment_free(start, goal)) return std::vector<Vec3>{start, goal};

  // Attach the exact endpoints to nearby lattice nodes with free connections.
  auto attach = [&](const Vec3& p) -> int {
    const int base = nearest_free_node(p);
    if (base < 0) return -1;
    if (segment_free(p, nodes_[base])) return base;
    // Scan outward over node ids near the base for a connectable node.
    for (int delta = 1; delta < 4096; ++delta) {
      for (int sgn : {-1, 1}) {
        const int id = base + sgn * delta;
        if (id < 0 || id >= static_cast<int>(nodes_.size())) continue;
        if ((nodes_[id] - p).norm() < 4 * spacing_ && segment_free(p, nodes_[id])) return id;
      }
    }
    return -1;
  };
  const int s = attach(start);
  const int g = attach(goal);
  if (s < 0 || g < 0) return std::nullopt;

  std::vector<double> dist(nodes_.size(), std::numeric_limits<double>::infinity());
  std::vector<int> prev(nodes_.size(), -1);
  using QE = std::pair<double, int>;
  std::priority_queue<QE, std::vector<QE>, std::greater<QE>> pq;
  dist[s] = 0;
  pq.emplace(0.0, s);
  while (!pq.empty()) {
    auto [d, u] = pq.top();
    pq.pop();
    if (u == g) break;
    if (d > dist[u] + 1e-12) continue;
    for (auto [v, w] : adj_[u]) {
      if (d + w < dist[v] - 1e-12) {
        dist[v] = d + w;
        prev[v] = u;
        pq.emplace(dist[v], v);
      }
    }
  }
  if (!std::isfinite(dist[g])) return std::nullopt;

  std::vector<Vec3> pts;
  pts.push_back(goal);
  for (int u = g; u >= 0; u = prev[u]) pts.push_back(nodes_[u]);
  pts.push_back(start);
  std::reverse(pts.begin(), pts.end());

  // Greedy shortcut: keep the farthest directly reachable waypoint.
  std::vector<Vec3> out;
  size_t i = 0;
  out.push_back(pts[0]);
  while (i + 1 < pts.size()) {
    size_t j = pts.size() - 1;
    for (; j > i + 1; --j)
      if (segment_free(pts[i], pts[j])) break;
    out.push_back(pts[j]);
    i = j;
  }
  return out;
}

TrajectoryPlan plan_to_waypoint(const FlightLattice& lattice, const PoseSE3& start,
                                const PoseSE3& goal, const FlightParams& params) {
  TrajectoryPlan plan;
  plan.start_pose = start;
  plan.goal_pose = goal;
  plan.scan_pitch_amp = params.scan_pitch_amp;

  auto route = lattice.route(start.position, goal.position);
  if (!route) throw runtime_error_("plan_to_waypoint: goal unreachable");
  plan.route = *route;

  // Yaw turns toward the goal heading across the whole transit; each leg gets
  // its share in proportion to time.
  const double yaw0 = start.yaw;
  const double yaw_delta = wrap_angle(goal.yaw - start.yaw);

  std::vector<double> leg_time;
  double total = 0;
  for (size_t i = 1; i < plan.route.size(); ++i) {
    const double d = (plan.route[i] - plan.route[i - 1]).norm();
    const double T = std::max(0.25, kRestToRestPeak * d / params.v_max);
    leg_time.push_back(T);
    total += T;
  }
  double t_accum = 0;
  for (size_t i = 1; i < plan.route.size(); ++i) {
    const double T = leg_time[i - 1];
    std::array<AxisBC, 4> bc0{}, bc1{};
    for (int a = 0; a < 3; ++a) {
      bc0[a].pos = plan.route[i - 1][a];
      bc1[a].pos = plan.route[i][a];
    }
    bc0[3].pos = yaw0 + yaw_delta * (t_accum / std::max(total, 1e-9));
    bc1[3].pos = yaw0 + yaw_delta * ((t_accum + T) / std::max(total, 1e-9));
    plan.segments.push_back(min_snap_segment(bc0, bc1, T));
    t_accum += T;
  }
  plan.transit_time = total;
  // The scan occupies a configured fraction of the control steps, i.e. of
  // total plan time.
  const double f = std::clamp(params.scan_fraction, 0.05, 0.95);
  plan.scan_time = plan.transit_time > 0 ? plan.transit_time * f / (1.0 - f)
                                         : params.min_scan_time;
  plan.scan_time = std::max(plan.scan_time, 1e-3);
  return plan;
}

std::vector<PoseSE3> sample_plan(const TrajectoryPlan& plan, int n_steps) {
  if (n_steps < 1) throw invalid_error("sample_plan: n_steps must be >= 1");
  std::vector<PoseSE3> out;
  out.reserve(n_steps);
  const double T = plan.total_time();
  const double pitch0 = plan.start_pose.pitch;
  const double pitch1 = plan.goal_pose.pitch;
  for (int k = 0; k < n_steps; ++k) {
    const double t = T * static_cast<double>(k + 1) / n_steps;
    PoseSE3 pose;
    if (t <= plan.transit_time && !plan.segments.empty()) {
      double rem = t;
      size_t si = 0;
      while (si + 1 < plan.segments.size() && rem > plan.segments[si].duration) {
        rem -= plan.segments[si].duration;
        ++si;
      }
      rem = std::min(rem, plan.segments[si].duration);
      const Poly7Segment& seg = plan.segments[si];
      pose.position = Vec3(seg.eval(0, rem), seg.eval(1, rem), seg.eval(2, rem));
      pose.yaw = wrap_angle(seg.eval(3, rem));
      pose.pitch = pitch0 + (pitch1 - pitch0) * (t / std::max(plan.transit_time, 1e-9));
    } else {
      // Terminal scan: hover at the goal, sweep a full revolution, one
      // sinusoidal pitch dip/rise.
      const double u = plan.scan_time > 0
                           ? std::clamp((t - plan.transit_time) / plan.scan_time, 0.0, 1.0)
                           : 1.0;
      pose.position = plan.route.empty() ? plan.start_pose.position : plan.route.back();
      pose.yaw = wrap_angle(plan.goal_pose.yaw + kTwoPi * u);
      pose.pitch = pitch1 + plan.scan_pitch_amp * std::sin(kTwoPi * u);
    }
    out.push_back(pose);
  }
  return out;
}

}  // namespace scoutsim
