#include "scoutsim/citymap.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <queue>
#include <sstream>

#include "json.hpp"

namespace scoutsim {

namespace {

constexpr double kGeomEps = 1e-9;

double cross2(const Vec2& o, const Vec2& a, const Vec2& b) {
  return (a.x() - o.x()) * (b.y() - o.y()) - (a.y() - o.y()) * (b.x() - o.x());
}

bool on_segment(const Vec2& a, const Vec2& b, const Vec2& p) {
  if (std::abs(cross2(a, b, p)) > kGeomEps * (1.0 + (b - a).norm())) return false;
  return p.x() >= std::min(a.x(), b.x()) - kGeomEps && p.x() <= std::max(a.x(), b.x()) + kGeomEps &&
         p.y() >= std::min(a.y(), b.y()) - kGeomEps && p.y() <= std::max(a.y(), b.y()) + kGeomEps;
}

int line_number_at(const std::string& text, size_t byte) {
  int line = 1;
  for (size_t i = 0; i < byte && i < text.size(); ++i)
    if (text[i] == '\n') ++line;
  return line;
}

}  // namespace

bool point_in_polygon(const Polygon& poly, const Vec2& p) {
  const size_t n = poly.size();
  bool inside = false;
  for (size_t i = 0, j = n - 1; i < n; j = i++) {
    if (on_segment(poly[j], poly[i], p)) return true;  // boundary counts as inside
    const bool crosses = (poly[i].y() > p.y()) != (poly[j].y() > p.y());
    if (crosses) {
      const double t = (p.y() - poly[i].y()) / (poly[j].y() - poly[i].y());
      const double x = poly[i].x() + t * (poly[j].x() - poly[i].x());
      if (p.x() < x) inside = !inside;
    }
  }
  return inside;
}

bool segments_intersect(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& d) {
  const double d1 = cross2(c, d, a);
  const double d2 = cross2(c, d, b);
  const double d3 = cross2(a, b, c);
  const double d4 = cross2(a, b, d);
  if (((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) && ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0)))
    return true;
  // Touching or collinear overlap.
  return on_segment(c, d, a) || on_segment(c, d, b) || on_segment(a, b, c) || on_segment(a, b, d);
}

bool segment_intersects_polygon(const Polygon& poly, const Vec2& a, const Vec2& b) {
  if (point_in_polygon(poly, a) || point_in_polygon(poly, b)) return true;
  const size_t n = poly.size();
  for (size_t i = 0, j = n - 1; i < n; j = i++)
    if (segments_intersect(a, b, poly[j], poly[i])) return true;
  return false;
}

bool polygon_is_simple(const Polygon& poly) {
  const size_t n = poly.size();
  if (n < 3) return false;
  double area2 = 0;
  for (size_t i = 0, j = n - 1; i < n; j = i++)
    area2 += poly[j].x() * poly[i].y() - poly[i].x() * poly[j].y();
  if (std::abs(area2) < kGeomEps) return false;
  for (size_t i = 0; i < n; ++i) {
    const Vec2& a = poly[i];
    const Vec2& b = poly[(i + 1) % n];
    if ((b - a).norm() < kGeomEps) return false;  // degenerate edge
    for (size_t j = i + 1; j < n; ++j) {
      const Vec2& c = poly[j];
      const Vec2& d = poly[(j + 1) % n];
      const bool adjacent = (j == i + 1) || (i == 0 && j == n - 1);
      if (adjacent) {
        // Shared endpoint is fine; collinear overlap beyond it is not.
        const Vec2& shared = (j == i + 1) ? b : a;
        const Vec2& pa = (j == i + 1) ? a : b;
        const Vec2& pb = (j == i + 1) ? d : c;
        if (std::abs(cross2(shared, pa, pb)) < kGeomEps &&
            (pa - shared).dot(pb - shared) > kGeomEps)
          return false;
        continue;
      }
      if (segments_intersect(a, b, c, d)) return false;
    }
  }
  return true;
}

void CityMap::validate() const {
  if (bounds.width() <= 0 || bounds.height() <= 0)
    throw config_error("map bounds must have positive extent");
  if (altitude_cap <= 0) throw config_error("altitude_cap must be > 0");
  for (size_t i = 0; i < buildings.size(); ++i) {
    const Building& b = buildings[i];
    std::string tag = "building " + std::to_string(i);
    if (b.footprint.size() < 3)
      throw config_error(tag + ": polygon needs at least 3 vertices");
    if (!polygon_is_simple(b.footprint))
      throw config_error(tag + ": polygon is degenerate or self-intersecting");
    if (b.height <= 0) throw config_error(tag + ": height must be > 0");
    for (const Vec2& v : b.footprint)
      if (!bounds.contains(v)) throw config_error(tag + ": vertex outside bounds");
  }
}

CityMap parse_map(const std::string& text, const std::string& origin_name) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw config_error(origin_name + ":" + std::to_string(line_number_at(text, e.byte)) +
                       ": map parse error: " + e.what());
  }
  CityMap map;
  try {
    const auto& b = j.at("bounds");
    map.bounds = Rect{b.at(0).get<double>(), b.at(1).get<double>(), b.at(2).get<double>(),
                      b.at(3).get<double>()};
    map.altitude_cap = j.at("altitude_cap").get<double>();
    for (const auto& jb : j.at("buildings")) {
      Building bld;
      bld.height = jb.at("height").get<double>();
      for (const auto& v : jb.at("polygon"))
        bld.footprint.emplace_back(v.at(0).get<double>(), v.at(1).get<double>());
      map.buildings.push_back(std::move(bld));
    }
  } catch (const nlohmann::json::exception& e) {
    throw config_error(origin_name + ": malformed map file: " + e.what());
  }
  map.validate();
  return map;
}

CityMap load_map(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open map file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_map(ss.str(), path);
}

void save_map(const CityMap& map, const std::string& path) {
  nlohmann::json j;
  j["bounds"] = {map.bounds.xmin, map.bounds.ymin, map.bounds.xmax, map.bounds.ymax};
  j["altitude_cap"] = map.altitude_cap;
  j["buildings"] = nlohmann::json::array();
  for (const Building& b : map.buildings) {
    nlohmann::json jb;
    jb["height"] = b.height;
    jb["polygon"] = nlohmann::json::array();
    for (const Vec2& v : b.footprint) jb["polygon"].push_back({v.x(), v.y()});
    j["buildings"].push_back(std::move(jb));
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw io_error("cannot write map file: " + path);
  out << j.dump(2) << "\n";
}

bool point_in_building(const CityMap& map, const Vec2& p) {
  for (const Building& b : map.buildings)
    if (point_in_polygon(b.footprint, p)) return true;
  return false;
}

bool point_in_prism(const CityMap& map, const Vec3& p) {
  for (const Building& b : map.buildings)
    if (p.z() <= b.height && point_in_polygon(b.footprint, Vec2(p.x(), p.y()))) return true;
  return false;
}

bool segment_hits_building(const CityMap& map, const Vec3& a, const Vec3& b) {
  // Open segment: shave the endpoints so poses touching a wall do not
  // self-occlude.
  constexpr double kShave = 1e-9;
  const Vec3 d = b - a;
  for (const Building& bd : map.buildings) {
    double t0 = kShave, t1 = 1.0 - kShave;
    const double dz = d.z();
    if (std::abs(dz) < 1e-15) {
      if (a.z() > bd.height || a.z() < 0) continue;
    } else {
      // Clip to the prism's z slab [0, height].
      double ta = (0.0 - a.z()) / dz;
      double tb = (bd.height - a.z()) / dz;
      if (ta > tb) std::swap(ta, tb);
      t0 = std::max(t0, ta);
      t1 = std::min(t1, tb);
      if (t0 > t1) continue;
    }
    const Vec2 p0(a.x() + t0 * d.x(), a.y() + t0 * d.y());
    const Vec2 p1(a.x() + t1 * d.x(), a.y() + t1 * d.y());
    if (segment_intersects_polygon(bd.footprint, p0, p1)) return true;
  }
  return false;
}

GroundGraph build_ground_graph(const CityMap& map, double spacing, bool eight_connected) {
  if (spacing <= 0) throw invalid_error("graph spacing must be > 0");
  GroundGraph g;
  g.spacing = spacing;
  g.bounds = map.bounds;
  g.nx = static_cast<int>(std::floor(map.bounds.width() / spacing + 1e-9)) + 1;
  g.ny = static_cast<int>(std::floor(map.bounds.height() / spacing + 1e-9)) + 1;
  g.grid.assign(static_cast<size_t>(g.nx) * g.ny, -1);
  for (int iy = 0; iy < g.ny; ++iy) {
    for (int ix = 0; ix < g.nx; ++ix) {
      const Vec2 p(map.bounds.xmin + ix * spacing, map.bounds.ymin + iy * spacing);
      if (point_in_building(map, p)) continue;
      g.grid[static_cast<size_t>(iy) * g.nx + ix] = static_cast<int>(g.nodes.size());
      g.nodes.push_back(p);
      g.lattice.emplace_back(ix, iy);
    }
  }
  g.adj.resize(g.nodes.size());
  const int dx8[] = {1, 0, -1, 0, 1, 1, -1, -1};
  const int dy8[] = {0, 1, 0, -1, 1, -1, 1, -1};
  const int ndirs = eight_connected ? 8 : 4;
  for (size_t id = 0; id < g.nodes.size(); ++id) {
    const auto [ix, iy] = g.lattice[id];
    for (int k = 0; k < ndirs; ++k) {
      const int nid = g.id_at(ix + dx8[k], iy + dy8[k]);
      if (nid < 0) continue;
      // Reject edges whose full connecting segment clips a footprint
      // (diagonals may otherwise cut a corner through a wall).
      bool blocked = false;
      for (const Building& b : map.buildings)
        if (segment_intersects_polygon(b.footprint, g.nodes[id], g.nodes[nid])) {
          blocked = true;
          break;
        }
      if (!blocked) g.adj[id].emplace_back(nid, (g.nodes[nid] - g.nodes[id]).norm());
    }
  }
  return g;
}

int GroundGraph::nearest_node(const Vec2& p) const {
  if (nodes.empty()) return -1;
  const int cx = static_cast<int>(std::lround((p.x() - bounds.xmin) / spacing));
  const int cy = static_cast<int>(std::lround((p.y() - bounds.ymin) / spacing));
  const int rmax = std::max(nx, ny);
  for (int r = 0; r <= rmax; ++r) {
    int best = -1;
    double best_d = std::numeric_limits<double>::infinity();
    for (int iy = cy - r; iy <= cy + r; ++iy) {
      for (int ix = cx - r; ix <= cx + r; ++ix) {
        if (std::max(std::abs(ix - cx), std::abs(iy - cy)) != r) continue;  // ring only
        const int id = id_at(ix, iy);
        if (id < 0) continue;
        const double d = (nodes[id] - p).squaredNorm();
        if (d < best_d - 1e-12 || (std::abs(d - best_d) <= 1e-12 && id < best)) {
          best_d = d;
          best = id;
        }
      }
    }
    if (best >= 0) return best;
  }
  return -1;
}

std::optional<std::vector<int>> shortest_path(const GroundGraph& graph, int src, int dst) {
  const int n = static_cast<int>(graph.size());
  if (src < 0 || dst < 0 || src >= n || dst >= n) throw invalid_error("invalid node id");
  if (src == dst) return std::vector<int>{src};

  // Distances to dst, then a greedy forward walk that always takes the
  // smallest node id still on a shortest path. That yields the
  // lexicographically smallest minimal-cost node sequence.
  std::vector<double> dist(n, std::numeric_limits<double>::infinity());
  using QE = std::pair<double, int>;
  std::priority_queue<QE, std::vector<QE>, std::greater<QE>> pq;
  dist[dst] = 0;
  pq.emplace(0.0, dst);
  while (!pq.empty()) {
    auto [d, u] = pq.top();
    pq.pop();
    if (d > dist[u] + 1e-12) continue;
    for (auto [v, w] : graph.adj[u]) {
      if (d + w < dist[v] - 1e-12) {
        dist[v] = d + w;
        pq.emplace(dist[v], v);
      }
    }
  }
  if (!std::isfinite(dist[src])) return std::nullopt;

  std::vector<int> path{src};
  int u = src;
  const double tol = 1e-9 * (1.0 + dist[src]);
  while (u != dst) {
    int next = -1;
    for (auto [v, w] : graph.adj[u]) {
      if (std::abs(w + dist[v] - dist[u]) <= tol && (next < 0 || v < next)) next = v;
    }
    if (next < 0) return std::nullopt;  // numerically inconsistent; treat as unreachable
    path.push_back(next);
    u = next;
  }
  return path;
}

double path_length(const GroundGraph& graph, const std::vector<int>& path) {
  double len = 0;
  for (size_t i = 1; i < path.size(); ++i)
    len += (graph.nodes[path[i]] - graph.nodes[path[i - 1]]).norm();
  return len;
}

PoseSE3 sample_free_pose(const CityMap& map, Rng& rng, const FreePoseParams& params) {
  if (params.z_min <= 0 || params.z_max > map.altitude_cap || params.z_min > params.z_max)
    throw invalid_error("z_range must lie within (0, altitude_cap]");
  for (int it = 0; it < params.max_iters; ++it) {
    PoseSE3 pose;
    const double x = rng.uniform(map.bounds.xmin, map.bounds.xmax);
    const double y = rng.uniform(map.bounds.ymin, map.bounds.ymax);
    const double z = rng.uniform(params.z_min, params.z_max);
    pose.yaw = rng.uniform(0.0, kTwoPi);
    pose.pitch = rng.uniform(params.pitch_min, params.pitch_max);
    pose.position = Vec3(x, y, z);
    bool rejected = false;
    for (const Building& b : map.buildings) {
      if (z < b.height && point_in_polygon(b.footprint, Vec2(x, y))) {
        rejected = true;
        break;
      }
    }
    if (!rejected) return pose;
  }
  throw runtime_error_("sample_free_pose: iteration cap reached (map nearly full)");
}

}  // namespace scoutsim
