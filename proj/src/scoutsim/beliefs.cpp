#include "scoutsim/beliefs.hpp"

#include <algorithm>
#include <cmath>

namespace scoutsim {

double GridFilter::sum() const {
  double s = 0;
  for (double v : w) s += v;
  return s;
}

void GridFilter::normalize() {
  const double s = sum();
  if (s <= 0) throw runtime_error_("filter lost all probability mass");
  const double inv = 1.0 / s;
  for (double& v : w) v *= inv;
}

MotionKernel MotionKernel::corner_escape(int radius, double center, double corner) {
  MotionKernel k;
  k.radius = radius;
  const int n = 2 * radius + 1;
  k.k.assign(static_cast<size_t>(n) * n, 0.0);
  k.k[(radius)*n + radius] = center;
  const double rest = 1.0 - center - 4.0 * corner;
  // Whatever is left over of the center/corner mass spreads evenly over the
  // remaining taps so the stencil always sums to one.
  const double fill = rest / (n * n - 5);
  for (int dy = -radius; dy <= radius; ++dy)
    for (int dx = -radius; dx <= radius; ++dx) {
      if (dx == 0 && dy == 0) continue;
      const bool is_corner = std::abs(dx) == radius && std::abs(dy) == radius;
      k.k[(dy + radius) * n + (dx + radius)] = is_corner ? corner + fill : fill;
    }
  k.validate();
  return k;
}

MotionKernel MotionKernel::identity() {
  MotionKernel k;
  k.radius = 0;
  k.k = {1.0};
  return k;
}

void MotionKernel::validate() const {
  const int n = 2 * radius + 1;
  if (static_cast<int>(k.size()) != n * n) throw invalid_error("kernel size mismatch");
  double s = 0;
  for (double v : k) {
    if (v < 0) throw invalid_error("kernel entries must be nonnegative");
    s += v;
  }
  if (std::abs(s - 1.0) > 1e-9) throw invalid_error("kernel must sum to 1");
  for (int sx : {-1, 1})
    for (int sy : {-1, 1})
      if (std::abs(at(sx * radius, sy * radius) - at(radius, radius)) > 1e-12)
        throw invalid_error("kernel corners must be symmetric");
}

GridFilter init_uniform(const GroundGraph& graph) {
  if (graph.size() == 0) throw invalid_error("init_uniform: empty graph");
  GridFilter f;
  f.w.assign(graph.size(), 1.0 / static_cast<double>(graph.size()));
  return f;
}

void predict(GridFilter& filter, const MotionKernel& kernel, const GroundGraph& graph) {
  kernel.validate();
  std::vector<double> out(filter.w.size(), 0.0);
  const int r = kernel.radius;
  for (size_t id = 0; id < filter.w.size(); ++id) {
    const double wi = filter.w[id];
    if (wi == 0.0) continue;
    const auto [ix, iy] = graph.lattice[id];
    for (int dy = -r; dy <= r; ++dy) {
      for (int dx = -r; dx <= r; ++dx) {
        const double kk = kernel.at(dx, dy);
        if (kk == 0.0) continue;
        const int nid = graph.id_at(ix + dx, iy + dy);
        out[nid >= 0 ? nid : id] += wi * kk;  // reflect blocked mass back
      }
    }
  }
  filter.w = std::move(out);
  filter.normalize();
}

void update_detection(GridFilter& filter, const Vec2& ground_point, const GroundGraph& graph) {
  const int center = graph.nearest_node(ground_point);
  if (center < 0) throw invalid_error("update_detection: empty graph");
  const auto [cx, cy] = graph.lattice[center];
  const double cell = graph.spacing;

  std::vector<std::pair<int, double>> bump;
  for (int dy = -3; dy <= 3; ++dy) {
    for (int dx = -3; dx <= 3; ++dx) {
      const int id = graph.id_at(cx + dx, cy + dy);
      if (id < 0) continue;
      const double d2 = (graph.nodes[id] - graph.nodes[center]).squaredNorm();
      if (d2 > 9.0 * cell * cell + 1e-9) continue;
      bump.emplace_back(id, std::exp(-0.5 * d2 / (cell * cell)));
    }
  }

  double z = 0;
  for (const auto& [id, l] : bump) z += filter.w[id] * l;
  if (z > 0) {
    std::vector<double> out(filter.w.size(), 0.0);
    for (const auto& [id, l] : bump) out[id] = filter.w[id] * l;
    filter.w = std::move(out);
    filter.normalize();
  } else {
    // Model mismatch: the prior had no mass where the detection landed.
    std::fill(filter.w.begin(), filter.w.end(), 0.0);
    for (const auto& [id, l] : bump) filter.w[id] = l;
    filter.normalize();
  }
}

void update_no_detection(GridFilter& filter, const std::vector<uint8_t>& visible_mask,
                         double p_d) {
  if (visible_mask.size() != filter.w.size())
    throw invalid_error("update_no_detection: mask size mismatch");
  double z = 0;
  for (size_t i = 0; i < filter.w.size(); ++i) {
    if (visible_mask[i]) filter.w[i] *= (1.0 - p_d);
    z += filter.w[i];
  }
  if (z > 0) {
    const double inv = 1.0 / z;
    for (double& v : filter.w) v *= inv;
    return;
  }
  // Everything was visible with p_d = 1: restart over the hidden set, or
  // uniformly when nothing is hidden.
  size_t hidden = 0;
  for (uint8_t m : visible_mask)
    if (!m) ++hidden;
  if (hidden > 0) {
    for (size_t i = 0; i < filter.w.size(); ++i)
      filter.w[i] = visible_mask[i] ? 0.0 : 1.0 / static_cast<double>(hidden);
  } else {
    std::fill(filter.w.begin(), filter.w.end(), 1.0 / static_cast<double>(filter.w.size()));
  }
}

Vec2 estimate(const GridFilter& filter, const GroundGraph& graph) {
  Vec2 mean(0, 0);
  for (size_t i = 0; i < filter.w.size(); ++i) mean += filter.w[i] * graph.nodes[i];
  return mean;
}

FilterBank::FilterBank(const GroundGraph& graph) { filters_.push_back(init_uniform(graph)); }

const GridFilter* FilterBank::filter_for(int target_id) const {
  for (const GridFilter& f : filters_)
    if (f.target_id == target_id) return &f;
  return nullptr;
}

void FilterBank::observe(const std::vector<Detection>& detections, const GroundGraph& graph) {
  for (const Detection& det : detections) {
    GridFilter* match = nullptr;
    for (GridFilter& f : filters_)
      if (f.target_id == det.target_id) {
        match = &f;
        break;
      }
    if (match) {
      update_detection(*match, det.ground_point, graph);
      continue;
    }
    // New target: assign the spare and create a fresh one.
    GridFilter& spare = filters_.back();
    spare.target_id = det.target_id;
    update_detection(spare, det.ground_point, graph);
    filters_.push_back(init_uniform(graph));
  }
}

void FilterBank::predict_all(const MotionKernel& kernel, const GroundGraph& graph) {
  for (GridFilter& f : filters_) predict(f, kernel, graph);
}

void FilterBank::no_detection_all(const std::vector<uint8_t>& visible_mask, double p_d) {
  for (GridFilter& f : filters_) update_no_detection(f, visible_mask, p_d);
}

}  // namespace scoutsim
