#pragma once

#include <cstdint>
#include <vector>

#include "scoutsim/citymap.hpp"
#include "scoutsim/common.hpp"
#include "scoutsim/raysim.hpp"

namespace scoutsim {

/// Posterior over one target's position as normalized weights on the ground
/// lattice of a GroundGraph. target_id < 0 marks the spare (unassigned)
/// filter.
struct GridFilter {
  std::vector<double> w;
  int target_id = -1;

  double sum() const;
  void normalize();
};

/// Corner-escape stencil (Fig.-style shape): most mass stays put, the rest
/// leaks toward the four diagonal corners. Values are tool defaults, exposed
/// through the config.
struct MotionKernel {
  int radius = 2;
  std::vector<double> k;  // (2r+1)^2, row-major over (dy, dx), sums to 1

  static MotionKernel corner_escape(int radius = 2, double center = 0.6, double corner = 0.1);
  static MotionKernel identity();
  double at(int dx, int dy) const { return k[(dy + radius) * (2 * radius + 1) + (dx + radius)]; }
  void validate() const;
};

GridFilter init_uniform(const GroundGraph& graph);

/// Lattice convolution with the kernel; mass that would land outside the
/// graph (bounds or building cells) stays at its source cell.
void predict(GridFilter& filter, const MotionKernel& kernel, const GroundGraph& graph);

/// Bayes update with a discrete Gaussian likelihood bump (std = 1 cell, zero
/// beyond 3 cells) centered on the node nearest the detection. A prior with
/// no mass under the bump is reinitialized to the bump (recovery rule).
void update_detection(GridFilter& filter, const Vec2& ground_point, const GroundGraph& graph);

/// Visible cells keep (1 - p_d) of their mass; hidden cells are untouched.
/// Degenerate all-visible, p_d = 1 posteriors reinitialize over the hidden
/// set, or uniformly when it is empty.
void update_no_detection(GridFilter& filter, const std::vector<uint8_t>& visible_mask,
                         double p_d = 0.95);

Vec2 estimate(const GridFilter& filter, const GroundGraph& graph);

/// One filter per discovered target plus exactly one spare with a uniform
/// prior. The spare participates in prediction/visibility updates so that an
/// undiscovered target keeps contributing exploration incentive.
class FilterBank {
 public:
  FilterBank() = default;
  explicit FilterBank(const GroundGraph& graph);

  const std::vector<GridFilter>& filters() const { return filters_; }
  std::vector<GridFilter>& filters_mut() { return filters_; }
  size_t size() const { return filters_.size(); }

  const GridFilter* filter_for(int target_id) const;

  /// Known ids update their filter; a new id claims the spare and a fresh
  /// uniform spare is created.
  void observe(const std::vector<Detection>& detections, const GroundGraph& graph);

  void predict_all(const MotionKernel& kernel, const GroundGraph& graph);
  void no_detection_all(const std::vector<uint8_t>& visible_mask, double p_d);

 private:
  std::vector<GridFilter> filters_;  // assigned filters in discovery order, spare last
};

}  // namespace scoutsim
