#include "scoutsim/infogain.hpp"

#include <algorithm>
#include <cmath>

namespace scoutsim {

namespace {
constexpr double kVarFloor = 1e-6;

double xlnx(double x) { return x <= 0 ? 0.0 : x * std::log(x); }
}  // namespace

double entropy_bernoulli(double p) {
  if (p < 0.0 || p > 1.0) throw invalid_error("entropy_bernoulli: p outside [0,1]");
  return -xlnx(p) - xlnx(1.0 - p);
}

double detection_mi(const GridFilter& filter, const std::vector<uint8_t>& visible_mask,
                    double p_d) {
  if (visible_mask.size() != filter.w.size())
    throw invalid_error("detection_mi: mask size mismatch");
  // Outcome space: {detected at visible cell j} + {no detection}.
  double h_y = 0;
  double w_vis = 0;
  for (size_t j = 0; j < filter.w.size(); ++j) {
    if (!visible_mask[j] || filter.w[j] <= 0) continue;
    w_vis += filter.w[j];
    h_y -= xlnx(p_d * filter.w[j]);
  }
  if (w_vis <= 0) return 0.0;
  h_y -= xlnx(1.0 - p_d * w_vis);
  const double h_y_given_theta = w_vis * entropy_bernoulli(p_d);
  return std::max(0.0, h_y - h_y_given_theta);
}

double gaussian_ensemble_mi(std::span<const double> means, std::span<const double> vars) {
  const size_t k = means.size();
  if (k == 0 || vars.size() != k) throw invalid_error("gaussian_ensemble_mi: bad ensemble size");
  double mean_mu = 0, mean_var = 0, mean_logvar = 0;
  for (size_t i = 0; i < k; ++i) {
    const double v = std::max(vars[i], kVarFloor);
    mean_mu += means[i];
    mean_var += v;
    mean_logvar += 0.5 * std::log(v);
  }
  mean_mu /= k;
  mean_var /= k;
  mean_logvar /= k;
  double var_mu = 0;
  for (size_t i = 0; i < k; ++i) var_mu += (means[i] - mean_mu) * (means[i] - mean_mu);
  var_mu /= k;
  const double mix_var = mean_var + var_mu;
  return std::max(0.0, 0.5 * std::log(mix_var) - mean_logvar);
}

double occupancy_mi(std::span<const double> escape_probs) {
  const size_t k = escape_probs.size();
  if (k == 0) throw invalid_error("occupancy_mi: empty ensemble");
  double mean_p = 0, mean_h = 0;
  for (double p : escape_probs) {
    mean_p += p;
    mean_h += entropy_bernoulli(std::clamp(p, 0.0, 1.0));
  }
  mean_p /= k;
  mean_h /= k;
  return std::max(0.0, entropy_bernoulli(std::clamp(mean_p, 0.0, 1.0)) - mean_h);
}

std::vector<uint8_t> candidate_visibility(const PoseSE3& pose, const ScoringContext& ctx) {
  if (!ctx.graph) throw invalid_error("scoring context has no graph");
  if (ctx.mode == ScoreMode::FiltersOnly) {
    if (!ctx.map) throw invalid_error("FiltersOnly scoring needs the ground-truth map");
    return visible_cells_gt(*ctx.map, pose, ctx.cam, *ctx.graph);
  }
  if (!ctx.field) throw invalid_error("WithField scoring needs a field ensemble");
  std::vector<uint8_t> mask(ctx.graph->size(), 0);
  for (size_t j = 0; j < ctx.graph->size(); ++j) {
    const Vec3 p(ctx.graph->nodes[j].x(), ctx.graph->nodes[j].y(), 0.0);
    mask[j] = visible_from_field(*ctx.field, pose, ctx.cam, p, ctx.visibility);
  }
  return mask;
}

CandidateScore score_candidate(const PoseSE3& pose, const std::vector<GridFilter>& filters,
                               const ScoringContext& ctx) {
  CandidateScore score;
  score.pose = pose;

  const std::vector<uint8_t> mask = candidate_visibility(pose, ctx);
  for (const GridFilter& f : filters) score.i_detect += detection_mi(f, mask, ctx.p_detect);

  if (ctx.mode == ScoreMode::WithField) {
    const FieldEnsemble& field = *ctx.field;
    CameraModel cam = ctx.cam;
    cam.width = ctx.mi_width;
    cam.height = ctx.mi_height;
    const int quad = field.config().quadrature;
    const double near = field.config().near_clip;
    double sum_rgb = 0, sum_depth = 0, sum_occ = 0;
    const size_t n_px = static_cast<size_t>(cam.width) * cam.height;
    for (int v = 0; v < cam.height; ++v) {
      for (int u = 0; u < cam.width; ++u) {
        Vec3 o, d;
        pixel_ray(pose, cam, u, v, &o, &d);
        PixelSample px[FieldEnsemble::kMembers];
        for (int k = 0; k < FieldEnsemble::kMembers; ++k)
          px[k] = render_ray(field.member(k), o, d, quad, near, cam.max_range);
        double esc[FieldEnsemble::kMembers];
        for (int k = 0; k < FieldEnsemble::kMembers; ++k) esc[k] = px[k].escape;
        sum_occ += occupancy_mi(std::span<const double>(esc, FieldEnsemble::kMembers));
        double mi_rgb = 0;
        for (int ch = 0; ch < 3; ++ch) {
          double mu[FieldEnsemble::kMembers], var[FieldEnsemble::kMembers];
          for (int k = 0; k < FieldEnsemble::kMembers; ++k) {
            mu[k] = px[k].rgb[ch];
            var[k] = px[k].var_rgb[ch];
          }
          mi_rgb += gaussian_ensemble_mi(std::span<const double>(mu, FieldEnsemble::kMembers),
                                         std::span<const double>(var, FieldEnsemble::kMembers));
        }
        sum_rgb += mi_rgb / 3.0;
        double mu[FieldEnsemble::kMembers], var[FieldEnsemble::kMembers];
        for (int k = 0; k < FieldEnsemble::kMembers; ++k) {
          mu[k] = px[k].depth;
          var[k] = px[k].var_depth;
        }
        sum_depth += gaussian_ensemble_mi(std::span<const double>(mu, FieldEnsemble::kMembers),
                                          std::span<const double>(var, FieldEnsemble::kMembers));
      }
    }
    score.i_rgb = sum_rgb / static_cast<double>(n_px);
    score.i_depth = sum_depth / static_cast<double>(n_px);
    score.i_occ = sum_occ / static_cast<double>(n_px);
  }

  score.total = ctx.weights.lambda_rgb * score.i_rgb + ctx.weights.lambda_depth * score.i_depth +
                ctx.weights.lambda_occ * score.i_occ + ctx.weights.lambda_target * score.i_detect;
  return score;
}

double map_expected_detections(const PoseSE3& pose, const std::vector<GridFilter>& filters,
                               const ScoringContext& ctx) {
  const std::vector<uint8_t> mask = candidate_visibility(pose, ctx);
  double expected = 0;
  for (const GridFilter& f : filters) {
    double visible_mass = 0;
    for (size_t j = 0; j < f.w.size(); ++j)
      if (mask[j]) visible_mass += f.w[j];
    expected += ctx.p_detect * visible_mass;
  }
  return expected;
}

}  // namespace scoutsim
