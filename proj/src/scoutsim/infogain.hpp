#pragma once

#include <span>
#include <vector>

#include "scoutsim/beliefs.hpp"
#include "scoutsim/citymap.hpp"
#include "scoutsim/common.hpp"
#include "scoutsim/raysim.hpp"
#include "scoutsim/scenefield.hpp"

namespace scoutsim {

struct ObjectiveWeights {
  double lambda_target = 10.0;
  double lambda_rgb = 1.0;
  double lambda_depth = 1.0;
  double lambda_occ = 1.0;
};

/// All information quantities are in nats.
double entropy_bernoulli(double p);

/// I(Y; theta) for the cell-revealing detection channel: a visible target is
/// detected with probability p_d and the detection identifies its cell;
/// hidden targets are never detected.
double detection_mi(const GridFilter& filter, const std::vector<uint8_t>& visible_mask,
                    double p_d);

/// Moment-matched Gaussian-mixture information of a K-member ensemble:
/// 0.5*ln(mean(vars) + var(means)) - mean(0.5*ln var_k), floored at zero.
double gaussian_ensemble_mi(std::span<const double> means, std::span<const double> vars);

/// Jensen-Shannon form over member escape probabilities:
/// H(mean p) - mean H(p_k). Bounded by ln 2.
double occupancy_mi(std::span<const double> escape_probs);

enum class ScoreMode { FiltersOnly, WithField };

struct CandidateScore {
  PoseSE3 pose;
  double i_rgb = 0, i_depth = 0, i_occ = 0, i_detect = 0;
  double total = 0;
};

struct ScoringContext {
  ScoreMode mode = ScoreMode::FiltersOnly;
  const CityMap* map = nullptr;          // ground-truth visibility (FiltersOnly)
  const GroundGraph* graph = nullptr;    // lattice the filters live on
  const FieldEnsemble* field = nullptr;  // learned visibility + scene terms (WithField)
  CameraModel cam;
  int mi_width = 32, mi_height = 32;  // scene terms are per-pixel means, so a
                                      // subsampled image estimates the same value
  double p_detect = 0.95;
  FieldVisibilityParams visibility;
  ObjectiveWeights weights;
};

/// Node visibility from a candidate pose under the context's mode.
std::vector<uint8_t> candidate_visibility(const PoseSE3& pose, const ScoringContext& ctx);

/// Eq.-style decomposition: scene terms (rgb/depth/occupancy, averaged per
/// pixel) plus lambda-weighted detection terms summed over filters.
CandidateScore score_candidate(const PoseSE3& pose, const std::vector<GridFilter>& filters,
                               const ScoringContext& ctx);

/// Greedy baseline score: expected number of detections, i.e. p_d times the
/// visible posterior mass summed over filters.
double map_expected_detections(const PoseSE3& pose, const std::vector<GridFilter>& filters,
                               const ScoringContext& ctx);

}  // namespace scoutsim
