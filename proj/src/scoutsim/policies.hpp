#pragma once

#include <functional>
#include <vector>

#include "scoutsim/beliefs.hpp"
#include "scoutsim/citymap.hpp"
#include "scoutsim/flight.hpp"
#include "scoutsim/infogain.hpp"
#include "scoutsim/rng.hpp"

namespace scoutsim {

enum class ScoutPolicy { GtMapMap, GtMapMi, NerfMi };
enum class SelectionMode { Argmax, Multinomial };
enum class TargetPolicyKind { Stationary, Active, Goal };

struct CandidateParams {
  int n_distributions = 10;
  int n_particles = 10;
  double jitter_sigma = 15.0;  // meters
  double z_min = 10.0, z_max = 100.0;
  double pitch_min = -1.396263401595464;   // -80 deg
  double pitch_max = -0.08726646259971647; // -5 deg
  double center_radius = 0.0;  // >0: centers sampled within this radius of the scout
  int max_tries = 10000;
};

struct CandidateDistribution {
  Vec3 center;
  std::vector<PoseSE3> particles;
  std::vector<double> scores;
  double mean_score = 0;
};

struct CandidateSet {
  std::vector<CandidateDistribution> dists;
};

using FreeSpaceFn = std::function<bool(const Vec3&)>;

/// 10 distributions x 10 particles by default. Centers are free-space
/// samples; particles add Gaussian positional jitter (resampled until free)
/// with uniform yaw and pitch. Draw order per attempt: x, y, z (center) and
/// dx, dy, dz, yaw, pitch (particle).
CandidateSet propose_candidates(const Rect& bounds, const Vec3& scout_pos,
                                const FreeSpaceFn& free, Rng& rng, const CandidateParams& params);

/// Fills per-particle scores, then picks a waypoint. Multinomial mode samples
/// a distribution proportionally to max(mean score, 0) (uniform fallback when
/// every mean is <= 0) and returns its best particle; argmax mode returns the
/// globally best particle. Ties break toward the lowest index.
PoseSE3 select_waypoint(CandidateSet& set, const std::function<double(const PoseSE3&)>& score_fn,
                        Rng& rng, SelectionMode mode);

/// Ground nodes the scout has observed; active targets avoid these. Cleared
/// at positive multiples of reset_period (in planning steps).
struct SeenBuffer {
  std::vector<uint8_t> seen;
  int reset_period = 10;

  SeenBuffer() = default;
  SeenBuffer(size_t n_nodes, int period) : seen(n_nodes, 0), reset_period(period) {}
  void observe(const std::vector<uint8_t>& mask) {
    for (size_t i = 0; i < seen.size() && i < mask.size(); ++i) seen[i] |= mask[i];
  }
  void reset_if_due(int planning_step) {
    if (reset_period > 0 && planning_step > 0 && planning_step % reset_period == 0)
      std::fill(seen.begin(), seen.end(), 0);
  }
  size_t count() const {
    size_t c = 0;
    for (uint8_t v : seen) c += v ? 1 : 0;
    return c;
  }
};

struct TargetState {
  int id = 0;
  int node = -1;  // current node on the ground-truth free graph
  TargetPolicyKind policy = TargetPolicyKind::Stationary;
  std::vector<int> path;  // remaining nodes ahead (path[0] is the next hop)
  int goal = -1;
  double budget_m = 100.0;  // movement per planning step; <= 0 means unlimited
};

void target_step_stationary(TargetState& state);

/// Picks a uniformly random unseen reachable node and walks its shortest path
/// within the movement budget; stands still when every node has been seen.
void target_step_active(TargetState& state, const SeenBuffer& seen, const GroundGraph& graph,
                        Rng& rng);

/// Random free-space goals, at most budget_m per planning step.
void target_step_goal(TargetState& state, const GroundGraph& graph, Rng& rng);

/// World wiring for one scout decision.
struct ScoutWorld {
  const CityMap* map = nullptr;
  const GroundGraph* filter_graph = nullptr;
  const FlightLattice* lattice = nullptr;
  const FieldEnsemble* field = nullptr;  // NerfMi only
  ScoringContext scoring;
  CandidateParams candidates;
  FlightParams flight;
  SelectionMode selection = SelectionMode::Multinomial;
};

struct ScoutDecision {
  PoseSE3 chosen;
  CandidateScore chosen_score;
  TrajectoryPlan plan;
  CandidateSet candidates;
};

/// propose -> score -> select -> route + min-snap plan ending in the terminal
/// scan. MAP scores by expected detections; MI by the full objective.
ScoutDecision scout_step(ScoutPolicy kind, const PoseSE3& current,
                         const std::vector<GridFilter>& filters, const ScoutWorld& world,
                         Rng& rng_propose, Rng& rng_select);

}  // namespace scoutsim
