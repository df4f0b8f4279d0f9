#include "scoutsim/policies.hpp"

#include <algorithm>
#include <cmath>
#include <queue>

namespace scoutsim {

CandidateSet propose_candidates(const Rect& bounds, const Vec3& scout_pos,
                                const FreeSpaceFn& free, Rng& rng, const CandidateParams& params) {
  CandidateSet set;
  set.dists.resize(params.n_distributions);
  for (CandidateDistribution& dist : set.dists) {
    bool ok = false;
    for (int it = 0; it < params.max_tries; ++it) {
      const double x = rng.uniform(bounds.xmin, bounds.xmax);
      const double y = rng.uniform(bounds.ymin, bounds.ymax);
      const double z = rng.uniform(params.z_min, params.z_max);
      const Vec3 c(x, y, z);
      if (params.center_radius > 0 && (c - scout_pos).norm() > params.center_radius) continue;
      if (!free(c)) continue;
      dist.center = c;
      ok = true;
      break;
    }
    if (!ok) throw runtime_error_("propose_candidates: center sampling exhausted");

    dist.particles.reserve(params.n_particles);
    for (int p = 0; p < params.n_particles; ++p) {
      bool placed = false;
      for (int it = 0; it < params.max_tries; ++it) {
        Vec3 pos = dist.center + params.jitter_sigma * Vec3(rng.normal(), rng.normal(), rng.normal());
        pos.x() = std::clamp(pos.x(), bounds.xmin, bounds.xmax);
        pos.y() = std::clamp(pos.y(), bounds.ymin, bounds.ymax);
        pos.z() = std::clamp(pos.z(), params.z_min, params.z_max);
        const double yaw = rng.uniform(0.0, kTwoPi);
        const double pitch = rng.uniform(params.pitch_min, params.pitch_max);
        if (!free(pos)) continue;
        PoseSE3 pose;
        pose.position = pos;
        pose.yaw = yaw;
        pose.pitch = pitch;
        dist.particles.push_back(pose);
        placed = true;
        break;
      }
      if (!placed) throw runtime_error_("propose_candidates: particle sampling exhausted");
    }
    dist.scores.assign(dist.particles.size(), 0.0);
  }
  return set;
}

PoseSE3 select_waypoint(CandidateSet& set, const std::function<double(const PoseSE3&)>& score_fn,
                        Rng& rng, SelectionMode mode) {
  if (set.dists.empty()) throw invalid_error("select_waypoint: no candidates");
  for (CandidateDistribution& dist : set.dists) {
    double sum = 0;
    dist.scores.resize(dist.particles.size());
    for (size_t p = 0; p < dist.particles.size(); ++p) {
      dist.scores[p] = score_fn(dist.particles[p]);
      sum += dist.scores[p];
    }
    dist.mean_score = dist.particles.empty() ? 0.0 : sum / dist.particles.size();
  }

  size_t chosen_dist = 0;
  if (mode == SelectionMode::Argmax) {
    double best = -std::numeric_limits<double>::infinity();
    size_t best_p = 0;
    for (size_t d = 0; d < set.dists.size(); ++d) {
      for (size_t p = 0; p < set.dists[d].particles.size(); ++p) {
        if (set.dists[d].scores[p] > best) {
          best = set.dists[d].scores[p];
          chosen_dist = d;
          best_p = p;
        }
      }
    }
    return set.dists[chosen_dist].particles[best_p];
  }

  double total = 0;
  for (const CandidateDistribution& d : set.dists) total += std::max(d.mean_score, 0.0);
  const double u = rng.uniform();
  if (total <= 0) {
    chosen_dist = std::min(static_cast<size_t>(u * set.dists.size()), set.dists.size() - 1);
  } else {
    double acc = 0;
    const double cut = u * total;
    for (size_t d = 0; d < set.dists.size(); ++d) {
      acc += std::max(set.dists[d].mean_score, 0.0);
      chosen_dist = d;
      if (cut < acc) break;
    }
  }
  const CandidateDistribution& dist = set.dists[chosen_dist];
  size_t best_p = 0;
  for (size_t p = 1; p < dist.particles.size(); ++p)
    if (dist.scores[p] > dist.scores[best_p]) best_p = p;
  return dist.particles[best_p];
}

void target_step_stationary(TargetState&) {}

namespace {

std::vector<uint8_t> reachable_from(const GroundGraph& graph, int src) {
  std::vector<uint8_t> seen(graph.size(), 0);
  std::queue<int> q;
  q.push(src);
  seen[src] = 1;
  while (!q.empty()) {
    const int u = q.front();
    q.pop();
    for (auto [v, w] : graph.adj[u]) {
      if (!seen[v]) {
        seen[v] = 1;
        q.push(v);
      }
    }
  }
  return seen;
}

void advance_along_path(TargetState& state, const GroundGraph& graph) {
  double walked = 0;
  const double budget = state.budget_m <= 0 ? std::numeric_limits<double>::infinity()
                                            : state.budget_m;
  while (!state.path.empty()) {
    const int next = state.path.front();
    const double hop = (graph.nodes[next] - graph.nodes[state.node]).norm();
    if (walked + hop > budget + 1e-9) break;
    walked += hop;
    state.node = next;
    state.path.erase(state.path.begin());
  }
  if (state.path.empty()) state.goal = -1;
}

void pick_goal_and_path(TargetState& state, const GroundGraph& graph, Rng& rng,
                        const std::vector<uint8_t>* exclude_seen, const SeenBuffer* seen) {
  const std::vector<uint8_t> reach = reachable_from(graph, state.node);
  std::vector<int> options;
  options.reserve(graph.size());
  for (size_t j = 0; j < graph.size(); ++j) {
    if (!reach[j]) continue;
    if (static_cast<int>(j) == state.node) continue;
    if (exclude_seen && seen && (*exclude_seen)[j]) continue;
    options.push_back(static_cast<int>(j));
  }
  if (options.empty()) return;  // stand still until something opens up
  state.goal = options[rng.uniform_int(static_cast<uint32_t>(options.size()))];
  auto path = shortest_path(graph, state.node, state.goal);
  if (!path || path->size() < 2) {
    state.goal = -1;
    return;
  }
  state.path.assign(path->begin() + 1, path->end());
}

}  // namespace

void target_step_active(TargetState& state, const SeenBuffer& seen, const GroundGraph& graph,
                        Rng& rng) {
  if (state.node < 0) throw invalid_error("target has no node");
  if (state.path.empty()) pick_goal_and_path(state, graph, rng, &seen.seen, &seen);
  advance_along_path(state, graph);
}

void target_step_goal(TargetState& state, const GroundGraph& graph, Rng& rng) {
  if (state.node < 0) throw invalid_error("target has no node");
  if (state.path.empty()) pick_goal_and_path(state, graph, rng, nullptr, nullptr);
  advance_along_path(state, graph);
}

ScoutDecision scout_step(ScoutPolicy kind, const PoseSE3& current,
                         const std::vector<GridFilter>& filters, const ScoutWorld& world,
                         Rng& rng_propose, Rng& rng_select) {
  ScoutDecision out;

  FreeSpaceFn free;
  if (kind == ScoutPolicy::NerfMi) {
    const FieldEnsemble* field = world.field;
    const double thr = world.scoring.visibility.sigma_threshold > 0
                           ? world.scoring.visibility.sigma_threshold
                           : field->default_sigma_threshold();
    free = [field, thr](const Vec3& p) { return field->point_free(p, thr); };
  } else {
    const CityMap* map = world.map;
    free = [map](const Vec3& p) { return !point_in_prism(*map, p); };
  }

  out.candidates = propose_candidates(world.map->bounds, current.position, free, rng_propose,
                                      world.candidates);

  std::function<double(const PoseSE3&)> score_fn;
  if (kind == ScoutPolicy::GtMapMap) {
    score_fn = [&](const PoseSE3& pose) {
      return map_expected_detections(pose, filters, world.scoring);
    };
  } else {
    score_fn = [&](const PoseSE3& pose) {
      return score_candidate(pose, filters, world.scoring).total;
    };
  }

  // The MAP baseline is greedy by definition; stochastic selection applies
  // to the information objectives.
  const SelectionMode selection =
      kind == ScoutPolicy::GtMapMap ? SelectionMode::Argmax : world.selection;
  out.chosen = select_waypoint(out.candidates, score_fn, rng_select, selection);
  if (kind == ScoutPolicy::GtMapMap) {
    out.chosen_score = CandidateScore{};
    out.chosen_score.pose = out.chosen;
    out.chosen_score.total = map_expected_detections(out.chosen, filters, world.scoring);
  } else {
    out.chosen_score = score_candidate(out.chosen, filters, world.scoring);
  }

  try {
    out.plan = plan_to_waypoint(*world.lattice, current, out.chosen, world.flight);
  } catch (const Error&) {
    // Unreachable selection (possible when planning on a learned map):
    // degrade to a scan in place.
    PoseSE3 hold = out.chosen;
    hold.position = current.position;
    out.plan = plan_to_waypoint(*world.lattice, current, hold, world.flight);
    out.chosen = hold;
  }
  return out;
}

}  // namespace scoutsim
