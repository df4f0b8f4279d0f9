#pragma once

#include <memory>
#include <string>
#include <vector>

#include "scoutsim/beliefs.hpp"
#include "scoutsim/config.hpp"
#include "scoutsim/metrics.hpp"
#include "scoutsim/policies.hpp"

namespace scoutsim {

/// One experiment episode: initialization scan, then planning_steps x
/// control_steps of plan / fly / observe / filter / (train). Deterministic
/// for a fixed (config, seed).
class Episode {
 public:
  explicit Episode(const EpisodeConfig& cfg);

  /// Runs to completion; writes CSVs/summary under out_dir unless empty.
  /// A partial log is flushed if a module error aborts the run.
  MetricsLog run(const std::string& out_dir);

  const CityMap& map() const { return map_; }
  const GroundGraph& ground_graph() const { return gt_graph_; }
  FieldEnsemble* field() { return field_.get(); }
  const FilterBank& bank() const { return bank_; }
  const std::vector<TargetState>& targets() const { return targets_; }

  /// Adopts an already trained field (offline pretraining path).
  void set_field(std::unique_ptr<FieldEnsemble> field);

 private:
  void tick(const PoseSE3& pose, int planning_step, const std::string& out_dir);
  void train_and_eval_psnr(PlanRecord* rec);
  double eval_psnr_recent() const;
  void step_targets(int planning_step);
  std::vector<uint8_t> filter_visibility(const PoseSE3& pose) const;

  EpisodeConfig cfg_;
  ScoutPolicy scout_kind_;
  TargetPolicyKind target_kind_;
  CityMap map_;
  GroundGraph gt_graph_;      // free-space lattice of the true map
  GroundGraph filter_graph_;  // full lattice when the map is unknown
  bool separate_filter_graph_ = false;
  std::unique_ptr<FlightLattice> lattice_;
  std::unique_ptr<FieldEnsemble> field_;
  FilterBank bank_;
  SeenBuffer seen_;
  std::vector<TargetState> targets_;
  PoseSE3 pose_;
  MetricsLog log_;
  MotionKernel kernel_;
  CameraModel cam_;
  ScoutWorld world_;

  Rng rng_detect_{0}, rng_boot_{0}, rng_train_{0}, rng_cand_{0}, rng_sel_{0}, rng_targets_{0},
      rng_scan_{0};
  int tick_index_ = 0;
};

MetricsLog run_episode(const EpisodeConfig& cfg, const std::string& out_dir);

/// Policy labels for sweeps: gtmap_map, gtmap_mi, nerf_mi, nerf_mi:2k,
/// nerf_mi:4k, nerf_mi:offline.
std::vector<std::string> run_sweep(const EpisodeConfig& base,
                                   const std::vector<std::string>& policies,
                                   const std::vector<uint64_t>& seeds,
                                   const std::string& out_root);

/// Aggregates episode directories into a summary table plus RMSE/PSNR curve
/// and trajectory images.
void emit_report(const std::vector<std::string>& episode_dirs, const std::string& out_dir);

void render_map_png(const CityMap& map, const std::string& path, int width_px);

/// Converts an Overpass-style OSM JSON export into the footprint map format.
void convert_osm(const std::string& osm_json_path, const std::string& out_map_path,
                 double origin_lat, double origin_lon, double altitude_cap,
                 double default_height = 15.0);

std::string make_run_dir(const std::string& root, const std::string& label);

}  // namespace scoutsim
