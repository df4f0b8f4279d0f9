#pragma once

#include <cstdint>
#include <string>

#include "scoutsim/common.hpp"
#include "scoutsim/flight.hpp"
#include "scoutsim/infogain.hpp"
#include "scoutsim/policies.hpp"
#include "scoutsim/raysim.hpp"
#include "scoutsim/scenefield.hpp"

namespace scoutsim {

/// Everything a run needs; every field has a default so partial config files
/// are fine. Schema documented in docs/formats.md.
struct EpisodeConfig {
  std::string map_path = "maps/mini_philly.json";
  uint64_t seed = 72;
  std::string scout_policy = "gtmap_mi";     // gtmap_map | gtmap_mi | nerf_mi
  std::string target_policy = "stationary";  // stationary | active | goal
  int target_count = 20;
  int planning_steps = 40;
  int control_steps = 30;
  int init_images = 30;
  int init_training_steps = 4000;
  int train_steps_per_planning = 4000;
  bool offline_pretrain = false;
  int offline_pretrain_steps = 40;  // pretrain planning steps

  CameraModel camera;  // 64x64, 90 deg, 1000 m at desk scale

  double grid_spacing = 10.0;
  bool eight_connected = true;

  FieldConfig field;

  // Corner-escape stencil, calibrated for the desk-scale lattice: the shape
  // keeps the center heavy with mass escaping toward the four corners.
  int kernel_radius = 2;
  double kernel_center = 0.99;
  double kernel_corner = 0.0025;

  ObjectiveWeights objective;
  std::string selection = "multinomial";  // multinomial | argmax
  int mi_width = 32, mi_height = 32;
  double p_detect = 0.95;
  double sigma_threshold = 0.0;   // 0: opacity-0.5-per-step default
  double endpoint_margin = 0.0;   // 0: 1.5 voxel edges
  double ground_clearance = 0.0;  // 0: 3 vertical voxel edges

  CandidateParams candidates;  // z_max <= 0 resolves to the altitude cap

  FlightParams flight;

  double active_budget_m = 100.0;  // <= 0: unlimited along the chosen path
  double goal_budget_m = 100.0;
  int seen_reset_period = 10;

  // Scout start and initialization scan.
  double start_x = 0, start_y = 0, start_z = 2.0;
  double start_yaw = 0, start_pitch = -0.5235987755982988;  // -30 deg
  double init_altitude = 0.0;  // 0: 0.9 * altitude cap
  double init_pitch_base = -0.6;
  double init_pitch_jitter = 0.25;
  double ascend_fraction = 0.2;

  int psnr_frames = 20;
  bool export_frames = false;
  bool export_filters = false;
  bool export_scores = true;

  void validate() const;
};

EpisodeConfig config_from_json_text(const std::string& text, const std::string& origin);
EpisodeConfig load_config(const std::string& path);
std::string config_to_json(const EpisodeConfig& cfg);

/// Dotted-path override, e.g. "field.batch_rays=128" or "scout_policy=nerf_mi".
void apply_override(EpisodeConfig& cfg, const std::string& dotted_key, const std::string& value);
std::string get_config_value(const EpisodeConfig& cfg, const std::string& dotted_key);

ScoutPolicy parse_scout_policy(const std::string& name);
TargetPolicyKind parse_target_policy(const std::string& name);
SelectionMode parse_selection(const std::string& name);

}  // namespace scoutsim
