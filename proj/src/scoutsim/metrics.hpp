#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "scoutsim/common.hpp"
#include "scoutsim/pose.hpp"

namespace scoutsim {

/// Instantaneous tracking error: Euclidean distance between a filter's mean
/// and the target's true planar position.
inline double rmse(const Vec2& true_pos, const Vec2& est_pos) {
  return (true_pos - est_pos).norm();
}

struct TickRecord {
  int tick = 0;
  int planning_step = -1;  // -1 during the initialization scan
  PoseSE3 pose;
  int detections = 0;
  std::vector<double> true_x, true_y, est_x, est_y, err;  // indexed by target id
  double min_err = std::numeric_limits<double>::quiet_NaN();
  double max_err = std::numeric_limits<double>::quiet_NaN();
  int min_id = -1, max_id = -1;
};

struct PlanRecord {
  int planning_step = 0;
  PoseSE3 chosen;
  double total = 0, i_rgb = 0, i_depth = 0, i_occ = 0, i_detect = 0;
  double psnr2k = std::numeric_limits<double>::quiet_NaN();
  double psnr4k = std::numeric_limits<double>::quiet_NaN();
  double min_rmse = std::numeric_limits<double>::quiet_NaN();
  double max_rmse = std::numeric_limits<double>::quiet_NaN();
  int min_id = -1, max_id = -1;
};

struct EpisodeSummary {
  std::string map_name, scout_policy, target_policy, method_label;
  uint64_t seed = 0;
  int target_count = 0;
  int total_ticks = 0;
  double te_mean = std::numeric_limits<double>::quiet_NaN();
  double te_min = std::numeric_limits<double>::quiet_NaN();
  double te_max = std::numeric_limits<double>::quiet_NaN();
  double psnr_final_2k = std::numeric_limits<double>::quiet_NaN();
  double psnr_final_4k = std::numeric_limits<double>::quiet_NaN();
  int localized_tick = -1;  // first tick with every target within tolerance
  double localize_tol = 0;
};

struct MetricsLog {
  std::string map_name, map_path, scout_policy, target_policy, method_label;
  uint64_t seed = 0;
  int target_count = 0;
  std::vector<TickRecord> ticks;
  std::vector<PlanRecord> plans;

  EpisodeSummary summarize(double localize_tol) const;
};

void write_episode_csvs(const MetricsLog& log, const std::string& dir);
void write_summary_json(const EpisodeSummary& s, const std::string& path);
EpisodeSummary read_summary_json(const std::string& path);

}  // namespace scoutsim
