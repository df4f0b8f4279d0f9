#include "scoutsim/metrics.hpp"

#include <cstdio>
#include <fstream>

#include "json.hpp"

namespace scoutsim {

namespace {
std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}
}  // namespace

EpisodeSummary MetricsLog::summarize(double localize_tol) const {
  EpisodeSummary s;
  s.map_name = map_name;
  s.scout_policy = scout_policy;
  s.target_policy = target_policy;
  s.method_label = method_label;
  s.seed = seed;
  s.target_count = target_count;
  s.total_ticks = static_cast<int>(ticks.size());
  s.localize_tol = localize_tol;

  double sum = 0;
  size_t n = 0;
  double best = std::numeric_limits<double>::infinity();
  double worst = 0;
  for (const TickRecord& t : ticks) {
    for (double e : t.err) {
      sum += e;
      ++n;
    }
    if (!std::isnan(t.min_err)) best = std::min(best, t.min_err);
    if (!std::isnan(t.max_err)) worst = std::max(worst, t.max_err);
    if (s.localized_tick < 0 && !std::isnan(t.max_err) && t.max_err <= localize_tol)
      s.localized_tick = t.tick;
  }
  if (n > 0) {
    s.te_mean = sum / static_cast<double>(n);
    s.te_min = best;
    s.te_max = worst;
  }
  for (auto it = plans.rbegin(); it != plans.rend(); ++it) {
    if (std::isnan(s.psnr_final_2k) && !std::isnan(it->psnr2k)) s.psnr_final_2k = it->psnr2k;
    if (std::isnan(s.psnr_final_4k) && !std::isnan(it->psnr4k)) s.psnr_final_4k = it->psnr4k;
    if (!std::isnan(s.psnr_final_2k) && !std::isnan(s.psnr_final_4k)) break;
  }
  return s;
}

void write_episode_csvs(const MetricsLog& log, const std::string& dir) {
  {
    std::ofstream out(dir + "/metrics.csv");
    if (!out) throw io_error("cannot write " + dir + "/metrics.csv");
    out << "tick,planning_step,x,y,z,yaw,pitch,detections";
    for (int i = 0; i < log.target_count; ++i)
      out << ",true_x_" << i << ",true_y_" << i << ",est_x_" << i << ",est_y_" << i << ",err_"
          << i;
    out << ",min_err,min_id,max_err,max_id\n";
    for (const TickRecord& t : log.ticks) {
      out << t.tick << ',' << t.planning_step << ',' << fmt(t.pose.position.x()) << ','
          << fmt(t.pose.position.y()) << ',' << fmt(t.pose.position.z()) << ',' << fmt(t.pose.yaw)
          << ',' << fmt(t.pose.pitch) << ',' << t.detections;
      for (int i = 0; i < log.target_count; ++i)
        out << ',' << fmt(t.true_x[i]) << ',' << fmt(t.true_y[i]) << ',' << fmt(t.est_x[i]) << ','
            << fmt(t.est_y[i]) << ',' << fmt(t.err[i]);
      out << ',' << fmt(t.min_err) << ',' << t.min_id << ',' << fmt(t.max_err) << ',' << t.max_id
          << '\n';
    }
  }
  {
    std::ofstream out(dir + "/planning.csv");
    if (!out) throw io_error("cannot write " + dir + "/planning.csv");
    out << "planning_step,x,y,z,yaw,pitch,total,i_rgb,i_depth,i_occ,i_detect,"
           "psnr2k,psnr4k,min_rmse,min_id,max_rmse,max_id\n";
    for (const PlanRecord& p : log.plans) {
      out << p.planning_step << ',' << fmt(p.chosen.position.x()) << ','
          << fmt(p.chosen.position.y()) << ',' << fmt(p.chosen.position.z()) << ','
          << fmt(p.chosen.yaw) << ',' << fmt(p.chosen.pitch) << ',' << fmt(p.total) << ','
          << fmt(p.i_rgb) << ',' << fmt(p.i_depth) << ',' << fmt(p.i_occ) << ',' << fmt(p.i_detect)
          << ',' << fmt(p.psnr2k) << ',' << fmt(p.psnr4k) << ',' << fmt(p.min_rmse) << ','
          << p.min_id << ',' << fmt(p.max_rmse) << ',' << p.max_id << '\n';
    }
  }
  {
    std::ofstream out(dir + "/trajectory.csv");
    if (!out) throw io_error("cannot write " + dir + "/trajectory.csv");
    out << "t,x,y,z,yaw,pitch\n";
    for (const TickRecord& t : log.ticks)
      out << t.tick << ',' << fmt(t.pose.position.x()) << ',' << fmt(t.pose.position.y()) << ','
          << fmt(t.pose.position.z()) << ',' << fmt(t.pose.yaw) << ',' << fmt(t.pose.pitch)
          << '\n';
  }
}

void write_summary_json(const EpisodeSummary& s, const std::string& path) {
  nlohmann::json j;
  j["map"] = s.map_name;
  j["scout_policy"] = s.scout_policy;
  j["target_policy"] = s.target_policy;
  j["method"] = s.method_label;
  j["seed"] = s.seed;
  j["target_count"] = s.target_count;
  j["total_ticks"] = s.total_ticks;
  j["te_mean"] = s.te_mean;
  j["te_min"] = s.te_min;
  j["te_max"] = s.te_max;
  j["psnr_final_2k"] = s.psnr_final_2k;
  j["psnr_final_4k"] = s.psnr_final_4k;
  j["localized_tick"] = s.localized_tick;
  j["localize_tol"] = s.localize_tol;
  std::ofstream out(path);
  if (!out) throw io_error("cannot write " + path);
  out << j.dump(2) << "\n";
}

EpisodeSummary read_summary_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot read " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw io_error(path + ": " + e.what());
  }
  EpisodeSummary s;
  s.map_name = j.value("map", "");
  s.scout_policy = j.value("scout_policy", "");
  s.target_policy = j.value("target_policy", "");
  s.method_label = j.value("method", "");
  s.seed = j.value("seed", 0ull);
  s.target_count = j.value("target_count", 0);
  s.total_ticks = j.value("total_ticks", 0);
  auto num = [&](const char* key) {
    if (!j.contains(key) || j[key].is_null()) return std::numeric_limits<double>::quiet_NaN();
    return j[key].get<double>();
  };
  s.te_mean = num("te_mean");
  s.te_min = num("te_min");
  s.te_max = num("te_max");
  s.psnr_final_2k = num("psnr_final_2k");
  s.psnr_final_4k = num("psnr_final_4k");
  s.localized_tick = j.value("localized_tick", -1);
  s.localize_tol = j.value("localize_tol", 0.0);
  return s;
}

}  // namespace scoutsim
