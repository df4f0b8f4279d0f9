#include "scoutsim.h"

#include <cstring>
#include <fstream>
#include <sstream>
#include <string>

#include "scoutsim/config.hpp"
#include "scoutsim/harness.hpp"

using namespace scoutsim;

struct scout_map {
  CityMap map;
};
struct scout_config {
  EpisodeConfig cfg;
};
struct scout_episode {
  MetricsLog log;
  EpisodeSummary summary;
};

namespace {

thread_local std::string g_last_error;

scout_status to_status(const Error& e) {
  g_last_error = e.what();
  switch (e.kind()) {
    case ErrorKind::Config:
    case ErrorKind::Invalid:
      return SCOUT_ERR_CONFIG;
    case ErrorKind::Io:
      return SCOUT_ERR_IO;
    case ErrorKind::Runtime:
      return SCOUT_ERR_RUNTIME;
  }
  return SCOUT_ERR_RUNTIME;
}

template <typename Fn>
scout_status guarded(Fn&& fn) {
  try {
    fn();
    return SCOUT_OK;
  } catch (const Error& e) {
    return to_status(e);
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return SCOUT_ERR_RUNTIME;
  } catch (...) {
    g_last_error = "unknown error";
    return SCOUT_ERR_RUNTIME;
  }
}

scout_status need(bool ok, const char* msg) {
  if (ok) return SCOUT_OK;
  g_last_error = msg;
  return SCOUT_ERR_CONFIG;
}

std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string part;
  while (std::getline(ss, part, ','))
    if (!part.empty()) out.push_back(part);
  return out;
}

}  // namespace

extern "C" {

const char* scout_version(void) { return "0.1.0"; }

const char* scout_last_error(void) { return g_last_error.c_str(); }

scout_status scout_map_load(const char* path, scout_map** out) {
  if (auto st = need(path && out, "scout_map_load: null argument")) return st;
  return guarded([&] {
    auto* handle = new scout_map{load_map(path)};
    *out = handle;
  });
}

void scout_map_free(scout_map* map) { delete map; }

scout_status scout_map_info(const scout_map* map, double bounds_out[4], double* altitude_cap_out,
                            int* building_count_out) {
  if (auto st = need(map != nullptr, "scout_map_info: null map")) return st;
  if (bounds_out) {
    bounds_out[0] = map->map.bounds.xmin;
    bounds_out[1] = map->map.bounds.ymin;
    bounds_out[2] = map->map.bounds.xmax;
    bounds_out[3] = map->map.bounds.ymax;
  }
  if (altitude_cap_out) *altitude_cap_out = map->map.altitude_cap;
  if (building_count_out) *building_count_out = static_cast<int>(map->map.buildings.size());
  return SCOUT_OK;
}

scout_status scout_map_render_png(const scout_map* map, const char* png_path, int width_px) {
  if (auto st = need(map && png_path, "scout_map_render_png: null argument")) return st;
  return guarded([&] { render_map_png(map->map, png_path, width_px); });
}

scout_status scout_convert_osm(const char* osm_json_path, const char* out_map_path,
                               double origin_lat, double origin_lon, double altitude_cap) {
  if (auto st = need(osm_json_path && out_map_path, "scout_convert_osm: null argument"))
    return st;
  return guarded(
      [&] { convert_osm(osm_json_path, out_map_path, origin_lat, origin_lon, altitude_cap); });
}

scout_status scout_config_default(scout_config** out) {
  if (auto st = need(out != nullptr, "scout_config_default: null argument")) return st;
  return guarded([&] { *out = new scout_config{EpisodeConfig{}}; });
}

scout_status scout_config_load(const char* path, scout_config** out) {
  if (auto st = need(path && out, "scout_config_load: null argument")) return st;
  return guarded([&] { *out = new scout_config{load_config(path)}; });
}

void scout_config_free(scout_config* cfg) { delete cfg; }

scout_status scout_config_set(scout_config* cfg, const char* dotted_key, const char* value) {
  if (auto st = need(cfg && dotted_key && value, "scout_config_set: null argument")) return st;
  return guarded([&] { apply_override(cfg->cfg, dotted_key, value); });
}

scout_status scout_config_get(const scout_config* cfg, const char* dotted_key, char* buf,
                              size_t bufsize) {
  if (auto st = need(cfg && dotted_key && buf && bufsize > 0, "scout_config_get: null argument"))
    return st;
  return guarded([&] {
    const std::string v = get_config_value(cfg->cfg, dotted_key);
    std::strncpy(buf, v.c_str(), bufsize - 1);
    buf[bufsize - 1] = '\0';
  });
}

scout_status scout_config_save(const scout_config* cfg, const char* path) {
  if (auto st = need(cfg && path, "scout_config_save: null argument")) return st;
  return guarded([&] {
    std::ofstream out(path);
    if (!out) throw io_error(std::string("cannot write ") + path);
    out << config_to_json(cfg->cfg) << "\n";
  });
}

scout_status scout_episode_run(const scout_config* cfg, const char* out_dir,
                               scout_episode** out) {
  if (auto st = need(cfg && out, "scout_episode_run: null argument")) return st;
  return guarded([&] {
    auto* ep = new scout_episode;
    try {
      ep->log = run_episode(cfg->cfg, out_dir ? out_dir : "");
    } catch (...) {
      delete ep;
      throw;
    }
    ep->summary = ep->log.summarize(2.0 * cfg->cfg.grid_spacing);
    *out = ep;
  });
}

void scout_episode_free(scout_episode* ep) { delete ep; }

scout_status scout_episode_summary(const scout_episode* ep, double* te_mean, double* te_min,
                                   double* te_max, double* psnr_final, int* localized_tick) {
  if (auto st = need(ep != nullptr, "scout_episode_summary: null episode")) return st;
  if (te_mean) *te_mean = ep->summary.te_mean;
  if (te_min) *te_min = ep->summary.te_min;
  if (te_max) *te_max = ep->summary.te_max;
  if (psnr_final) *psnr_final = ep->summary.psnr_final_4k;
  if (localized_tick) *localized_tick = ep->summary.localized_tick;
  return SCOUT_OK;
}

scout_status scout_sweep_run(const scout_config* cfg, const char* policies_csv,
                             const char* seeds_csv, const char* out_root) {
  if (auto st = need(cfg && policies_csv && seeds_csv && out_root,
                     "scout_sweep_run: null argument"))
    return st;
  return guarded([&] {
    const std::vector<std::string> policies = split_csv(policies_csv);
    std::vector<uint64_t> seeds;
    for (const std::string& s : split_csv(seeds_csv)) seeds.push_back(std::stoull(s));
    if (policies.empty() || seeds.empty())
      throw config_error("sweep needs at least one policy and one seed");
    const std::vector<std::string> dirs = run_sweep(cfg->cfg, policies, seeds, out_root);
    emit_report(dirs, std::string(out_root) + "/report");
  });
}

scout_status scout_report_emit(const char* const* episode_dirs, size_t n_dirs,
                               const char* out_dir) {
  if (auto st = need(episode_dirs && out_dir && n_dirs > 0, "scout_report_emit: null argument"))
    return st;
  return guarded([&] {
    std::vector<std::string> dirs(episode_dirs, episode_dirs + n_dirs);
    emit_report(dirs, out_dir);
  });
}

}  // extern "C"
