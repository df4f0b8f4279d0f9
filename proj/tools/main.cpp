// scoutsim command line. Links only the C API.

#include <cmath>
#include <cstdio>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "scoutsim.h"

namespace {

int fail(scout_status st) {
  std::fprintf(stderr, "error: %s\n", scout_last_error());
  return st == SCOUT_ERR_CONFIG ? 1 : 2;
}

struct ConfigHandle {
  scout_config* cfg = nullptr;
  ~ConfigHandle() { scout_config_free(cfg); }
};

int load_config_with_overrides(const std::string& path, const std::vector<std::string>& sets,
                               ConfigHandle* out) {
  scout_status st =
      path.empty() ? scout_config_default(&out->cfg) : scout_config_load(path.c_str(), &out->cfg);
  if (st != SCOUT_OK) return fail(st);
  for (const std::string& kv : sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) {
      std::fprintf(stderr, "error: --set expects key=value, got '%s'\n", kv.c_str());
      return 1;
    }
    st = scout_config_set(out->cfg, kv.substr(0, eq).c_str(), kv.substr(eq + 1).c_str());
    if (st != SCOUT_OK) return fail(st);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"scoutsim: pursuit-evasion scout simulator"};
  app.require_subcommand(1);

  std::string config_path, out_dir, map_path, png_path, osm_path;
  std::vector<std::string> sets, report_dirs;
  std::string policies = "gtmap_map,gtmap_mi,nerf_mi";
  std::string seeds = "72,80,88";
  int width_px = 800;
  double origin_lat = 0, origin_lon = 0, altitude_cap = 150;

  CLI::App* run = app.add_subcommand("run", "run one episode from a config");
  run->add_option("-c,--config", config_path, "config JSON (defaults apply when omitted)");
  run->add_option("-o,--out", out_dir, "output directory (timestamped dir created when omitted)");
  run->add_option("--set", sets, "override config values, key=value (repeatable)");

  CLI::App* sweep = app.add_subcommand("sweep", "policy x seed matrix plus report");
  sweep->add_option("-c,--config", config_path, "base config JSON");
  sweep->add_option("-o,--out", out_dir, "output root")->required();
  sweep->add_option("--policies", policies, "comma-separated policy labels");
  sweep->add_option("--seeds", seeds, "comma-separated seeds");
  sweep->add_option("--set", sets, "override config values, key=value (repeatable)");

  CLI::App* report = app.add_subcommand("report", "aggregate episode directories");
  report->add_option("dirs", report_dirs, "episode directories")->required();
  report->add_option("-o,--out", out_dir, "report output directory")->required();

  CLI::App* render = app.add_subcommand("render-map", "write a top-down map image");
  render->add_option("map", map_path, "map JSON file")->required();
  render->add_option("-o,--out", png_path, "output PNG")->required();
  render->add_option("--width", width_px, "image width in pixels");

  CLI::App* convert = app.add_subcommand("convert-osm", "Overpass JSON -> footprint map");
  convert->add_option("osm", osm_path, "Overpass-style OSM JSON export")->required();
  convert->add_option("-o,--out", map_path, "output map JSON")->required();
  convert->add_option("--lat", origin_lat, "origin latitude")->required();
  convert->add_option("--lon", origin_lon, "origin longitude")->required();
  convert->add_option("--altitude-cap", altitude_cap, "scout altitude cap (m)");

  CLI11_PARSE(app, argc, argv);

  if (run->parsed()) {
    ConfigHandle cfg;
    if (int rc = load_config_with_overrides(config_path, sets, &cfg)) return rc;
    if (out_dir.empty()) {
      char buf[256];
      if (scout_config_get(cfg.cfg, "scout_policy", buf, sizeof(buf)) != SCOUT_OK) return 2;
      std::string label(buf);
      label.erase(std::remove(label.begin(), label.end(), '"'), label.end());
      out_dir = "runs/" + label;
    }
    scout_episode* ep = nullptr;
    const scout_status st = scout_episode_run(cfg.cfg, out_dir.c_str(), &ep);
    if (st != SCOUT_OK) return fail(st);
    double te_mean = 0, te_min = 0, te_max = 0, psnr = 0;
    int localized = -1;
    scout_episode_summary(ep, &te_mean, &te_min, &te_max, &psnr, &localized);
    std::printf("episode done: te_mean=%.3f m te_min=%.3f m te_max=%.3f m", te_mean, te_min,
                te_max);
    if (!std::isnan(psnr)) std::printf(" psnr=%.2f dB", psnr);
    if (localized >= 0) std::printf(" localized_at=%d", localized);
    std::printf("\n  -> %s\n", out_dir.c_str());
    scout_episode_free(ep);
    return 0;
  }

  if (sweep->parsed()) {
    ConfigHandle cfg;
    if (int rc = load_config_with_overrides(config_path, sets, &cfg)) return rc;
    const scout_status st =
        scout_sweep_run(cfg.cfg, policies.c_str(), seeds.c_str(), out_dir.c_str());
    if (st != SCOUT_OK) return fail(st);
    std::printf("sweep done -> %s (report in %s/report)\n", out_dir.c_str(), out_dir.c_str());
    return 0;
  }

  if (report->parsed()) {
    std::vector<const char*> ptrs;
    for (const std::string& d : report_dirs) ptrs.push_back(d.c_str());
    const scout_status st = scout_report_emit(ptrs.data(), ptrs.size(), out_dir.c_str());
    if (st != SCOUT_OK) return fail(st);
    std::printf("report written to %s\n", out_dir.c_str());
    return 0;
  }

  if (render->parsed()) {
    scout_map* map = nullptr;
    scout_status st = scout_map_load(map_path.c_str(), &map);
    if (st != SCOUT_OK) return fail(st);
    st = scout_map_render_png(map, png_path.c_str(), width_px);
    scout_map_free(map);
    if (st != SCOUT_OK) return fail(st);
    std::printf("map image written to %s\n", png_path.c_str());
    return 0;
  }

  if (convert->parsed()) {
    const scout_status st = scout_convert_osm(osm_path.c_str(), map_path.c_str(), origin_lat,
                                              origin_lon, altitude_cap);
    if (st != SCOUT_OK) return fail(st);
    std::printf("map written to %s\n", map_path.c_str());
    return 0;
  }
  return 0;
}
