#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>

#include "doctest.h"
#include "scoutsim.h"

namespace fs = std::filesystem;

namespace {

std::string write_tmp(const std::string& name, const std::string& content) {
  const std::string path = (fs::temp_directory_path() / name).string();
  std::ofstream out(path);
  out << content;
  return path;
}

const char* kTinyMap = R"({
  "bounds": [-60, -60, 60, 60],
  "altitude_cap": 50,
  "buildings": [
    {"polygon": [[-30,-30],[-10,-30],[-10,-10],[-30,-10]], "height": 30},
    {"polygon": [[15,15],[40,15],[40,40],[15,40]], "height": 20}
  ]
})";

}  // namespace

TEST_CASE("version and error strings are always available") {
  CHECK(scout_version() != nullptr);
  CHECK(scout_last_error() != nullptr);
}

TEST_CASE("map loading through the C surface") {
  SUBCASE("valid map loads and reports info") {
    const std::string path = write_tmp("capi_map.json", kTinyMap);
    scout_map* map = nullptr;
    REQUIRE(scout_map_load(path.c_str(), &map) == SCOUT_OK);
    double bounds[4] = {0, 0, 0, 0};
    double cap = 0;
    int buildings = 0;
    CHECK(scout_map_info(map, bounds, &cap, &buildings) == SCOUT_OK);
    CHECK(bounds[0] == -60);
    CHECK(bounds[3] == 60);
    CHECK(cap == 50);
    CHECK(buildings == 2);

    const std::string png = (fs::temp_directory_path() / "capi_map.png").string();
    CHECK(scout_map_render_png(map, png.c_str(), 128) == SCOUT_OK);
    CHECK(fs::file_size(png) > 100);
    scout_map_free(map);
  }
  SUBCASE("missing file is an io error with a message") {
    scout_map* map = nullptr;
    CHECK(scout_map_load("/no/such/map.json", &map) == SCOUT_ERR_IO);
    CHECK(std::strlen(scout_last_error()) > 0);
  }
  SUBCASE("malformed map is a config error") {
    const std::string path = write_tmp("capi_bad.json", "{broken");
    scout_map* map = nullptr;
    CHECK(scout_map_load(path.c_str(), &map) == SCOUT_ERR_CONFIG);
  }
  SUBCASE("null arguments are rejected") {
    CHECK(scout_map_load(nullptr, nullptr) == SCOUT_ERR_CONFIG);
  }
}

TEST_CASE("config handles") {
  scout_config* cfg = nullptr;
  REQUIRE(scout_config_default(&cfg) == SCOUT_OK);

  SUBCASE("get/set round trip") {
    CHECK(scout_config_set(cfg, "seed", "80") == SCOUT_OK);
    char buf[64];
    CHECK(scout_config_get(cfg, "seed", buf, sizeof(buf)) == SCOUT_OK);
    CHECK(std::string(buf) == "80");
    CHECK(scout_config_set(cfg, "objective.lambda_target", "5.0") == SCOUT_OK);
    CHECK(scout_config_get(cfg, "objective.lambda_target", buf, sizeof(buf)) == SCOUT_OK);
    CHECK(std::stod(buf) == 5.0);
    CHECK(scout_config_set(cfg, "bogus_key", "1") == SCOUT_ERR_CONFIG);
  }
  SUBCASE("save and reload") {
    const std::string path = (fs::temp_directory_path() / "capi_cfg.json").string();
    CHECK(scout_config_set(cfg, "target_count", "3") == SCOUT_OK);
    CHECK(scout_config_save(cfg, path.c_str()) == SCOUT_OK);
    scout_config* cfg2 = nullptr;
    REQUIRE(scout_config_load(path.c_str(), &cfg2) == SCOUT_OK);
    char buf[64];
    CHECK(scout_config_get(cfg2, "target_count", buf, sizeof(buf)) == SCOUT_OK);
    CHECK(std::string(buf) == "3");
    scout_config_free(cfg2);
  }
  scout_config_free(cfg);
}

TEST_CASE("an episode runs end to end through the C surface") {
  const std::string map_path = write_tmp("capi_ep_map.json", kTinyMap);
  scout_config* cfg = nullptr;
  REQUIRE(scout_config_default(&cfg) == SCOUT_OK);
  CHECK(scout_config_set(cfg, "map", map_path.c_str()) == SCOUT_OK);
  CHECK(scout_config_set(cfg, "target_count", "2") == SCOUT_OK);
  CHECK(scout_config_set(cfg, "planning_steps", "2") == SCOUT_OK);
  CHECK(scout_config_set(cfg, "control_steps", "4") == SCOUT_OK);
  CHECK(scout_config_set(cfg, "init_images", "3") == SCOUT_OK);
  CHECK(scout_config_set(cfg, "camera.width", "12") == SCOUT_OK);
  CHECK(scout_config_set(cfg, "camera.height", "12") == SCOUT_OK);
  CHECK(scout_config_set(cfg, "candidates.n_distributions", "3") == SCOUT_OK);
  CHECK(scout_config_set(cfg, "candidates.n_particles", "2") == SCOUT_OK);
  CHECK(scout_config_set(cfg, "candidates.z_min", "12") == SCOUT_OK);
  CHECK(scout_config_set(cfg, "candidates.z_max", "45") == SCOUT_OK);

  const std::string out = (fs::temp_directory_path() / "capi_episode").string();
  fs::remove_all(out);
  scout_episode* ep = nullptr;
  REQUIRE(scout_episode_run(cfg, out.c_str(), &ep) == SCOUT_OK);
  double te_mean = -1, te_min = -1, te_max = -1, psnr = 0;
  int localized = -2;
  CHECK(scout_episode_summary(ep, &te_mean, &te_min, &te_max, &psnr, &localized) == SCOUT_OK);
  CHECK(te_mean >= 0);
  CHECK(te_min >= 0);
  CHECK(te_max >= te_min);
  CHECK(std::isnan(psnr));  // ground-truth-map mode has no field
  CHECK(fs::exists(out + "/metrics.csv"));
  scout_episode_free(ep);

  SUBCASE("report runs over the produced directory") {
    const char* dirs[1] = {out.c_str()};
    const std::string report = (fs::temp_directory_path() / "capi_report").string();
    CHECK(scout_report_emit(dirs, 1, report.c_str()) == SCOUT_OK);
    CHECK(fs::exists(report + "/summary_table.csv"));
  }
  scout_config_free(cfg);
}

TEST_CASE("invalid configs fail with config status, not a crash") {
  scout_config* cfg = nullptr;
  REQUIRE(scout_config_default(&cfg) == SCOUT_OK);
  CHECK(scout_config_set(cfg, "map", "/definitely/missing.json") == SCOUT_OK);
  scout_episode* ep = nullptr;
  CHECK(scout_episode_run(cfg, nullptr, &ep) == SCOUT_ERR_IO);
  CHECK(std::strlen(scout_last_error()) > 0);
  scout_config_free(cfg);
}

TEST_CASE("osm conversion produces a loadable footprint map") {
  const std::string osm = write_tmp("capi_osm.json", R"({
    "elements": [
      {"type": "node", "id": 1, "lat": 39.95010, "lon": -75.16710},
      {"type": "node", "id": 2, "lat": 39.95010, "lon": -75.16650},
      {"type": "node", "id": 3, "lat": 39.95060, "lon": -75.16650},
      {"type": "node", "id": 4, "lat": 39.95060, "lon": -75.16710},
      {"type": "way", "id": 10, "nodes": [1, 2, 3, 4, 1],
       "tags": {"building": "yes", "height": "42"}},
      {"type": "way", "id": 11, "nodes": [1, 2],
       "tags": {"building": "yes"}}
    ]
  })");
  const std::string out_map = (fs::temp_directory_path() / "capi_osm_map.json").string();
  REQUIRE(scout_convert_osm(osm.c_str(), out_map.c_str(), 39.9503, -75.1668, 150.0) == SCOUT_OK);
  scout_map* map = nullptr;
  REQUIRE(scout_map_load(out_map.c_str(), &map) == SCOUT_OK);
  int buildings = 0;
  double cap = 0;
  CHECK(scout_map_info(map, nullptr, &cap, &buildings) == SCOUT_OK);
  CHECK(buildings == 1);  // the truncated two-node way is dropped
  CHECK(cap == 150.0);
  scout_map_free(map);
}
