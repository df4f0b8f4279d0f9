#include <algorithm>
#include <cmath>
#include <cstring>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "json.hpp"
#include "scoutsim/harness.hpp"
#include "scoutsim/image.hpp"

namespace scoutsim {

namespace fs = std::filesystem;

namespace {

struct Csv {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  int col(const std::string& name) const {
    for (size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return static_cast<int>(i);
    return -1;
  }
};

Csv read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot read " + path);
  Csv csv;
  std::string line;
  if (!std::getline(in, line)) return csv;
  std::stringstream hs(line);
  std::string cell;
  while (std::getline(hs, cell, ',')) csv.header.push_back(cell);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    row.reserve(csv.header.size());
    const char* p = line.c_str();
    while (*p) {
      char* end = nullptr;
      const double v = std::strtod(p, &end);
      row.push_back(end == p ? std::numeric_limits<double>::quiet_NaN() : v);
      p = std::strchr(p, ',');
      if (!p) break;
      ++p;
    }
    row.resize(csv.header.size(), std::numeric_limits<double>::quiet_NaN());
    csv.rows.push_back(std::move(row));
  }
  return csv;
}

std::array<uint8_t, 3> lighten(std::array<uint8_t, 3> c, double f) {
  return {static_cast<uint8_t>(c[0] + (255 - c[0]) * f),
          static_cast<uint8_t>(c[1] + (255 - c[1]) * f),
          static_cast<uint8_t>(c[2] + (255 - c[2]) * f)};
}

struct PlotFrame {
  int x0, y0, x1, y1;  // pixel corners of the data area
  double xmin, xmax, ymin, ymax;

  int px(double x) const {
    return x0 + static_cast<int>((x - xmin) / std::max(xmax - xmin, 1e-12) * (x1 - x0));
  }
  int py(double y) const {
    return y1 - static_cast<int>((y - ymin) / std::max(ymax - ymin, 1e-12) * (y1 - y0));
  }
};

std::string tick_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

PlotFrame setup_axes(Image& img, double xmin, double xmax, double ymin, double ymax) {
  PlotFrame f{52, 12, img.width() - 14, img.height() - 26, xmin, xmax, ymin, ymax};
  const std::array<uint8_t, 3> axis{60, 60, 60};
  img.line(f.x0, f.y0, f.x0, f.y1, axis);
  img.line(f.x0, f.y1, f.x1, f.y1, axis);
  for (int i = 0; i <= 4; ++i) {
    const double xv = xmin + (xmax - xmin) * i / 4.0;
    const double yv = ymin + (ymax - ymin) * i / 4.0;
    const int xp = f.px(xv), yp = f.py(yv);
    img.line(xp, f.y1, xp, f.y1 + 3, axis);
    img.text(xp - 10, f.y1 + 6, tick_label(xv), axis);
    img.line(f.x0 - 3, yp, f.x0, yp, axis);
    img.text(2, yp - 3, tick_label(yv), axis);
  }
  return f;
}

void plot_rmse(const std::string& episode_dir, const std::string& out_png) {
  const Csv m = read_csv(episode_dir + "/metrics.csv");
  const int c_tick = m.col("tick"), c_min = m.col("min_err"), c_max = m.col("max_err");
  const int c_min_id = m.col("min_id"), c_max_id = m.col("max_id");
  if (c_tick < 0 || c_min < 0 || m.rows.empty()) return;
  double ymax = 1;
  for (const auto& r : m.rows) {
    if (!std::isnan(r[c_max])) ymax = std::max(ymax, r[c_max]);
  }
  Image img(900, 420);
  PlotFrame f =
      setup_axes(img, m.rows.front()[c_tick], m.rows.back()[c_tick], 0.0, ymax * 1.05);
  for (size_t i = 1; i < m.rows.size(); ++i) {
    const auto& a = m.rows[i - 1];
    const auto& b = m.rows[i];
    if (!std::isnan(b[c_max]) && !std::isnan(a[c_max])) {
      const auto col = lighten(series_color(static_cast<size_t>(b[c_max_id])), 0.65);
      img.line(f.px(a[c_tick]), f.py(a[c_max]), f.px(b[c_tick]), f.py(b[c_max]), col);
    }
  }
  for (size_t i = 1; i < m.rows.size(); ++i) {
    const auto& a = m.rows[i - 1];
    const auto& b = m.rows[i];
    if (!std::isnan(b[c_min]) && !std::isnan(a[c_min])) {
      const auto col = series_color(static_cast<size_t>(b[c_min_id]));
      img.line(f.px(a[c_tick]), f.py(a[c_min]), f.px(b[c_tick]), f.py(b[c_min]), col);
    }
  }
  img.save_png(out_png);
}

void plot_psnr(const std::string& episode_dir, const std::string& out_png) {
  const Csv m = read_csv(episode_dir + "/planning.csv");
  const int c_step = m.col("planning_step"), c2 = m.col("psnr2k"), c4 = m.col("psnr4k");
  if (c_step < 0 || m.rows.empty()) return;
  bool any = false;
  double ymin = 1e9, ymax = -1e9;
  for (const auto& r : m.rows)
    for (int c : {c2, c4})
      if (c >= 0 && !std::isnan(r[c])) {
        any = true;
        ymin = std::min(ymin, r[c]);
        ymax = std::max(ymax, r[c]);
      }
  if (!any) return;
  Image img(700, 360);
  PlotFrame f = setup_axes(img, m.rows.front()[c_step], m.rows.back()[c_step], ymin - 1,
                           ymax + 1);
  auto draw = [&](int c, std::array<uint8_t, 3> col) {
    for (size_t i = 1; i < m.rows.size(); ++i) {
      if (std::isnan(m.rows[i - 1][c]) || std::isnan(m.rows[i][c])) continue;
      img.line(f.px(m.rows[i - 1][c_step]), f.py(m.rows[i - 1][c]), f.px(m.rows[i][c_step]),
               f.py(m.rows[i][c]), col);
    }
  };
  if (c2 >= 0) draw(c2, lighten({31, 119, 180}, 0.55));
  if (c4 >= 0) draw(c4, {31, 119, 180});
  img.save_png(out_png);
}

void draw_map_base(Image& img, const CityMap& map) {
  const double sx = img.width() / map.bounds.width();
  const double sy = img.height() / map.bounds.height();
  double hmax = 1;
  for (const Building& b : map.buildings) hmax = std::max(hmax, b.height);
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      const Vec2 p(map.bounds.xmin + (x + 0.5) / sx, map.bounds.ymax - (y + 0.5) / sy);
      for (const Building& b : map.buildings) {
        if (point_in_polygon(b.footprint, p)) {
          const double shade = 0.75 - 0.45 * (b.height / hmax);
          const uint8_t g = static_cast<uint8_t>(255 * shade);
          img.set(x, y, {g, g, g});
          break;
        }
      }
    }
  }
}

void plot_trajectory(const std::string& episode_dir, const EpisodeSummary& s,
                     const std::string& map_path, const std::string& out_png) {
  CityMap map;
  try {
    map = load_map(map_path);
  } catch (const Error&) {
    return;  // map not available from this working directory
  }
  const Csv m = read_csv(episode_dir + "/metrics.csv");
  const int c_x = m.col("x"), c_y = m.col("y");
  if (c_x < 0 || m.rows.empty()) return;
  const int W = 700;
  const int H = std::max(64, static_cast<int>(W * map.bounds.height() / map.bounds.width()));
  Image img(W, H);
  draw_map_base(img, map);
  auto px = [&](double x) {
    return static_cast<int>((x - map.bounds.xmin) / map.bounds.width() * W);
  };
  auto py = [&](double y) {
    return static_cast<int>((map.bounds.ymax - y) / map.bounds.height() * H);
  };
  for (int i = 0; i < s.target_count; ++i) {
    const int cx = m.col("true_x_" + std::to_string(i));
    const int cy = m.col("true_y_" + std::to_string(i));
    if (cx < 0 || cy < 0) continue;
    const auto col = series_color(static_cast<size_t>(i));
    for (size_t r = 1; r < m.rows.size(); ++r)
      img.line(px(m.rows[r - 1][cx]), py(m.rows[r - 1][cy]), px(m.rows[r][cx]),
               py(m.rows[r][cy]), col);
    const auto& last = m.rows.back();
    img.fill_rect(px(last[cx]) - 2, py(last[cy]) - 2, px(last[cx]) + 2, py(last[cy]) + 2, col);
  }
  const std::array<uint8_t, 3> scout{20, 60, 220};
  for (size_t r = 1; r < m.rows.size(); ++r)
    img.line(px(m.rows[r - 1][c_x]), py(m.rows[r - 1][c_y]), px(m.rows[r][c_x]),
             py(m.rows[r][c_y]), scout);
  img.save_png(out_png);
}

struct Agg {
  std::vector<double> te_mean, te_min, te_max, psnr4k;
};

std::pair<double, double> mean_std(const std::vector<double>& v) {
  std::vector<double> vals;
  for (double x : v)
    if (!std::isnan(x)) vals.push_back(x);
  if (vals.empty()) return {std::numeric_limits<double>::quiet_NaN(),
                            std::numeric_limits<double>::quiet_NaN()};
  double mean = 0;
  for (double x : vals) mean += x;
  mean /= vals.size();
  if (vals.size() < 2) return {mean, 0.0};
  double var = 0;
  for (double x : vals) var += (x - mean) * (x - mean);
  var /= (vals.size() - 1);
  return {mean, std::sqrt(var)};
}

}  // namespace

std::string make_run_dir(const std::string& root, const std::string& label) {
  std::time_t now = std::time(nullptr);
  char stamp[32];
  std::strftime(stamp, sizeof(stamp), "%Y%m%d-%H%M%S", std::localtime(&now));
  std::string clean = label;
  std::replace(clean.begin(), clean.end(), ':', '-');
  std::string dir = root + "/" + clean + "_" + stamp;
  int suffix = 0;
  while (fs::exists(dir)) dir = root + "/" + clean + "_" + stamp + "-" + std::to_string(++suffix);
  fs::create_directories(dir);
  return dir;
}

std::vector<std::string> run_sweep(const EpisodeConfig& base,
                                   const std::vector<std::string>& policies,
                                   const std::vector<uint64_t>& seeds,
                                   const std::string& out_root) {
  fs::create_directories(out_root);
  std::vector<std::string> dirs;
  for (const std::string& policy : policies) {
    for (uint64_t seed : seeds) {
      EpisodeConfig cfg = base;
      cfg.seed = seed;
      std::string name = policy;
      if (policy == "gtmap_map" || policy == "gtmap_mi") {
        cfg.scout_policy = policy;
      } else if (policy == "nerf_mi" || policy == "nerf_mi:4k") {
        cfg.scout_policy = "nerf_mi";
        cfg.train_steps_per_planning = 4000;
      } else if (policy == "nerf_mi:2k") {
        cfg.scout_policy = "nerf_mi";
        cfg.train_steps_per_planning = 2000;
      } else if (policy == "nerf_mi:offline") {
        cfg.scout_policy = "nerf_mi";
        cfg.train_steps_per_planning = 2000;
        cfg.offline_pretrain = true;
      } else {
        throw config_error("unknown sweep policy: " + policy);
      }
      std::string clean = name;
      std::replace(clean.begin(), clean.end(), ':', '-');
      const std::string dir = out_root + "/" + clean + "_seed" + std::to_string(seed);
      fs::create_directories(dir);
      run_episode(cfg, dir);
      dirs.push_back(dir);
    }
  }
  return dirs;
}

void emit_report(const std::vector<std::string>& episode_dirs, const std::string& out_dir) {
  if (episode_dirs.empty()) throw invalid_error("emit_report: no episode directories");
  fs::create_directories(out_dir);

  std::map<std::string, Agg> groups;
  std::vector<std::pair<std::string, EpisodeSummary>> episodes;
  for (const std::string& dir : episode_dirs) {
    const EpisodeSummary s = read_summary_json(dir + "/summary.json");
    episodes.emplace_back(dir, s);
    const std::string key = s.map_name + "," + s.method_label + "," + s.target_policy;
    Agg& a = groups[key];
    a.te_mean.push_back(s.te_mean);
    a.te_min.push_back(s.te_min);
    a.te_max.push_back(s.te_max);
    a.psnr4k.push_back(s.psnr_final_4k);
  }

  {
    std::ofstream out(out_dir + "/summary_table.csv");
    if (!out) throw io_error("cannot write summary table");
    out << "map,method,target_policy,episodes,te_mean,te_mean_std,te_min,te_min_std,"
           "te_max,te_max_std,psnr4k\n";
    for (const auto& [key, agg] : groups) {
      const auto [m_mean, m_std] = mean_std(agg.te_mean);
      const auto [lo_mean, lo_std] = mean_std(agg.te_min);
      const auto [hi_mean, hi_std] = mean_std(agg.te_max);
      const auto [p_mean, p_std] = mean_std(agg.psnr4k);
      (void)p_std;
      char line[512];
      std::snprintf(line, sizeof(line), "%s,%zu,%.6g,%.6g,%.6g,%.6g,%.6g,%.6g,%.6g\n",
                    key.c_str(), agg.te_mean.size(), m_mean, m_std, lo_mean, lo_std, hi_mean,
                    hi_std, p_mean);
      out << line;
    }
  }

  for (const auto& [dir, s] : episodes) {
    const std::string base = fs::path(dir).filename().string();
    plot_rmse(dir, out_dir + "/rmse_" + base + ".png");
    plot_psnr(dir, out_dir + "/psnr_" + base + ".png");
    // Try the original map path recorded in the episode's config copy.
    std::string map_path;
    try {
      std::ifstream cin(dir + "/config.json");
      nlohmann::json j;
      cin >> j;
      map_path = j.value("map", "");
    } catch (...) {
      map_path.clear();
    }
    if (!map_path.empty()) plot_trajectory(dir, s, map_path, out_dir + "/traj_" + base + ".png");
  }
}

void render_map_png(const CityMap& map, const std::string& path, int width_px) {
  const int W = std::max(64, width_px);
  const int H = std::max(64, static_cast<int>(W * map.bounds.height() / map.bounds.width()));
  Image img(W, H);
  draw_map_base(img, map);
  img.save_png(path);
}

void convert_osm(const std::string& osm_json_path, const std::string& out_map_path,
                 double origin_lat, double origin_lon, double altitude_cap,
                 double default_height) {
  std::ifstream in(osm_json_path);
  if (!in) throw io_error("cannot open " + osm_json_path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw config_error(osm_json_path + ": " + e.what());
  }
  if (!j.contains("elements")) throw config_error("not an Overpass-style OSM export");

  const double meters_per_deg = 6371000.0 * kPi / 180.0;
  const double cos_lat = std::cos(deg2rad(origin_lat));
  std::map<int64_t, Vec2> nodes;
  for (const auto& e : j["elements"]) {
    if (e.value("type", "") != "node") continue;
    const double x = (e["lon"].get<double>() - origin_lon) * meters_per_deg * cos_lat;
    const double y = (e["lat"].get<double>() - origin_lat) * meters_per_deg;
    nodes[e["id"].get<int64_t>()] = Vec2(x, y);
  }

  CityMap map;
  for (const auto& e : j["elements"]) {
    if (e.value("type", "") != "way" || !e.contains("tags")) continue;
    const auto& tags = e["tags"];
    if (!tags.contains("building")) continue;
    Building b;
    for (const auto& nid : e["nodes"]) {
      auto it = nodes.find(nid.get<int64_t>());
      if (it == nodes.end()) continue;
      b.footprint.push_back(it->second);
    }
    if (b.footprint.size() >= 2 &&
        (b.footprint.front() - b.footprint.back()).norm() < 1e-9)
      b.footprint.pop_back();  // closed ways repeat the first node
    if (b.footprint.size() < 3 || !polygon_is_simple(b.footprint)) continue;
    b.height = default_height;
    if (tags.contains("height")) {
      b.height = std::strtod(tags["height"].get<std::string>().c_str(), nullptr);
    } else if (tags.contains("building:levels")) {
      b.height = 3.0 * std::strtod(tags["building:levels"].get<std::string>().c_str(), nullptr);
    }
    if (b.height <= 0) b.height = default_height;
    map.buildings.push_back(std::move(b));
  }
  if (map.buildings.empty()) throw config_error("no usable building footprints found");

  Rect r{1e18, 1e18, -1e18, -1e18};
  for (const Building& b : map.buildings)
    for (const Vec2& v : b.footprint) {
      r.xmin = std::min(r.xmin, v.x());
      r.ymin = std::min(r.ymin, v.y());
      r.xmax = std::max(r.xmax, v.x());
      r.ymax = std::max(r.ymax, v.y());
    }
  const double margin = 50.0;
  map.bounds = Rect{r.xmin - margin, r.ymin - margin, r.xmax + margin, r.ymax + margin};
  map.altitude_cap = altitude_cap;
  map.validate();
  save_map(map, out_map_path);
}

}  // namespace scoutsim
