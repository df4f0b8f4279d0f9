#include "scoutsim/config.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"

namespace scoutsim {

using nlohmann::json;

namespace {

json config_to_json_obj(const EpisodeConfig& c) {
  json j;
  j["map"] = c.map_path;
  j["seed"] = c.seed;
  j["scout_policy"] = c.scout_policy;
  j["target_policy"] = c.target_policy;
  j["target_count"] = c.target_count;
  j["planning_steps"] = c.planning_steps;
  j["control_steps"] = c.control_steps;
  j["init_images"] = c.init_images;
  j["init_training_steps"] = c.init_training_steps;
  j["train_steps_per_planning"] = c.train_steps_per_planning;
  j["offline_pretrain"] = c.offline_pretrain;
  j["offline_pretrain_steps"] = c.offline_pretrain_steps;
  j["camera"] = {{"fov_rad", c.camera.fov},
                 {"width", c.camera.width},
                 {"height", c.camera.height},
                 {"max_range", c.camera.max_range}};
  j["grid"] = {{"spacing", c.grid_spacing}, {"eight_connected", c.eight_connected}};
  j["field"] = {{"optimizer", c.field.optimizer},
                {"nx", c.field.nx},
                {"ny", c.field.ny},
                {"nz", c.field.nz},
                {"quadrature", c.field.quadrature},
                {"batch_rays", c.field.batch_rays},
                {"lr", c.field.lr},
                {"lr_decay_every", c.field.lr_decay_every},
                {"lr_decay", c.field.lr_decay},
                {"lambda_rgb", c.field.lambda_rgb},
                {"lambda_depth", c.field.lambda_depth},
                {"lambda_escape", c.field.lambda_escape},
                {"adaptive_balance", c.field.adaptive_balance},
                {"balance_every", c.field.balance_every},
                {"recent_window", c.field.recent_window},
                {"raw_init", c.field.raw_init},
                {"density_scale", c.field.density_scale},
                {"near_clip", c.field.near_clip}};
  j["kernel"] = {{"radius", c.kernel_radius}, {"center", c.kernel_center},
                 {"corner", c.kernel_corner}};
  j["objective"] = {{"lambda_target", c.objective.lambda_target},
                    {"lambda_rgb", c.objective.lambda_rgb},
                    {"lambda_depth", c.objective.lambda_depth},
                    {"lambda_occ", c.objective.lambda_occ},
                    {"selection", c.selection},
                    {"mi_width", c.mi_width},
                    {"mi_height", c.mi_height}};
  j["detection"] = {{"p_detect", c.p_detect}};
  j["visibility"] = {{"sigma_threshold", c.sigma_threshold},
                     {"endpoint_margin", c.endpoint_margin},
                     {"ground_clearance", c.ground_clearance}};
  j["candidates"] = {{"n_distributions", c.candidates.n_distributions},
                     {"n_particles", c.candidates.n_particles},
                     {"jitter_sigma", c.candidates.jitter_sigma},
                     {"z_min", c.candidates.z_min},
                     {"z_max", c.candidates.z_max},
                     {"pitch_min", c.candidates.pitch_min},
                     {"pitch_max", c.candidates.pitch_max},
                     {"center_radius", c.candidates.center_radius}};
  j["flight"] = {{"lattice_spacing", c.flight.lattice_spacing},
                 {"z_min", c.flight.z_min},
                 {"v_max", c.flight.v_max},
                 {"scan_fraction", c.flight.scan_fraction},
                 {"scan_pitch_amp", c.flight.scan_pitch_amp},
                 {"min_scan_time", c.flight.min_scan_time}};
  j["targets"] = {{"active_budget_m", c.active_budget_m},
                  {"goal_budget_m", c.goal_budget_m},
                  {"seen_reset_period", c.seen_reset_period}};
  j["start"] = {{"x", c.start_x}, {"y", c.start_y},     {"z", c.start_z},
                {"yaw", c.start_yaw}, {"pitch", c.start_pitch}};
  j["init"] = {{"altitude", c.init_altitude},
               {"pitch_base", c.init_pitch_base},
               {"pitch_jitter", c.init_pitch_jitter},
               {"ascend_fraction", c.ascend_fraction}};
  j["outputs"] = {{"psnr_frames", c.psnr_frames},
                  {"export_frames", c.export_frames},
                  {"export_filters", c.export_filters},
                  {"export_scores", c.export_scores}};
  return j;
}

template <typename T>
void get_if(const json& j, const char* key, T* out) {
  if (j.contains(key)) *out = j.at(key).get<T>();
}

EpisodeConfig config_from_json_obj(const json& j, const std::string& origin) {
  EpisodeConfig c;
  try {
    get_if(j, "map", &c.map_path);
    get_if(j, "seed", &c.seed);
    get_if(j, "scout_policy", &c.scout_policy);
    get_if(j, "target_policy", &c.target_policy);
    get_if(j, "target_count", &c.target_count);
    get_if(j, "planning_steps", &c.planning_steps);
    get_if(j, "control_steps", &c.control_steps);
    get_if(j, "init_images", &c.init_images);
    get_if(j, "init_training_steps", &c.init_training_steps);
    get_if(j, "train_steps_per_planning", &c.train_steps_per_planning);
    get_if(j, "offline_pretrain", &c.offline_pretrain);
    get_if(j, "offline_pretrain_steps", &c.offline_pretrain_steps);
    if (j.contains("camera")) {
      const json& jc = j.at("camera");
      get_if(jc, "fov_rad", &c.camera.fov);
      if (jc.contains("fov_deg")) c.camera.fov = deg2rad(jc.at("fov_deg").get<double>());
      get_if(jc, "width", &c.camera.width);
      get_if(jc, "height", &c.camera.height);
      get_if(jc, "max_range", &c.camera.max_range);
    }
    if (j.contains("grid")) {
      get_if(j.at("grid"), "spacing", &c.grid_spacing);
      get_if(j.at("grid"), "eight_connected", &c.eight_connected);
    }
    if (j.contains("field")) {
      const json& jf = j.at("field");
      get_if(jf, "optimizer", &c.field.optimizer);
      get_if(jf, "nx", &c.field.nx);
      get_if(jf, "ny", &c.field.ny);
      get_if(jf, "nz", &c.field.nz);
      get_if(jf, "quadrature", &c.field.quadrature);
      get_if(jf, "batch_rays", &c.field.batch_rays);
      get_if(jf, "lr", &c.field.lr);
      get_if(jf, "lr_decay_every", &c.field.lr_decay_every);
      get_if(jf, "lr_decay", &c.field.lr_decay);
      get_if(jf, "lambda_rgb", &c.field.lambda_rgb);
      get_if(jf, "lambda_depth", &c.field.lambda_depth);
      get_if(jf, "lambda_escape", &c.field.lambda_escape);
      get_if(jf, "adaptive_balance", &c.field.adaptive_balance);
      get_if(jf, "balance_every", &c.field.balance_every);
      get_if(jf, "recent_window", &c.field.recent_window);
      get_if(jf, "raw_init", &c.field.raw_init);
      get_if(jf, "density_scale", &c.field.density_scale);
      get_if(jf, "near_clip", &c.field.near_clip);
    }
    if (j.contains("kernel")) {
      get_if(j.at("kernel"), "radius", &c.kernel_radius);
      get_if(j.at("kernel"), "center", &c.kernel_center);
      get_if(j.at("kernel"), "corner", &c.kernel_corner);
    }
    if (j.contains("objective")) {
      const json& jo = j.at("objective");
      get_if(jo, "lambda_target", &c.objective.lambda_target);
      get_if(jo, "lambda_rgb", &c.objective.lambda_rgb);
      get_if(jo, "lambda_depth", &c.objective.lambda_depth);
      get_if(jo, "lambda_occ", &c.objective.lambda_occ);
      get_if(jo, "selection", &c.selection);
      get_if(jo, "mi_width", &c.mi_width);
      get_if(jo, "mi_height", &c.mi_height);
    }
    if (j.contains("detection")) get_if(j.at("detection"), "p_detect", &c.p_detect);
    if (j.contains("visibility")) {
      get_if(j.at("visibility"), "sigma_threshold", &c.sigma_threshold);
      get_if(j.at("visibility"), "endpoint_margin", &c.endpoint_margin);
      get_if(j.at("visibility"), "ground_clearance", &c.ground_clearance);
    }
    if (j.contains("candidates")) {
      const json& jc = j.at("candidates");
      get_if(jc, "n_distributions", &c.candidates.n_distributions);
      get_if(jc, "n_particles", &c.candidates.n_particles);
      get_if(jc, "jitter_sigma", &c.candidates.jitter_sigma);
      get_if(jc, "z_min", &c.candidates.z_min);
      get_if(jc, "z_max", &c.candidates.z_max);
      get_if(jc, "pitch_min", &c.candidates.pitch_min);
      get_if(jc, "pitch_max", &c.candidates.pitch_max);
      get_if(jc, "center_radius", &c.candidates.center_radius);
    }
    if (j.contains("flight")) {
      const json& jf = j.at("flight");
      get_if(jf, "lattice_spacing", &c.flight.lattice_spacing);
      get_if(jf, "z_min", &c.flight.z_min);
      get_if(jf, "v_max", &c.flight.v_max);
      get_if(jf, "scan_fraction", &c.flight.scan_fraction);
      get_if(jf, "scan_pitch_amp", &c.flight.scan_pitch_amp);
      get_if(jf, "min_scan_time", &c.flight.min_scan_time);
    }
    if (j.contains("targets")) {
      get_if(j.at("targets"), "active_budget_m", &c.active_budget_m);
      get_if(j.at("targets"), "goal_budget_m", &c.goal_budget_m);
      get_if(j.at("targets"), "seen_reset_period", &c.seen_reset_period);
    }
    if (j.contains("start")) {
      get_if(j.at("start"), "x", &c.start_x);
      get_if(j.at("start"), "y", &c.start_y);
      get_if(j.at("start"), "z", &c.start_z);
      get_if(j.at("start"), "yaw", &c.start_yaw);
      get_if(j.at("start"), "pitch", &c.start_pitch);
    }
    if (j.contains("init")) {
      get_if(j.at("init"), "altitude", &c.init_altitude);
      get_if(j.at("init"), "pitch_base", &c.init_pitch_base);
      get_if(j.at("init"), "pitch_jitter", &c.init_pitch_jitter);
      get_if(j.at("init"), "ascend_fraction", &c.ascend_fraction);
    }
    if (j.contains("outputs")) {
      get_if(j.at("outputs"), "psnr_frames", &c.psnr_frames);
      get_if(j.at("outputs"), "export_frames", &c.export_frames);
      get_if(j.at("outputs"), "export_filters", &c.export_filters);
      get_if(j.at("outputs"), "export_scores", &c.export_scores);
    }
  } catch (const json::exception& e) {
    throw config_error(origin + ": bad config value: " + e.what());
  }
  c.validate();
  return c;
}

}  // namespace

void EpisodeConfig::validate() const {
  auto positive = [](int v, const char* name) {
    if (v < 1) throw config_error(std::string(name) + " must be >= 1");
  };
  positive(planning_steps, "planning_steps");
  positive(control_steps, "control_steps");
  positive(init_images, "init_images");
  if (target_count < 0) throw config_error("target_count must be >= 0");
  parse_scout_policy(scout_policy);
  parse_target_policy(target_policy);
  parse_selection(selection);
  if (p_detect < 0 || p_detect > 1) throw config_error("p_detect must be in [0,1]");
  if (camera.width < 8 || camera.height < 8) throw config_error("camera size must be >= 8");
  if (camera.fov <= 0 || camera.fov >= kPi) throw config_error("camera fov must be in (0, pi)");
  if (grid_spacing <= 0) throw config_error("grid spacing must be > 0");
  // Kernel mass consistency is checked where the stencil is built, so that
  // sequential per-key overrides may pass through intermediate states.
}

EpisodeConfig config_from_json_text(const std::string& text, const std::string& origin) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw config_error(origin + ": config parse error: " + e.what());
  }
  return config_from_json_obj(j, origin);
}

EpisodeConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw config_error("cannot open config file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return config_from_json_text(ss.str(), path);
}

std::string config_to_json(const EpisodeConfig& cfg) { return config_to_json_obj(cfg).dump(2); }

void apply_override(EpisodeConfig& cfg, const std::string& dotted_key, const std::string& value) {
  json j = config_to_json_obj(cfg);
  json* node = &j;
  std::stringstream ss(dotted_key);
  std::string part;
  std::vector<std::string> parts;
  while (std::getline(ss, part, '.')) parts.push_back(part);
  if (parts.empty()) throw config_error("empty override key");
  for (size_t i = 0; i + 1 < parts.size(); ++i) {
    if (!node->contains(parts[i])) throw config_error("unknown config key: " + dotted_key);
    node = &(*node)[parts[i]];
  }
  if (!node->contains(parts.back())) throw config_error("unknown config key: " + dotted_key);
  json parsed;
  try {
    parsed = json::parse(value);
  } catch (const json::parse_error&) {
    parsed = value;  // bare strings are fine
  }
  (*node)[parts.back()] = parsed;
  cfg = config_from_json_obj(j, "override " + dotted_key);
}

std::string get_config_value(const EpisodeConfig& cfg, const std::string& dotted_key) {
  json j = config_to_json_obj(cfg);
  json* node = &j;
  std::stringstream ss(dotted_key);
  std::string part;
  while (std::getline(ss, part, '.')) {
    if (!node->contains(part)) throw config_error("unknown config key: " + dotted_key);
    node = &(*node)[part];
  }
  return node->dump();
}

ScoutPolicy parse_scout_policy(const std::string& name) {
  if (name == "gtmap_map" || name == "GTmap+MAP") return ScoutPolicy::GtMapMap;
  if (name == "gtmap_mi" || name == "GTmap+MI") return ScoutPolicy::GtMapMi;
  if (name == "nerf_mi" || name == "NeRF+MI" || name == "field_mi") return ScoutPolicy::NerfMi;
  throw config_error("unknown scout policy: " + name);
}

TargetPolicyKind parse_target_policy(const std::string& name) {
  if (name == "stationary") return TargetPolicyKind::Stationary;
  if (name == "active") return TargetPolicyKind::Active;
  if (name == "goal") return TargetPolicyKind::Goal;
  throw config_error("unknown target policy: " + name);
}

SelectionMode parse_selection(const std::string& name) {
  if (name == "multinomial") return SelectionMode::Multinomial;
  if (name == "argmax") return SelectionMode::Argmax;
  throw config_error("unknown selection mode: " + name);
}

}  // namespace scoutsim
