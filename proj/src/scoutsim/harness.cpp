#include "scoutsim/harness.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "scoutsim/image.hpp"

namespace scoutsim {

namespace {

std::string stem_of(const std::string& path) {
  return std::filesystem::path(path).stem().string();
}

std::string method_label(const EpisodeConfig& cfg) {
  if (parse_scout_policy(cfg.scout_policy) != ScoutPolicy::NerfMi) return cfg.scout_policy;
  std::string label = "nerf_mi:" + std::to_string(cfg.train_steps_per_planning / 1000) + "k";
  if (cfg.offline_pretrain) label = "nerf_mi:offline";
  return label;
}

RgbdFrame frame_from_stored(const StoredFrame& sf) {
  RgbdFrame f;
  f.width = sf.cam.width;
  f.height = sf.cam.height;
  f.pose = sf.pose;
  f.rgb.resize(sf.rgb8.size());
  for (size_t i = 0; i < sf.rgb8.size(); ++i) f.rgb[i] = sf.rgb8[i] / 255.f;
  f.depth = sf.depth;
  return f;
}

}  // namespace

Episode::Episode(const EpisodeConfig& cfg) : cfg_(cfg) {
  cfg_.validate();
  scout_kind_ = parse_scout_policy(cfg_.scout_policy);
  target_kind_ = parse_target_policy(cfg_.target_policy);
  map_ = load_map(cfg_.map_path);
  cam_ = cfg_.camera;

  gt_graph_ = build_ground_graph(map_, cfg_.grid_spacing, cfg_.eight_connected);
  if (gt_graph_.size() == 0) throw config_error("map has no free ground cells");
  separate_filter_graph_ = scout_kind_ == ScoutPolicy::NerfMi;
  if (separate_filter_graph_) {
    CityMap open = map_;
    open.buildings.clear();
    filter_graph_ = build_ground_graph(open, cfg_.grid_spacing, cfg_.eight_connected);
  } else {
    filter_graph_ = gt_graph_;
  }

  lattice_ = std::make_unique<FlightLattice>(map_, cfg_.flight.lattice_spacing,
                                             cfg_.flight.z_min);

  if (scout_kind_ == ScoutPolicy::NerfMi) {
    Box3 box{Vec3(map_.bounds.xmin, map_.bounds.ymin, 0.0),
             Vec3(map_.bounds.xmax, map_.bounds.ymax, map_.altitude_cap)};
    field_ = std::make_unique<FieldEnsemble>(box, cfg_.field, cam_);
  }

  bank_ = FilterBank(filter_graph_);
  seen_ = SeenBuffer(gt_graph_.size(), cfg_.seen_reset_period);
  kernel_ = MotionKernel::corner_escape(cfg_.kernel_radius, cfg_.kernel_center,
                                        cfg_.kernel_corner);

  // Independent seeded streams per consumer.
  rng_detect_ = Rng::derive(cfg_.seed, "detect");
  rng_boot_ = Rng::derive(cfg_.seed, "bootstrap");
  rng_train_ = Rng::derive(cfg_.seed, "train");
  rng_cand_ = Rng::derive(cfg_.seed, "candidates");
  rng_sel_ = Rng::derive(cfg_.seed, "select");
  rng_targets_ = Rng::derive(cfg_.seed, "targets");
  rng_scan_ = Rng::derive(cfg_.seed, "initscan");

  // Targets start on distinct free ground nodes.
  Rng rng_init = Rng::derive(cfg_.seed, "targets_init");
  std::vector<uint8_t> taken(gt_graph_.size(), 0);
  for (int i = 0; i < cfg_.target_count; ++i) {
    int node = -1;
    for (int it = 0; it < 100000; ++it) {
      const int cand = static_cast<int>(rng_init.uniform_int(
          static_cast<uint32_t>(gt_graph_.size())));
      if (!taken[cand]) {
        node = cand;
        break;
      }
    }
    if (node < 0) throw config_error("not enough free cells for targets");
    taken[node] = 1;
    TargetState t;
    t.id = i;
    t.node = node;
    t.policy = target_kind_;
    t.budget_m = target_kind_ == TargetPolicyKind::Goal ? cfg_.goal_budget_m
                                                        : cfg_.active_budget_m;
    targets_.push_back(t);
  }

  pose_.position = Vec3(cfg_.start_x, cfg_.start_y, cfg_.start_z);
  pose_.yaw = cfg_.start_yaw;
  pose_.pitch = cfg_.start_pitch;
  if (point_in_prism(map_, pose_.position))
    throw config_error("scout start position is inside a building");

  // Scoring/candidate wiring shared by every planning step.
  world_.map = &map_;
  world_.filter_graph = &filter_graph_;
  world_.lattice = lattice_.get();
  world_.field = field_.get();
  world_.scoring.mode =
      scout_kind_ == ScoutPolicy::NerfMi ? ScoreMode::WithField : ScoreMode::FiltersOnly;
  world_.scoring.map = &map_;
  world_.scoring.graph = &filter_graph_;
  world_.scoring.field = field_.get();
  world_.scoring.cam = cam_;
  world_.scoring.mi_width = cfg_.mi_width;
  world_.scoring.mi_height = cfg_.mi_height;
  world_.scoring.p_detect = cfg_.p_detect;
  world_.scoring.visibility.sigma_threshold = cfg_.sigma_threshold;
  world_.scoring.visibility.endpoint_margin = cfg_.endpoint_margin;
  world_.scoring.visibility.ground_clearance = cfg_.ground_clearance;
  world_.scoring.weights = cfg_.objective;
  world_.candidates = cfg_.candidates;
  if (world_.candidates.z_max <= 0) world_.candidates.z_max = map_.altitude_cap;
  world_.candidates.z_min = std::min(world_.candidates.z_min, world_.candidates.z_max);
  world_.flight = cfg_.flight;
  world_.selection = parse_selection(cfg_.selection);

  log_.map_name = stem_of(cfg_.map_path);
  log_.map_path = cfg_.map_path;
  log_.scout_policy = cfg_.scout_policy;
  log_.target_policy = cfg_.target_policy;
  log_.method_label = method_label(cfg_);
  log_.seed = cfg_.seed;
  log_.target_count = cfg_.target_count;
}

void Episode::set_field(std::unique_ptr<FieldEnsemble> field) {
  field_ = std::move(field);
  world_.field = field_.get();
  world_.scoring.field = field_.get();
}

std::vector<uint8_t> Episode::filter_visibility(const PoseSE3& pose) const {
  if (scout_kind_ != ScoutPolicy::NerfMi) return visible_cells_gt(map_, pose, cam_, filter_graph_);
  std::vector<uint8_t> mask(filter_graph_.size(), 0);
  FieldVisibilityParams params;
  params.sigma_threshold = cfg_.sigma_threshold;
  params.endpoint_margin = cfg_.endpoint_margin;
  params.ground_clearance = cfg_.ground_clearance;
  for (size_t j = 0; j < filter_graph_.size(); ++j) {
    const Vec3 p(filter_graph_.nodes[j].x(), filter_graph_.nodes[j].y(), 0.0);
    mask[j] = visible_from_field(*field_, pose, cam_, p, params);
  }
  return mask;
}

void Episode::tick(const PoseSE3& pose, int planning_step, const std::string& out_dir) {
  // Simulator-level safety net: executed poses must be collision-free in the
  // true map, whatever representation the policy planned on.
  if (point_in_prism(map_, pose.position))
    throw runtime_error_("executed pose is inside a building at tick " +
                         std::to_string(tick_index_));
  pose_ = pose;

  const RgbdFrame frame = render_rgbd(map_, pose, cam_);
  if (field_) field_->add_observation(frame, rng_boot_);
  if (cfg_.export_frames && !out_dir.empty()) {
    char name[64];
    std::snprintf(name, sizeof(name), "frame_%05d", tick_index_);
    save_frame_png(frame, out_dir + "/frames/" + name + ".png");
    save_depth_f32(frame, out_dir + "/frames/" + name + ".f32");
  }

  std::vector<Vec2> positions;
  positions.reserve(targets_.size());
  for (const TargetState& t : targets_) positions.push_back(gt_graph_.nodes[t.node]);
  DetectionModel dm;
  dm.p_detect = cfg_.p_detect;
  const std::vector<Detection> detections =
      detect_targets(map_, pose, cam_, positions, rng_detect_, dm);

  bank_.predict_all(kernel_, filter_graph_);
  bank_.observe(detections, filter_graph_);

  const std::vector<uint8_t> mask_gt = visible_cells_gt(map_, pose, cam_, gt_graph_);
  const std::vector<uint8_t> mask_filter =
      scout_kind_ == ScoutPolicy::NerfMi ? filter_visibility(pose) : mask_gt;

  std::vector<uint8_t> detected(targets_.size(), 0);
  for (const Detection& d : detections) detected[d.target_id] = 1;
  for (GridFilter& f : bank_.filters_mut()) {
    const bool was_detected = f.target_id >= 0 &&
                              f.target_id < static_cast<int>(detected.size()) &&
                              detected[f.target_id];
    if (!was_detected) update_no_detection(f, mask_filter, cfg_.p_detect);
  }

  seen_.observe(mask_gt);

  TickRecord rec;
  rec.tick = tick_index_;
  rec.planning_step = planning_step;
  rec.pose = pose;
  rec.detections = static_cast<int>(detections.size());
  rec.true_x.resize(targets_.size());
  rec.true_y.resize(targets_.size());
  rec.est_x.resize(targets_.size());
  rec.est_y.resize(targets_.size());
  rec.err.resize(targets_.size());
  for (size_t i = 0; i < targets_.size(); ++i) {
    const Vec2 truth = gt_graph_.nodes[targets_[i].node];
    const GridFilter* f = bank_.filter_for(static_cast<int>(i));
    if (!f) f = &bank_.filters().back();  // undiscovered: the spare's estimate
    const Vec2 est = estimate(*f, filter_graph_);
    rec.true_x[i] = truth.x();
    rec.true_y[i] = truth.y();
    rec.est_x[i] = est.x();
    rec.est_y[i] = est.y();
    rec.err[i] = rmse(truth, est);
    if (rec.min_id < 0 || rec.err[i] < rec.min_err) {
      rec.min_err = rec.err[i];
      rec.min_id = static_cast<int>(i);
    }
    if (rec.max_id < 0 || rec.err[i] > rec.max_err) {
      rec.max_err = rec.err[i];
      rec.max_id = static_cast<int>(i);
    }
  }
  if (cfg_.export_filters && !out_dir.empty()) {
    for (const GridFilter& f : bank_.filters()) {
      char name[96];
      std::snprintf(name, sizeof(name), "step_%05d_target_%d.csv", tick_index_, f.target_id);
      std::ofstream out(out_dir + "/filters/" + name);
      out << "x,y,weight\n";
      for (size_t j = 0; j < f.w.size(); ++j)
        out << filter_graph_.nodes[j].x() << ',' << filter_graph_.nodes[j].y() << ',' << f.w[j]
            << '\n';
    }
  }
  log_.ticks.push_back(std::move(rec));
  ++tick_index_;
}

double Episode::eval_psnr_recent() const {
  if (!field_ || field_->frames().empty()) return std::numeric_limits<double>::quiet_NaN();
  const auto& frames = field_->frames();
  const size_t n = std::min<size_t>(cfg_.psnr_frames, frames.size());
  double sum = 0;
  for (size_t i = frames.size() - n; i < frames.size(); ++i) {
    const RgbdFrame truth = frame_from_stored(frames[i]);
    const RgbdFrame pred = field_->render_frame(frames[i].pose, frames[i].cam);
    sum += psnr(pred, truth);
  }
  return sum / static_cast<double>(n);
}

void Episode::train_and_eval_psnr(PlanRecord* rec) {
  if (!field_) return;
  const int budget = cfg_.train_steps_per_planning;
  const int first = std::min(2000, budget);
  for (int s = 0; s < first; ++s) field_->train_step(rng_train_);
  rec->psnr2k = eval_psnr_recent();
  if (budget > 2000) {
    for (int s = 0; s < budget - 2000; ++s) field_->train_step(rng_train_);
    rec->psnr4k = eval_psnr_recent();
  }
}

void Episode::step_targets(int planning_step) {
  (void)planning_step;
  for (TargetState& t : targets_) {
    switch (t.policy) {
      case TargetPolicyKind::Stationary:
        target_step_stationary(t);
        break;
      case TargetPolicyKind::Active:
        target_step_active(t, seen_, gt_graph_, rng_targets_);
        break;
      case TargetPolicyKind::Goal:
        target_step_goal(t, gt_graph_, rng_targets_);
        break;
    }
  }
}

MetricsLog Episode::run(const std::string& out_dir) {
  namespace fs = std::filesystem;
  std::ofstream scores_csv;
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    if (cfg_.export_frames) fs::create_directories(out_dir + "/frames");
    if (cfg_.export_filters) fs::create_directories(out_dir + "/filters");
    std::ofstream cfg_out(out_dir + "/config.json");
    cfg_out << config_to_json(cfg_) << "\n";
    if (cfg_.export_scores) {
      scores_csv.open(out_dir + "/scores.csv");
      scores_csv << "planning_step,dist,particle,x,y,z,yaw,pitch,score\n";
    }
  }

  auto flush = [&]() {
    if (out_dir.empty()) return;
    write_episode_csvs(log_, out_dir);
    write_summary_json(log_.summarize(2.0 * cfg_.grid_spacing), out_dir + "/summary.json");
  };

  try {
    // Initialization: climb to altitude, then one yaw revolution with pitch
    // jitter, one image per step.
    const double init_alt = cfg_.init_altitude > 0
                                ? std::min(cfg_.init_altitude, map_.altitude_cap)
                                : 0.9 * map_.altitude_cap;
    const int n_up = std::max(1, static_cast<int>(std::lround(cfg_.init_images *
                                                              cfg_.ascend_fraction)));
    const int n_scan = std::max(1, cfg_.init_images - n_up);
    for (int i = 0; i < cfg_.init_images; ++i) {
      PoseSE3 p = pose_;
      p.position.x() = cfg_.start_x;
      p.position.y() = cfg_.start_y;
      if (i < n_up) {
        const double u = static_cast<double>(i + 1) / n_up;
        p.position.z() = cfg_.start_z + (init_alt - cfg_.start_z) * u;
        p.yaw = cfg_.start_yaw;
        p.pitch = cfg_.init_pitch_base;
      } else {
        const double u = static_cast<double>(i - n_up + 1) / n_scan;
        p.position.z() = init_alt;
        p.yaw = wrap_angle(cfg_.start_yaw + kTwoPi * u);
        p.pitch = cfg_.init_pitch_base +
                  cfg_.init_pitch_jitter * (2.0 * rng_scan_.uniform() - 1.0);
      }
      tick(p, -1, out_dir);
    }
    if (field_) {
      for (int s = 0; s < cfg_.init_training_steps; ++s) field_->train_step(rng_train_);
    }

    for (int p = 0; p < cfg_.planning_steps; ++p) {
      seen_.reset_if_due(p);

      const ScoutDecision decision =
          scout_step(scout_kind_, pose_, bank_.filters(), world_, rng_cand_, rng_sel_);
      if (scores_csv.is_open()) {
        for (size_t d = 0; d < decision.candidates.dists.size(); ++d) {
          const CandidateDistribution& dist = decision.candidates.dists[d];
          for (size_t q = 0; q < dist.particles.size(); ++q) {
            const PoseSE3& cp = dist.particles[q];
            char line[256];
            std::snprintf(line, sizeof(line), "%d,%zu,%zu,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g\n", p, d,
                          q, cp.position.x(), cp.position.y(), cp.position.z(), cp.yaw, cp.pitch,
                          dist.scores[q]);
            scores_csv << line;
          }
        }
      }

      step_targets(p);

      const std::vector<PoseSE3> poses = sample_plan(decision.plan, cfg_.control_steps);
      const size_t first_tick = log_.ticks.size();
      for (const PoseSE3& p_exec : poses) tick(p_exec, p, out_dir);

      PlanRecord rec;
      rec.planning_step = p;
      rec.chosen = decision.chosen;
      rec.total = decision.chosen_score.total;
      rec.i_rgb = decision.chosen_score.i_rgb;
      rec.i_depth = decision.chosen_score.i_depth;
      rec.i_occ = decision.chosen_score.i_occ;
      rec.i_detect = decision.chosen_score.i_detect;
      for (size_t t = first_tick; t < log_.ticks.size(); ++t) {
        const TickRecord& tr = log_.ticks[t];
        if (tr.min_id >= 0 && (std::isnan(rec.min_rmse) || tr.min_err < rec.min_rmse)) {
          rec.min_rmse = tr.min_err;
          rec.min_id = tr.min_id;
        }
        if (tr.max_id >= 0 && (std::isnan(rec.max_rmse) || tr.max_err > rec.max_rmse)) {
          rec.max_rmse = tr.max_err;
          rec.max_id = tr.max_id;
        }
      }
      train_and_eval_psnr(&rec);
      log_.plans.push_back(rec);
    }
  } catch (...) {
    flush();
    throw;
  }
  flush();
  return log_;
}

MetricsLog run_episode(const EpisodeConfig& cfg, const std::string& out_dir) {
  if (cfg.offline_pretrain && parse_scout_policy(cfg.scout_policy) == ScoutPolicy::NerfMi) {
    // Scene pretraining pass: targetless field-driven exploration, full
    // budget, no outputs; the trained field seeds the real episode.
    EpisodeConfig pre = cfg;
    pre.offline_pretrain = false;
    pre.target_count = 0;
    pre.planning_steps = cfg.offline_pretrain_steps;
    pre.train_steps_per_planning = 4000;
    pre.seed = Rng::splitmix64(cfg.seed ^ 0x0ff11e5eedull);
    pre.export_frames = false;
    pre.export_filters = false;
    pre.export_scores = false;
    Episode pretrain(pre);
    pretrain.run("");
    Episode ep(cfg);
    ep.set_field(std::make_unique<FieldEnsemble>(std::move(*pretrain.field())));
    return ep.run(out_dir);
  }
  Episode ep(cfg);
  return ep.run(out_dir);
}

}  // namespace scoutsim
