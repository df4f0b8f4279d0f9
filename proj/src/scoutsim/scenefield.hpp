#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "scoutsim/common.hpp"
#include "scoutsim/pose.hpp"
#include "scoutsim/raysim.hpp"
#include "scoutsim/rng.hpp"

namespace scoutsim {

struct Box3 {
  Vec3 lo{0, 0, 0}, hi{0, 0, 0};
  bool contains(const Vec3& p, double pad = 0.0) const {
    return p.x() >= lo.x() - pad && p.x() <= hi.x() + pad && p.y() >= lo.y() - pad &&
           p.y() <= hi.y() + pad && p.z() >= lo.z() - pad && p.z() <= hi.z() + pad;
  }
  /// Ray/box slab intersection; false when the ray misses entirely.
  bool clip_ray(const Vec3& o, const Vec3& d, double* t0, double* t1) const;
};

struct FieldConfig {
  int nx = 96, ny = 96, nz = 96;
  int quadrature = 128;   // samples per rendered ray
  int batch_rays = 64;    // rays per training step
  // Plain gradient descent cannot lift densities out of the softplus tail
  // within the per-step training budgets, so moment-normalized updates are
  // the default; "sgd" stays available.
  std::string optimizer = "adam";
  double lr = 0.1;
  int lr_decay_every = 2000;
  double lr_decay = 0.5;
  double lambda_rgb = 1.0;
  double lambda_depth = 0.01;  // rebalanced online against the rgb term
  double lambda_escape = 1.0;
  bool adaptive_balance = true;
  int balance_every = 100;
  int recent_window = 30;  // dataset entries counted as "recent"
  float raw_init = -7.0f;
  float density_scale = 1.0f;  // sigma = softplus(raw) * scale, in 1/m
  double near_clip = 0.5;
};

/// One ensemble member: a trilinearly interpolated voxel grid holding an
/// unconstrained density parameter (raw) with a cached nonnegative density
/// sigma = softplus(raw) * density_scale, plus color in [0,1]^3.
class VoxelMember {
 public:
  VoxelMember() = default;
  VoxelMember(const Box3& bounds, int nx, int ny, int nz, float raw_init, float density_scale);

  const Box3& bounds() const { return bounds_; }
  int nx() const { return nx_; }
  int ny() const { return ny_; }
  int nz() const { return nz_; }
  float density_scale() const { return density_scale_; }
  size_t voxel_count() const { return raw_.size(); }
  Vec3 cell() const { return cell_; }
  double min_cell() const { return std::min(cell_.x(), std::min(cell_.y(), cell_.z())); }

  size_t index(int ix, int iy, int iz) const {
    return (static_cast<size_t>(ix) * ny_ + iy) * nz_ + iz;
  }

  /// Trilinear corner indices/weights for a point (coordinates clamped to the
  /// voxel-center lattice).
  void corners(const Vec3& p, int32_t idx[8], float w[8]) const;

  float sigma_at(const Vec3& p) const;
  void sample_at(const Vec3& p, float* sigma, float rgb[3]) const;

  void set_raw(size_t i, float v) {
    raw_[i] = v;
    sigma_[i] = softplus(v) * density_scale_;
  }
  float raw(size_t i) const { return raw_[i]; }
  float sigma(size_t i) const { return sigma_[i]; }
  float* color3(size_t i) { return &color_[i * 3]; }
  const float* color3(size_t i) const { return &color_[i * 3]; }

  const std::vector<float>& raw_data() const { return raw_; }
  const std::vector<float>& color_data() const { return color_; }
  std::vector<float>& raw_data_mut() { return raw_; }
  std::vector<float>& color_data_mut() { return color_; }
  void rebuild_sigma_cache();

  static float softplus(float x) { return x > 20.f ? x : std::log1p(std::exp(x)); }

 private:
  Box3 bounds_;
  int nx_ = 0, ny_ = 0, nz_ = 0;
  float density_scale_ = 0.01f;
  Vec3 cell_{1, 1, 1};
  std::vector<float> raw_, sigma_, color_;
};

struct PixelSample {
  float rgb[3] = {0, 0, 0};
  float depth = 0;
  float var_rgb[3] = {0, 0, 0};
  float var_depth = 0;
  float escape = 1;
};

struct RenderSample {
  int width = 0, height = 0;
  std::vector<PixelSample> px;
};

PixelSample render_ray(const VoxelMember& m, const Vec3& origin, const Vec3& dir, int quadrature,
                       double near_clip, double max_range);
RenderSample render_member(const VoxelMember& m, const PoseSE3& pose, const CameraModel& cam,
                           int quadrature, double near_clip = 0.5);

struct TrainRay {
  Vec3 origin, dir;
  float gt_rgb[3] = {0, 0, 0};
  float gt_depth = 0;
  bool sky = false;  // true when the ground-truth ray leaves the field volume
};

struct LossWeights {
  double lambda_rgb = 1.0;
  double lambda_depth = 0.01;
  double lambda_escape = 1.0;
};

struct LossTerms {
  double rgb = 0, depth = 0, escape = 0;  // raw (unweighted) batch means
  double weighted = 0;
  int hit_rays = 0, sky_rays = 0;
};

struct SparseGrad {
  std::vector<std::pair<int32_t, float>> raw;    // voxel index -> d(loss)/d(raw)
  std::vector<std::pair<int32_t, float>> color;  // voxel*3+ch  -> d(loss)/d(color)
  void clear() {
    raw.clear();
    color.clear();
  }
};

/// Batch loss with analytic gradients through the quadrature (grads nullable
/// for loss-only evaluation; this is what the finite-difference oracle uses).
LossTerms batch_loss_and_grad(const VoxelMember& m, const std::vector<TrainRay>& rays,
                              const LossWeights& lw, int quadrature, double near_clip,
                              SparseGrad* grads);

void apply_sgd(VoxelMember& m, const SparseGrad& grads, float lr);

struct StoredFrame {
  PoseSE3 pose;
  CameraModel cam;
  std::vector<uint8_t> rgb8;
  std::vector<float> depth;
};

struct OptimizerState {
  int64_t step = 0;
  double lambda_depth = 0.01;
  double run_rgb = 0, run_depth = 0;
  int run_n = 0;
};

/// K=2 bootstrapped members sharing one frame store. Member k trains only on
/// its own dataset (frame ids repeated per bootstrap multiplicity).
class FieldEnsemble {
 public:
  static constexpr int kMembers = 2;

  FieldEnsemble() = default;
  /// cam supplies the intrinsics (fov, max range) used to rebuild training
  /// rays from stored frames; frame dimensions may vary per observation.
  FieldEnsemble(const Box3& bounds, const FieldConfig& cfg, const CameraModel& cam);

  const FieldConfig& config() const { return cfg_; }
  const VoxelMember& member(int k) const { return members_[k]; }
  VoxelMember& member_mut(int k) { return members_[k]; }
  const std::vector<StoredFrame>& frames() const { return frames_; }
  const std::vector<int>& dataset(int k) const { return datasets_[k]; }
  const OptimizerState& opt(int k) const { return opt_[k]; }
  double current_lr(int k) const;

  /// Stores the frame once and appends Poisson(1) bootstrap copies per member
  /// (member 0 draws first, then member 1).
  void add_observation(const RgbdFrame& frame, Rng& rng);

  /// One gradient step per member; returns each member's weighted batch loss.
  /// Half of the batch comes from the recent window, half uniformly from the
  /// whole history.
  std::array<double, kMembers> train_step(Rng& rng, int batch_rays = 0);

  /// Ensemble-mean RGB-D with sky composited where rays escape.
  RgbdFrame render_frame(const PoseSE3& pose, const CameraModel& cam) const;

  /// Free-space probe on the learned grids (used to sample candidate poses).
  bool point_free(const Vec3& p, double sigma_threshold) const;

  void save_member(int k, const std::string& path) const;
  void load_member(int k, const std::string& path);

  /// Default visibility threshold: density whose single-step opacity is 0.5
  /// at the marching step length.
  double default_sigma_threshold() const;
  double march_step() const;

 private:
  std::vector<TrainRay> assemble_batch(int member, int batch_rays, Rng& rng) const;
  void apply_update(int member, const SparseGrad& grads, float lr);

  struct AdamState {
    std::vector<float> m_raw, v_raw, m_color, v_color;
  };
  struct Scratch {
    std::vector<float> buf_raw, buf_color;
    std::vector<int32_t> touched_raw, touched_color;
  };

  FieldConfig cfg_;
  CameraModel cam_;
  std::array<VoxelMember, kMembers> members_;
  std::array<std::vector<int>, kMembers> datasets_;
  std::array<OptimizerState, kMembers> opt_;
  std::array<AdamState, kMembers> adam_;
  Scratch scratch_;
  std::vector<StoredFrame> frames_;
};

struct FieldVisibilityParams {
  double sigma_threshold = 0.0;   // <=0: use ensemble default
  double endpoint_margin = 0.0;   // <=0: 1.5 * max voxel edge
  double ground_clearance = 0.0;  // <=0: 3 * vertical voxel edges
};

/// False when the point is outside the frustum or any marched sample in
/// either member's density grid exceeds the threshold. The march stops short
/// of the endpoint, and for ground-level targets it also stops once the ray
/// drops below the clearance height: the learned ground surface blurs over
/// about a voxel and must not occlude targets standing on it.
bool visible_from_field(const FieldEnsemble& field, const PoseSE3& pose, const CameraModel& cam,
                        const Vec3& point, const FieldVisibilityParams& params = {});

/// 10*log10(1/MSE) over all rgb entries, capped at 99 dB.
double psnr(const RgbdFrame& pred, const RgbdFrame& truth);

}  // namespace scoutsim
