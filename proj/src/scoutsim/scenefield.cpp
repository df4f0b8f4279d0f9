#include "scoutsim/scenefield.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

namespace scoutsim {

namespace {
constexpr float kTransmitFloor = 1e-5f;  // march early-out; escape stays exact
constexpr double kEscClamp = 1e-6;
constexpr double kEscGradClip = 50.0;
}  // namespace

bool Box3::clip_ray(const Vec3& o, const Vec3& d, double* t0, double* t1) const {
  double lo_t = 0.0, hi_t = std::numeric_limits<double>::infinity();
  for (int a = 0; a < 3; ++a) {
    const double da = d[a];
    if (std::abs(da) < 1e-15) {
      if (o[a] < lo[a] || o[a] > hi[a]) return false;
      continue;
    }
    double ta = (lo[a] - o[a]) / da;
    double tb = (hi[a] - o[a]) / da;
    if (ta > tb) std::swap(ta, tb);
    lo_t = std::max(lo_t, ta);
    hi_t = std::min(hi_t, tb);
  }
  if (hi_t <= lo_t) return false;
  *t0 = lo_t;
  *t1 = hi_t;
  return true;
}

VoxelMember::VoxelMember(const Box3& bounds, int nx, int ny, int nz, float raw_init,
                         float density_scale)
    : bounds_(bounds), nx_(nx), ny_(ny), nz_(nz), density_scale_(density_scale) {
  if (nx < 2 || ny < 2 || nz < 2) throw invalid_error("voxel grid needs >= 2 cells per axis");
  cell_ = Vec3((bounds.hi.x() - bounds.lo.x()) / nx, (bounds.hi.y() - bounds.lo.y()) / ny,
               (bounds.hi.z() - bounds.lo.z()) / nz);
  const size_t n = static_cast<size_t>(nx) * ny * nz;
  raw_.assign(n, raw_init);
  color_.assign(n * 3, 0.5f);
  rebuild_sigma_cache();
}

void VoxelMember::rebuild_sigma_cache() {
  sigma_.resize(raw_.size());
  for (size_t i = 0; i < raw_.size(); ++i) sigma_[i] = softplus(raw_[i]) * density_scale_;
}

void VoxelMember::corners(const Vec3& p, int32_t idx[8], float w[8]) const {
  // Continuous coordinates on the voxel-center lattice, clamped to the edge.
  double q[3];
  int i0[3];
  float f[3];
  const int n[3] = {nx_, ny_, nz_};
  for (int a = 0; a < 3; ++a) {
    q[a] = (p[a] - bounds_.lo[a]) / cell_[a] - 0.5;
    q[a] = std::clamp(q[a], 0.0, static_cast<double>(n[a] - 1));
    i0[a] = std::min(static_cast<int>(q[a]), n[a] - 2);
    f[a] = static_cast<float>(q[a] - i0[a]);
  }
  const int32_t sx = static_cast<int32_t>(ny_) * nz_;
  const int32_t sy = nz_;
  const int32_t base = static_cast<int32_t>(index(i0[0], i0[1], i0[2]));
  const float gx = 1.f - f[0], gy = 1.f - f[1], gz = 1.f - f[2];
  idx[0] = base;
  idx[1] = base + 1;
  idx[2] = base + sy;
  idx[3] = base + sy + 1;
  idx[4] = base + sx;
  idx[5] = base + sx + 1;
  idx[6] = base + sx + sy;
  idx[7] = base + sx + sy + 1;
  w[0] = gx * gy * gz;
  w[1] = gx * gy * f[2];
  w[2] = gx * f[1] * gz;
  w[3] = gx * f[1] * f[2];
  w[4] = f[0] * gy * gz;
  w[5] = f[0] * gy * f[2];
  w[6] = f[0] * f[1] * gz;
  w[7] = f[0] * f[1] * f[2];
}

float VoxelMember::sigma_at(const Vec3& p) const {
  int32_t idx[8];
  float w[8];
  corners(p, idx, w);
  float s = 0;
  for (int k = 0; k < 8; ++k) s += w[k] * sigma_[idx[k]];
  return s;
}

void VoxelMember::sample_at(const Vec3& p, float* sigma, float rgb[3]) const {
  int32_t idx[8];
  float w[8];
  corners(p, idx, w);
  float s = 0, r = 0, g = 0, b = 0;
  for (int k = 0; k < 8; ++k) {
    const float wk = w[k];
    s += wk * sigma_[idx[k]];
    const float* c = &color_[static_cast<size_t>(idx[k]) * 3];
    r += wk * c[0];
    g += wk * c[1];
    b += wk * c[2];
  }
  *sigma = s;
  rgb[0] = r;
  rgb[1] = g;
  rgb[2] = b;
}

PixelSample render_ray(const VoxelMember& m, const Vec3& origin, const Vec3& dir, int quadrature,
                       double near_clip, double max_range) {
  PixelSample out;
  double t0, t1;
  if (!m.bounds().clip_ray(origin, dir, &t0, &t1)) return out;
  t0 = std::max(t0, near_clip);
  t1 = std::min(t1, max_range);
  if (t1 <= t0) return out;

  const float delta = static_cast<float>((t1 - t0) / quadrature);
  float T = 1.f;
  float rgb[3] = {0, 0, 0}, wc2[3] = {0, 0, 0};
  float depth = 0, ws2 = 0, wsum = 0;
  for (int i = 0; i < quadrature; ++i) {
    const float s = static_cast<float>(t0) + (i + 0.5f) * delta;
    float sigma, c[3];
    m.sample_at(origin + static_cast<double>(s) * dir, &sigma, c);
    const float alpha = 1.f - std::exp(-sigma * delta);
    const float w = T * alpha;
    for (int ch = 0; ch < 3; ++ch) {
      rgb[ch] += w * c[ch];
      wc2[ch] += w * c[ch] * c[ch];
    }
    depth += w * s;
    ws2 += w * s * s;
    wsum += w;
    T -= w;  // keeps sum(w) + T == 1 exactly
    if (T < kTransmitFloor) break;
  }
  for (int ch = 0; ch < 3; ++ch) {
    out.rgb[ch] = rgb[ch];
    out.var_rgb[ch] = std::max(0.f, wc2[ch] - rgb[ch] * rgb[ch] * (2.f - wsum));
  }
  out.depth = depth;
  out.var_depth = std::max(0.f, ws2 - depth * depth * (2.f - wsum));
  out.escape = T;
  return out;
}

RenderSample render_member(const VoxelMember& m, const PoseSE3& pose, const CameraModel& cam,
                           int quadrature, double near_clip) {
  RenderSample out;
  out.width = cam.width;
  out.height = cam.height;
  out.px.resize(static_cast<size_t>(cam.width) * cam.height);
  for (int v = 0; v < cam.height; ++v) {
    for (int u = 0; u < cam.width; ++u) {
      Vec3 o, d;
      pixel_ray(pose, cam, u, v, &o, &d);
      out.px[static_cast<size_t>(v) * cam.width + u] =
          render_ray(m, o, d, quadrature, near_clip, cam.max_range);
    }
  }
  return out;
}

LossTerms batch_loss_and_grad(const VoxelMember& m, const std::vector<TrainRay>& rays,
                              const LossWeights& lw, int quadrature, double near_clip,
                              SparseGrad* grads) {
  LossTerms out;
  if (rays.empty()) return out;

  const int n_max = quadrature;
  std::vector<int32_t> idx(static_cast<size_t>(n_max) * 8);
  std::vector<float> w8(static_cast<size_t>(n_max) * 8);
  std::vector<float> svals(n_max), alpha(n_max), Tvals(n_max), wvals(n_max);
  std::vector<float> cvals(static_cast<size_t>(n_max) * 3);
  if (grads) {
    grads->raw.reserve(grads->raw.size() + rays.size() * n_max * 8);
  }
  const float scale = m.density_scale();

  for (const TrainRay& ray : rays) {
    double t0, t1;
    int n_used = 0;
    float rgb[3] = {0, 0, 0}, depth = 0, T = 1.f;
    float delta = 0;
    if (m.bounds().clip_ray(ray.origin, ray.dir, &t0, &t1)) {
      t0 = std::max(t0, near_clip);
      t1 = std::min(t1, 1e9);
      if (t1 > t0) {
        delta = static_cast<float>((t1 - t0) / quadrature);
        for (int i = 0; i < quadrature; ++i) {
          const float s = static_cast<float>(t0) + (i + 0.5f) * delta;
          int32_t* ii = &idx[static_cast<size_t>(i) * 8];
          float* ww = &w8[static_cast<size_t>(i) * 8];
          m.corners(ray.origin + static_cast<double>(s) * ray.dir, ii, ww);
          float sig = 0, r = 0, g = 0, b = 0;
          for (int k = 0; k < 8; ++k) {
            sig += ww[k] * m.sigma(ii[k]);
            const float* c = m.color3(ii[k]);
            r += ww[k] * c[0];
            g += ww[k] * c[1];
            b += ww[k] * c[2];
          }
          const float a = 1.f - std::exp(-sig * delta);
          const float w = T * a;
          svals[i] = s;
          alpha[i] = a;
          Tvals[i] = T;
          wvals[i] = w;
          cvals[i * 3 + 0] = r;
          cvals[i * 3 + 1] = g;
          cvals[i * 3 + 2] = b;
          rgb[0] += w * r;
          rgb[1] += w * g;
          rgb[2] += w * b;
          depth += w * s;
          T -= w;
          n_used = i + 1;
          if (T < kTransmitFloor) break;
        }
      }
    }
    const double esc = std::clamp(static_cast<double>(T), kEscClamp, 1.0 - kEscClamp);
    const double target = ray.sky ? 1.0 : 0.0;

    double l_rgb = 0, l_depth = 0;
    float g_rgb[3] = {0, 0, 0};
    double g_depth = 0;
    if (!ray.sky) {
      for (int ch = 0; ch < 3; ++ch) {
        const double dcol = rgb[ch] - ray.gt_rgb[ch];
        l_rgb += std::abs(dcol) / 3.0;
        g_rgb[ch] = static_cast<float>(lw.lambda_rgb * (dcol > 0 ? 1.0 : -1.0) / 3.0);
      }
      const double ddep = depth - ray.gt_depth;
      l_depth = std::abs(ddep);
      g_depth = lw.lambda_depth * (ddep > 0 ? 1.0 : -1.0);
      out.hit_rays++;
    } else {
      out.sky_rays++;
    }
    const double l_esc = -(target * std::log(esc) + (1.0 - target) * std::log(1.0 - esc));
    out.rgb += l_rgb;
    out.depth += l_depth;
    out.escape += l_esc;
    out.weighted += lw.lambda_rgb * l_rgb + lw.lambda_depth * l_depth + lw.lambda_escape * l_esc;

    if (!grads || n_used == 0) continue;
    const double g_esc_raw = (esc - target) / (esc * (1.0 - esc));
    const float g_esc = static_cast<float>(
        lw.lambda_escape * std::clamp(g_esc_raw, -kEscGradClip, kEscGradClip) / rays.size());
    const float inv_rays = 1.f / static_cast<float>(rays.size());
    const float gd = static_cast<float>(g_depth) * inv_rays;
    float gr[3];
    for (int ch = 0; ch < 3; ++ch) gr[ch] = g_rgb[ch] * inv_rays;

    // Backward sweep: S accumulates d(loss)/d(w_j) * w_j for j > i plus the
    // escape path through T_end.
    float S = g_esc * T;
    const bool want_color = !ray.sky;
    for (int i = n_used - 1; i >= 0; --i) {
      const float* c = &cvals[static_cast<size_t>(i) * 3];
      const float Gi = gr[0] * c[0] + gr[1] * c[1] + gr[2] * c[2] + gd * svals[i];
      const float dsig = delta * ((1.f - alpha[i]) * Tvals[i] * Gi - S);
      S += Gi * wvals[i];
      const int32_t* ii = &idx[static_cast<size_t>(i) * 8];
      const float* ww = &w8[static_cast<size_t>(i) * 8];
      if (dsig != 0.f) {
        for (int k = 0; k < 8; ++k) {
          // d(sigma)/d(raw) = sigmoid(raw)*scale; sigmoid recovered from the
          // cached sigma as 1 - exp(-softplus).
          const float sp = m.sigma(ii[k]) / scale;
          const float dsd = (1.f - std::exp(-sp)) * scale;
          grads->raw.emplace_back(ii[k], ww[k] * dsd * dsig);
        }
      }
      if (want_color && wvals[i] > 1e-9f) {
        for (int k = 0; k < 8; ++k) {
          const float ws = ww[k] * wvals[i];
          grads->color.emplace_back(ii[k] * 3 + 0, ws * gr[0]);
          grads->color.emplace_back(ii[k] * 3 + 1, ws * gr[1]);
          grads->color.emplace_back(ii[k] * 3 + 2, ws * gr[2]);
        }
      }
    }
  }
  const double inv = 1.0 / rays.size();
  out.rgb *= inv;
  out.depth *= inv;
  out.escape *= inv;
  out.weighted *= inv;
  return out;
}

void apply_sgd(VoxelMember& m, const SparseGrad& grads, float lr) {
  for (const auto& [i, g] : grads.raw) m.set_raw(i, m.raw(i) - lr * g);
  auto& colors = m.color_data_mut();
  for (const auto& [i, g] : grads.color)
    colors[i] = std::clamp(colors[i] - lr * g, 0.f, 1.f);
}

FieldEnsemble::FieldEnsemble(const Box3& bounds, const FieldConfig& cfg, const CameraModel& cam)
    : cfg_(cfg), cam_(cam) {
  for (int k = 0; k < kMembers; ++k) {
    members_[k] = VoxelMember(bounds, cfg.nx, cfg.ny, cfg.nz, cfg.raw_init, cfg.density_scale);
    opt_[k].lambda_depth = cfg.lambda_depth;
  }
}

double FieldEnsemble::current_lr(int k) const {
  const auto steps = opt_[k].step / std::max(1, cfg_.lr_decay_every);
  return cfg_.lr * std::pow(cfg_.lr_decay, static_cast<double>(steps));
}

void FieldEnsemble::add_observation(const RgbdFrame& frame, Rng& rng) {
  StoredFrame sf;
  sf.pose = frame.pose;
  sf.cam = cam_;
  sf.cam.width = frame.width;
  sf.cam.height = frame.height;
  sf.rgb8.resize(frame.rgb.size());
  for (size_t i = 0; i < frame.rgb.size(); ++i)
    sf.rgb8[i] = static_cast<uint8_t>(std::lround(std::clamp(frame.rgb[i], 0.f, 1.f) * 255.f));
  sf.depth = frame.depth;
  const int fid = static_cast<int>(frames_.size());
  frames_.push_back(std::move(sf));
  for (int k = 0; k < kMembers; ++k) {
    const int copies = rng.poisson1();
    for (int c = 0; c < copies; ++c) datasets_[k].push_back(fid);
  }
}

std::vector<TrainRay> FieldEnsemble::assemble_batch(int member, int batch_rays, Rng& rng) const {
  const std::vector<int>& entries = datasets_[member];
  if (entries.empty()) throw runtime_error_("train_step: member dataset is empty");
  std::vector<TrainRay> rays;
  rays.reserve(batch_rays);
  const Box3& box = members_[member].bounds();
  for (int j = 0; j < batch_rays; ++j) {
    const bool recent = 2 * j < batch_rays;
    size_t pick;
    if (recent) {
      const size_t win = std::min<size_t>(cfg_.recent_window, entries.size());
      pick = entries.size() - win + rng.uniform_int(static_cast<uint32_t>(win));
    } else {
      pick = rng.uniform_int(static_cast<uint32_t>(entries.size()));
    }
    const StoredFrame& f = frames_[entries[pick]];
    const int u = static_cast<int>(rng.uniform_int(f.cam.width));
    const int v = static_cast<int>(rng.uniform_int(f.cam.height));
    TrainRay ray;
    pixel_ray(f.pose, f.cam, u, v, &ray.origin, &ray.dir);
    const size_t pi = static_cast<size_t>(v) * f.cam.width + u;
    for (int ch = 0; ch < 3; ++ch) ray.gt_rgb[ch] = f.rgb8[pi * 3 + ch] / 255.f;
    // Stored depth is planar; the quadrature works in ray arc length.
    const double cos_axis = ray.dir.dot(camera_basis(f.pose).forward);
    ray.gt_depth = static_cast<float>(f.depth[pi] / std::max(cos_axis, 1e-6));
    ray.sky = f.depth[pi] > f.cam.max_range;
    if (!ray.sky) {
      const Vec3 hit = ray.origin + static_cast<double>(ray.gt_depth) * ray.dir;
      if (!box.contains(hit, 0.5)) ray.sky = true;  // true hit lies outside the field volume
    }
    rays.push_back(ray);
  }
  return rays;
}

void FieldEnsemble::apply_update(int member, const SparseGrad& grads, float lr) {
  if (cfg_.optimizer == "sgd") {
    apply_sgd(members_[member], grads, lr);
    return;
  }
  // Sparse Adam: aggregate duplicate touches, then moment-normalized steps on
  // the touched parameters only.
  VoxelMember& m = members_[member];
  AdamState& st = adam_[member];
  if (st.m_raw.empty()) {
    st.m_raw.assign(m.voxel_count(), 0.f);
    st.v_raw.assign(m.voxel_count(), 0.f);
    st.m_color.assign(m.voxel_count() * 3, 0.f);
    st.v_color.assign(m.voxel_count() * 3, 0.f);
  }
  if (scratch_.buf_raw.size() < m.voxel_count()) {
    scratch_.buf_raw.assign(m.voxel_count(), 0.f);
    scratch_.buf_color.assign(m.voxel_count() * 3, 0.f);
  }
  auto aggregate = [](const std::vector<std::pair<int32_t, float>>& pairs,
                      std::vector<float>& buf, std::vector<int32_t>& touched) {
    touched.clear();
    for (const auto& [i, g] : pairs) {
      if (buf[i] == 0.f) touched.push_back(i);
      buf[i] += g;
    }
  };
  constexpr float b1 = 0.9f, b2 = 0.99f, eps = 1e-8f;
  const int64_t t = opt_[member].step + 1;
  const float bc1 = 1.f - std::pow(b1, static_cast<float>(t));
  const float bc2 = 1.f - std::pow(b2, static_cast<float>(t));

  aggregate(grads.raw, scratch_.buf_raw, scratch_.touched_raw);
  for (int32_t i : scratch_.touched_raw) {
    const float g = scratch_.buf_raw[i];
    scratch_.buf_raw[i] = 0.f;
    st.m_raw[i] = b1 * st.m_raw[i] + (1.f - b1) * g;
    st.v_raw[i] = b2 * st.v_raw[i] + (1.f - b2) * g * g;
    const float step = lr * (st.m_raw[i] / bc1) / (std::sqrt(st.v_raw[i] / bc2) + eps);
    m.set_raw(i, m.raw(i) - step);
  }
  aggregate(grads.color, scratch_.buf_color, scratch_.touched_color);
  auto& colors = m.color_data_mut();
  for (int32_t i : scratch_.touched_color) {
    const float g = scratch_.buf_color[i];
    scratch_.buf_color[i] = 0.f;
    st.m_color[i] = b1 * st.m_color[i] + (1.f - b1) * g;
    st.v_color[i] = b2 * st.v_color[i] + (1.f - b2) * g * g;
    const float step = lr * (st.m_color[i] / bc1) / (std::sqrt(st.v_color[i] / bc2) + eps);
    colors[i] = std::clamp(colors[i] - step, 0.f, 1.f);
  }
}

std::array<double, FieldEnsemble::kMembers> FieldEnsemble::train_step(Rng& rng, int batch_rays) {
  if (batch_rays <= 0) batch_rays = cfg_.batch_rays;
  std::array<double, kMembers> losses{};
  SparseGrad grads;
  for (int k = 0; k < kMembers; ++k) {
    const std::vector<TrainRay> rays = assemble_batch(k, batch_rays, rng);
    LossWeights lw;
    lw.lambda_rgb = cfg_.lambda_rgb;
    lw.lambda_depth = opt_[k].lambda_depth;
    lw.lambda_escape = cfg_.lambda_escape;
    grads.clear();
    const LossTerms terms = batch_loss_and_grad(members_[k], rays, lw, cfg_.quadrature,
                                                cfg_.near_clip, &grads);
    apply_update(k, grads, static_cast<float>(current_lr(k)));
    losses[k] = terms.weighted;

    OptimizerState& st = opt_[k];
    st.step++;
    st.run_rgb += terms.rgb;
    st.run_depth += terms.depth;
    st.run_n++;
    if (cfg_.adaptive_balance && st.run_n >= cfg_.balance_every) {
      const double mean_rgb = st.run_rgb / st.run_n;
      const double mean_depth = st.run_depth / st.run_n;
      if (mean_rgb > 1e-12 && mean_depth > 1e-12) {
        const double term_rgb = cfg_.lambda_rgb * mean_rgb;
        const double term_depth = st.lambda_depth * mean_depth;
        if (term_depth > 2.0 * term_rgb || 2.0 * term_depth < term_rgb)
          st.lambda_depth = std::clamp(term_rgb / mean_depth, 1e-9, 1e6);
      }
      st.run_rgb = st.run_depth = 0;
      st.run_n = 0;
    }
  }
  return losses;
}

RgbdFrame FieldEnsemble::render_frame(const PoseSE3& pose, const CameraModel& cam) const {
  RgbdFrame frame;
  frame.width = cam.width;
  frame.height = cam.height;
  frame.pose = pose;
  frame.rgb.resize(static_cast<size_t>(cam.width) * cam.height * 3);
  frame.depth.resize(static_cast<size_t>(cam.width) * cam.height);
  const Vec3f sky = sky_color();
  const Vec3 forward = camera_basis(pose).forward;
  for (int v = 0; v < cam.height; ++v) {
    for (int u = 0; u < cam.width; ++u) {
      Vec3 o, d;
      pixel_ray(pose, cam, u, v, &o, &d);
      const float cos_axis = static_cast<float>(d.dot(forward));
      float rgb[3] = {0, 0, 0};
      float depth = 0;
      for (int k = 0; k < kMembers; ++k) {
        const PixelSample px =
            render_ray(members_[k], o, d, cfg_.quadrature, cfg_.near_clip, cam.max_range);
        for (int ch = 0; ch < 3; ++ch) rgb[ch] += px.rgb[ch] + px.escape * sky[ch];
        depth += px.depth * cos_axis + px.escape * static_cast<float>(cam.no_hit());
      }
      const size_t pi = frame.pixel_index(u, v);
      for (int ch = 0; ch < 3; ++ch)
        frame.rgb[pi * 3 + ch] = std::clamp(rgb[ch] / kMembers, 0.f, 1.f);
      frame.depth[pi] = depth / kMembers;
    }
  }
  return frame;
}

bool FieldEnsemble::point_free(const Vec3& p, double sigma_threshold) const {
  for (int k = 0; k < kMembers; ++k)
    if (members_[k].sigma_at(p) > sigma_threshold) return false;
  return true;
}

double FieldEnsemble::march_step() const { return members_[0].min_cell(); }

double FieldEnsemble::default_sigma_threshold() const {
  return std::log(2.0) / march_step();
}

namespace {
template <typename T>
void write_pod(std::ofstream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}
template <typename T>
void read_pod(std::ifstream& in, T* v) {
  in.read(reinterpret_cast<char*>(v), sizeof(T));
}
constexpr char kFieldMagic[8] = {'S', 'S', 'V', 'F', '0', '0', '0', '1'};
}  // namespace

void FieldEnsemble::save_member(int k, const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw io_error("cannot write checkpoint: " + path);
  const VoxelMember& m = members_[k];
  out.write(kFieldMagic, 8);
  const int32_t dims[3] = {m.nx(), m.ny(), m.nz()};
  write_pod(out, dims);
  const double bounds[6] = {m.bounds().lo.x(), m.bounds().lo.y(), m.bounds().lo.z(),
                            m.bounds().hi.x(), m.bounds().hi.y(), m.bounds().hi.z()};
  write_pod(out, bounds);
  write_pod(out, m.density_scale());
  write_pod(out, opt_[k].step);
  write_pod(out, opt_[k].lambda_depth);
  out.write(reinterpret_cast<const char*>(m.raw_data().data()),
            static_cast<std::streamsize>(m.raw_data().size() * sizeof(float)));
  out.write(reinterpret_cast<const char*>(m.color_data().data()),
            static_cast<std::streamsize>(m.color_data().size() * sizeof(float)));
  if (!out) throw io_error("short write on checkpoint: " + path);
}

void FieldEnsemble::load_member(int k, const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot read checkpoint: " + path);
  char magic[8];
  in.read(magic, 8);
  if (std::memcmp(magic, kFieldMagic, 8) != 0)
    throw config_error("bad checkpoint magic: " + path);
  int32_t dims[3];
  read_pod(in, &dims);
  double bounds[6];
  read_pod(in, &bounds);
  float scale;
  read_pod(in, &scale);
  Box3 box{Vec3(bounds[0], bounds[1], bounds[2]), Vec3(bounds[3], bounds[4], bounds[5])};
  VoxelMember m(box, dims[0], dims[1], dims[2], 0.f, scale);
  read_pod(in, &opt_[k].step);
  read_pod(in, &opt_[k].lambda_depth);
  in.read(reinterpret_cast<char*>(m.raw_data_mut().data()),
          static_cast<std::streamsize>(m.raw_data_mut().size() * sizeof(float)));
  in.read(reinterpret_cast<char*>(m.color_data_mut().data()),
          static_cast<std::streamsize>(m.color_data_mut().size() * sizeof(float)));
  if (!in) throw io_error("short read on checkpoint: " + path);
  m.rebuild_sigma_cache();
  members_[k] = std::move(m);
}

bool visible_from_field(const FieldEnsemble& field, const PoseSE3& pose, const CameraModel& cam,
                        const Vec3& point, const FieldVisibilityParams& params) {
  if (!in_frustum(pose, cam, point)) return false;
  const VoxelMember& m0 = field.member(0);
  const double step = field.march_step();
  const double threshold =
      params.sigma_threshold > 0 ? params.sigma_threshold : field.default_sigma_threshold();
  const double margin =
      params.endpoint_margin > 0
          ? params.endpoint_margin
          : 1.5 * std::max(m0.cell().x(), std::max(m0.cell().y(), m0.cell().z()));
  const double clearance =
      params.ground_clearance > 0 ? params.ground_clearance : 3.0 * m0.cell().z();
  const Vec3 delta = point - pose.position;
  const double dist = delta.norm();
  double t_end = dist - margin;
  if (point.z() < clearance && pose.position.z() > clearance) {
    const double frac = (pose.position.z() - clearance) / (pose.position.z() - point.z());
    t_end = std::min(t_end, dist * frac);
  }
  if (t_end <= step) return true;
  const Vec3 dir = delta / dist;
  for (double t = 0.5 * step; t < t_end; t += step) {
    const Vec3 p = pose.position + t * dir;
    for (int k = 0; k < FieldEnsemble::kMembers; ++k)
      if (field.member(k).sigma_at(p) > threshold) return false;
  }
  return true;
}

double psnr(const RgbdFrame& pred, const RgbdFrame& truth) {
  if (pred.width != truth.width || pred.height != truth.height ||
      pred.rgb.size() != truth.rgb.size())
    throw invalid_error("psnr: frame dimensions differ");
  double mse = 0;
  for (size_t i = 0; i < pred.rgb.size(); ++i) {
    const double d = static_cast<double>(pred.rgb[i]) - truth.rgb[i];
    mse += d * d;
  }
  mse /= static_cast<double>(pred.rgb.size());
  if (mse <= 1e-12) return 99.0;
  return std::min(99.0, 10.0 * std::log10(1.0 / mse));
}

}  // namespace scoutsim
