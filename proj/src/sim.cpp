#include "sim.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>

#include "errors.hpp"
#include "pose_solver.hpp"
#include "rng.hpp"

namespace surgnav {

namespace {

constexpr double kPi = 3.14159265358979323846;

double deg(double d) { return d * kPi / 180.0; }

double smoothstep(double u) {
  u = std::clamp(u, 0.0, 1.0);
  return u * u * (3.0 - 2.0 * u);
}

// endpoint-exact linear interpolation
double lerp(double a, double b, double t) {
  if (t >= 1.0) return b;
  return a + (b - a) * t;
}

}  // namespace

SimNoise calibrated_noise() {
  SimNoise n;
  n.mask_radius = 1;
  n.depth_sigma = 0.05;
  n.warp_amp = 0.12;
  n.click_sigma = 3.0;
  return n;
}

SimConfig default_sim_config() {
  SimConfig cfg;
  cfg.K.fx = 1000.0;
  cfg.K.fy = 1000.0;
  cfg.K.cx = 319.5;
  cfg.K.cy = 239.5;
  cfg.K.width = 640;
  cfg.K.height = 480;
  cfg.frames = 300;
  cfg.seed = 1;
  return cfg;
}

ToolMesh make_tool_mesh(double length_mm, double radius_mm, int segments) {
  if (length_mm <= 0 || radius_mm <= 0 || segments < 3)
    throw Error(ErrorCode::ConfigError, "make_tool_mesh: bad dimensions");
  ToolMesh m;
  const double cone_len = std::min(8.0, 0.3 * length_mm);

  m.vertices.push_back(Point3(0, 0, 0));  // apex
  const int ring0 = 1;
  for (int j = 0; j < segments; ++j) {
    const double th = 2.0 * kPi * j / segments;
    m.vertices.push_back(Point3(radius_mm * std::cos(th), radius_mm * std::sin(th), cone_len));
  }
  const int ring1 = ring0 + segments;
  for (int j = 0; j < segments; ++j) {
    const double th = 2.0 * kPi * j / segments;
    m.vertices.push_back(Point3(radius_mm * std::cos(th), radius_mm * std::sin(th), length_mm));
  }
  const int base_center = ring1 + segments;
  m.vertices.push_back(Point3(0, 0, length_mm));

  for (int j = 0; j < segments; ++j) {
    const int a = ring0 + j, b = ring0 + (j + 1) % segments;
    m.faces.push_back({0, a, b});
  }
  for (int j = 0; j < segments; ++j) {
    const int a0 = ring0 + j, b0 = ring0 + (j + 1) % segments;
    const int a1 = ring1 + j, b1 = ring1 + (j + 1) % segments;
    m.faces.push_back({a0, a1, b1});
    m.faces.push_back({a0, b1, b0});
  }
  for (int j = 0; j < segments; ++j) {
    const int a = ring1 + j, b = ring1 + (j + 1) % segments;
    m.faces.push_back({base_center, b, a});
  }

  m.a_local = Eigen::Vector3d::UnitZ();
  m.refresh_primitives();
  return m;
}

double anatomy_height(double x, double y) {
  const double bowl = 1.0 - (x / 44.0) * (x / 44.0) - (y / 34.0) * (y / 34.0);
  return 12.0 * std::max(0.0, bowl) + 1.5 * std::sin(x / 7.0) * std::cos(y / 6.0);
}

ToolMesh make_anatomy_mesh() {
  ToolMesh m;
  const int nx = 65, ny = 51;
  const double x0 = -48.0, y0 = -37.5, step = 1.5;
  for (int iy = 0; iy < ny; ++iy) {
    for (int ix = 0; ix < nx; ++ix) {
      const double x = x0 + step * ix;
      const double y = y0 + step * iy;
      m.vertices.push_back(Point3(x, y, -anatomy_height(x, y)));
    }
  }
  for (int iy = 0; iy + 1 < ny; ++iy) {
    for (int ix = 0; ix + 1 < nx; ++ix) {
      const int a = iy * nx + ix, b = a + 1, c = a + nx, d = c + 1;
      m.faces.push_back({a, b, d});
      m.faces.push_back({a, d, c});
    }
  }
  m.a_local = Eigen::Vector3d::UnitZ();
  m.refresh_primitives();
  return m;
}

ToolMesh make_structure_mesh() {
  ToolMesh m;
  const double radius = 1.5, x_lo = -20.0, x_hi = 20.0, y_c = 2.0;
  const double z_c = -anatomy_height(0.0, y_c) + 3.0;  // behind the surface
  const int segments = 16;

  for (int end = 0; end < 2; ++end) {
    const double x = end == 0 ? x_lo : x_hi;
    for (int j = 0; j < segments; ++j) {
      const double th = 2.0 * kPi * j / segments;
      m.vertices.push_back(Point3(x, y_c + radius * std::cos(th), z_c + radius * std::sin(th)));
    }
  }
  const int cap0 = 2 * segments, cap1 = cap0 + 1;
  m.vertices.push_back(Point3(x_lo, y_c, z_c));
  m.vertices.push_back(Point3(x_hi, y_c, z_c));

  for (int j = 0; j < segments; ++j) {
    const int a0 = j, b0 = (j + 1) % segments;
    const int a1 = segments + j, b1 = segments + (j + 1) % segments;
    m.faces.push_back({a0, a1, b1});
    m.faces.push_back({a0, b1, b0});
    m.faces.push_back({cap0, b0, a0});
    m.faces.push_back({cap1, a1, b1});
  }

  m.a_local = Eigen::Vector3d::UnitX();
  m.refresh_primitives();
  return m;
}

namespace {

// trajectory waypoints, anatomy-frame millimeters / camera-frame degrees
constexpr double kApproachX0 = -24.0, kApproachY0 = -4.0, kPsi0 = 25.0;
constexpr double kRestX = -19.0, kRestY = 1.4, kPsiRest = 8.0;
constexpr double kSymX = -16.0;
constexpr double kPhiLow = 47.0, kPhiHigh = 64.0, kPhiEnd = 50.0;
constexpr double kOccluderMax = 56.0;   // px
constexpr double kOccluderAlong = 0.55; // occluder center, fraction of tool length from tip

}  // namespace

Simulator::Simulator(const SimConfig& cfg) : cfg_(cfg) {
  cfg_.K.validate();
  if (cfg_.frames < 1) throw Error(ErrorCode::ConfigError, "Simulator: frames must be positive");

  tool_ = make_tool_mesh();
  anatomy_ = make_anatomy_mesh();
  structure_ = make_structure_mesh();

  T_C_A_.R = (Eigen::AngleAxisd(deg(4.0), Eigen::Vector3d::UnitY()) *
              Eigen::AngleAxisd(deg(-3.0), Eigen::Vector3d::UnitX()))
                 .toRotationMatrix();
  T_C_A_.t = Eigen::Vector3d(1.5, -1.0, 150.0);

  anatomy_depth_ = rasterize_depth(anatomy_, T_C_A_, cfg_.K);

  const double lm[6][2] = {{-30, -20}, {30, -22}, {0, 26}, {-18, 18}, {22, 14}, {6, -28}};
  for (int i = 0; i < 6; ++i) {
    Landmark l;
    l.name = "p" + std::to_string(i + 1);
    l.X = Point3(lm[i][0], lm[i][1], -anatomy_height(lm[i][0], lm[i][1]));
    l.u = project(T_C_A_.apply(l.X), cfg_.K);
    landmarks_.push_back(l);
  }

  // anatomy-frame y putting the tip on the Y_C = 0 plane at x = kSymX, so the
  // silhouette of the static late phases is mirror-symmetric about v = cy
  double y = 1.0;
  for (int it = 0; it < 50; ++it) {
    auto yc = [&](double yy) {
      return T_C_A_.apply(Point3(kSymX, yy, -anatomy_height(kSymX, yy))).y();
    };
    const double f0 = yc(y);
    if (std::abs(f0) < 1e-13) break;
    const double h = 1e-6;
    const double df = (yc(y + h) - yc(y - h)) / (2.0 * h);
    y -= f0 / df;
  }
  sym_y_ = y;
  sym_tip_C_ = T_C_A_.apply(Point3(kSymX, sym_y_, -anatomy_height(kSymX, sym_y_)));
  sym_tip_C_.y() = 0.0;
}

Simulator::Pose Simulator::pose_at(int i) const {
  i = std::clamp(i, 0, cfg_.frames - 1);
  const double scale = static_cast<double>(cfg_.frames) / 300.0;
  auto bound = [&](double b) { return static_cast<int>(std::llround(b * scale)); };
  const int b_app = bound(54), b_tilt0 = bound(78), b_tilt1 = bound(138);
  const int b_glide1 = bound(161), b_occ0 = bound(168), b_occ1 = bound(228);
  const int b_down0 = bound(238), b_down1 = bound(286);

  double phi = kPhiLow, psi = kPsiRest, xa = kRestX, ya = kRestY;
  bool symmetric = false;
  double occ_px = 0.0;

  if (i < b_app) {
    const double s = smoothstep(static_cast<double>(i) / std::max(1, b_app - 1));
    xa = lerp(kApproachX0, kRestX, s);
    ya = lerp(kApproachY0, kRestY, s);
    psi = lerp(kPsi0, kPsiRest, s);
  } else if (i < b_tilt0) {
    // rest, defaults already hold
  } else if (i < b_tilt1) {
    const double s =
        smoothstep(static_cast<double>(i - b_tilt0) / std::max(1, b_tilt1 - 1 - b_tilt0));
    phi = lerp(kPhiLow, kPhiHigh, s);
  } else if (i < b_glide1) {
    const double s =
        smoothstep(static_cast<double>(i - b_tilt1) / std::max(1, b_glide1 - 1 - b_tilt1));
    phi = kPhiHigh;
    xa = lerp(kRestX, kSymX, s);
    ya = lerp(kRestY, sym_y_, s);
    psi = lerp(kPsiRest, 0.0, s);
  } else if (i < b_occ0) {
    phi = kPhiHigh;
    symmetric = true;
  } else if (i < b_occ1) {
    phi = kPhiHigh;
    symmetric = true;
    const double u = static_cast<double>(i - b_occ0) / std::max(1, b_occ1 - 1 - b_occ0);
    occ_px = kOccluderMax * (u < 0.5 ? smoothstep(2.0 * u) : smoothstep(2.0 - 2.0 * u));
  } else if (i < b_down0) {
    phi = kPhiHigh;
    symmetric = true;
  } else if (i < b_down1) {
    const double s =
        smoothstep(static_cast<double>(i - b_down0) / std::max(1, b_down1 - 1 - b_down0));
    phi = lerp(kPhiHigh, kPhiEnd, s);
    symmetric = true;
  } else {
    phi = kPhiEnd;
    symmetric = true;
  }

  Pose p;
  p.phi_rad = deg(phi);
  p.psi_rad = symmetric ? 0.0 : deg(psi);
  p.occluder_radius_px = occ_px;
  if (symmetric) {
    p.tip_C = sym_tip_C_;
    p.d_C = Eigen::Vector3d(std::cos(p.phi_rad), 0.0, -std::sin(p.phi_rad));
  } else {
    p.tip_C = T_C_A_.apply(Point3(xa, ya, -anatomy_height(xa, ya)));
    p.d_C = Eigen::Vector3d(std::cos(p.phi_rad) * std::cos(p.psi_rad),
                            std::cos(p.phi_rad) * std::sin(p.psi_rad), -std::sin(p.phi_rad));
  }
  return p;
}

void Simulator::scene_at(int i, LabelImage* labels, DepthMap* scene_depth) const {
  const Pose p = pose_at(i);
  const DepthMap tool_depth =
      rasterize_depth(tool_, align_mesh(tool_, p.d_C, p.tip_C), cfg_.K);

  const int W = cfg_.K.width, H = cfg_.K.height;
  *labels = LabelImage(W, H);
  *scene_depth = DepthMap(W, H, DepthScale::metric_mm);
  for (int y = 0; y < H; ++y) {
    for (int x = 0; x < W; ++x) {
      const bool ta = anatomy_depth_.valid(x, y);
      const bool tt = tool_depth.valid(x, y);
      if (tt && (!ta || tool_depth.at(x, y) < anatomy_depth_.at(x, y))) {
        labels->set(x, y, 2);
        scene_depth->set(x, y, tool_depth.at(x, y));
      } else if (ta) {
        labels->set(x, y, 1);
        scene_depth->set(x, y, anatomy_depth_.at(x, y));
      }
    }
  }

  if (p.occluder_radius_px > 0.0) {
    const Pixel c = project(p.tip_C + kOccluderAlong * tool_.length_mm * p.d_C, cfg_.K);
    const double r2 = p.occluder_radius_px * p.occluder_radius_px;
    for (int y = 0; y < H; ++y) {
      for (int x = 0; x < W; ++x) {
        if (labels->at(x, y) == 0) continue;
        const double dx = x + 0.5 - c.x(), dy = y + 0.5 - c.y();
        if (dx * dx + dy * dy <= r2) {
          labels->set(x, y, 3);
          scene_depth->set(x, y, kDepthSentinel);
        }
      }
    }
  }
}

namespace {

PoseRecord make_gt_record(int i, const LabelImage& labels, const ToolMesh& tool,
                          const Eigen::Vector3d& d, const Point3& tip, double tilt_step_deg,
                          const CameraIntrinsics& K) {
  PoseRecord rec;
  rec.frame = i;
  rec.d = d;
  rec.T = align_mesh(tool, d, tip);
  const BinaryMask clean = labels.label_mask(2);
  const Pixel tip_px = project(tip, K);
  Pixel dir = project(tip + tool.length_mm * d, K) - tip_px;
  if (dir.norm() > 1e-12) dir.normalize();
  rec.length_px = boundary_crop_pca(clean, tip_px, &dir).length_px;
  if (i == 0)
    rec.gate = GateDecision::init;
  else
    rec.gate = tilt_step_deg >= 0.25 ? GateDecision::tilt : GateDecision::no_tilt;
  return rec;
}

}  // namespace

SimFrame Simulator::frame(int i) const {
  if (i < 0 || i >= cfg_.frames)
    throw Error(ErrorCode::ConfigError, "Simulator::frame: index out of range");

  SimFrame out;
  out.index = i;
  scene_at(i, &out.labels, &out.rel_depth);  // rel_depth holds metric scene depth for now

  const Pose p = pose_at(i);
  out.occluder_radius_px = p.occluder_radius_px;
  out.tilt_step_deg =
      i == 0 ? 0.0 : std::abs(p.phi_rad - pose_at(i - 1).phi_rad) * 180.0 / kPi;
  out.gt = make_gt_record(i, out.labels, tool_, p.d_C, p.tip_C, out.tilt_step_deg, cfg_.K);

  // metric scene depth -> relative depth with per-frame affine normalization
  const int W = cfg_.K.width, H = cfg_.K.height;
  double z_lo = 0.0, z_hi = 0.0;
  bool any = false;
  for (int y = 0; y < H; ++y) {
    for (int x = 0; x < W; ++x) {
      if (!out.rel_depth.valid(x, y)) continue;
      const double z = out.rel_depth.at(x, y);
      if (!any) {
        z_lo = z_hi = z;
        any = true;
      } else {
        z_lo = std::min(z_lo, z);
        z_hi = std::max(z_hi, z);
      }
    }
  }
  if (!any) throw Error(ErrorCode::EmptyMask, "Simulator::frame: no foreground");
  const double a = std::max(1e-6, (z_hi - z_lo) / 0.8);
  const double b = z_lo - 0.1 * a;

  double rel_sum = 0.0;
  size_t rel_n = 0;
  for (int y = 0; y < H; ++y) {
    for (int x = 0; x < W; ++x) {
      if (!out.rel_depth.valid(x, y)) continue;
      const float r = static_cast<float>((out.rel_depth.at(x, y) - b) / a);
      out.rel_depth.set(x, y, r);
      rel_sum += r;
      ++rel_n;
    }
  }
  out.rel_depth.set_scale(DepthScale::relative);

  if (cfg_.noise.depth_sigma > 0.0 || cfg_.noise.warp_amp > 0.0) {
    Rng rg(mix_seed(mix_seed(cfg_.seed, 11), i));
    const double mean_rel = rel_sum / static_cast<double>(rel_n);
    const int k1 = 1 + static_cast<int>(rg.uniform_index(2));
    const int k2 = 1 + static_cast<int>(rg.uniform_index(2));
    const double ph1 = rg.uniform(0.0, 2.0 * kPi);
    const double ph2 = rg.uniform(0.0, 2.0 * kPi);
    for (int y = 0; y < H; ++y) {
      for (int x = 0; x < W; ++x) {
        if (!out.rel_depth.valid(x, y)) continue;
        double r = out.rel_depth.at(x, y);
        if (cfg_.noise.depth_sigma > 0.0) r *= 1.0 + cfg_.noise.depth_sigma * rg.normal();
        if (cfg_.noise.warp_amp > 0.0)
          r += cfg_.noise.warp_amp * mean_rel *
               std::sin(2.0 * kPi * k1 * (x + 0.5) / W + ph1) *
               std::sin(2.0 * kPi * k2 * (y + 0.5) / H + ph2);
        out.rel_depth.set(x, y, static_cast<float>(std::max(0.01, r)));
      }
    }
  }

  out.tool_mask = out.labels.label_mask(2);
  out.anatomy_mask = out.labels.label_mask(1);
  if (cfg_.noise.mask_radius > 0) {
    Rng rg_t(mix_seed(mix_seed(cfg_.seed, 13), i));
    Rng rg_a(mix_seed(mix_seed(cfg_.seed, 17), i));
    const int rt = 1 + static_cast<int>(rg_t.uniform_index(cfg_.noise.mask_radius));
    const int ra = 1 + static_cast<int>(rg_a.uniform_index(cfg_.noise.mask_radius));
    out.tool_mask = rg_t.uniform() < 0.5 ? dilate(out.tool_mask, rt) : erode(out.tool_mask, rt);
    out.anatomy_mask =
        rg_a.uniform() < 0.5 ? dilate(out.anatomy_mask, ra) : erode(out.anatomy_mask, ra);
  }
  return out;
}

BinaryMask Simulator::clean_tool_mask(int i) const {
  LabelImage labels;
  DepthMap depth;
  scene_at(i, &labels, &depth);
  return labels.label_mask(2);
}

std::vector<PoseRecord> Simulator::gt_records() const {
  if (!gt_cache_.empty()) return gt_cache_;
  std::vector<PoseRecord> out;
  out.reserve(cfg_.frames);
  for (int i = 0; i < cfg_.frames; ++i) {
    LabelImage labels;
    DepthMap depth;
    scene_at(i, &labels, &depth);
    const Pose p = pose_at(i);
    const double step =
        i == 0 ? 0.0 : std::abs(p.phi_rad - pose_at(i - 1).phi_rad) * 180.0 / kPi;
    out.push_back(make_gt_record(i, labels, tool_, p.d_C, p.tip_C, step, cfg_.K));
  }
  gt_cache_ = out;
  return gt_cache_;
}

std::vector<SegmentSpec> Simulator::stress_segments() const {
  auto step_deg = [&](int i) {
    if (i == 0) return 0.0;
    return std::abs(pose_at(i).phi_rad - pose_at(i - 1).phi_rad) * 180.0 / kPi;
  };

  std::vector<SegmentSpec> out;
  auto collect = [&](auto pred, const char* base_name, GateDecision expected) {
    int run_start = -1;
    int n_found = 0;
    for (int i = 1; i <= cfg_.frames; ++i) {
      const bool in = i < cfg_.frames && pred(i);
      if (in && run_start < 0) run_start = i;
      if (!in && run_start >= 0) {
        const int lo = run_start + 2, hi = i - 1 - 2;  // margin against boundary quantization
        if (hi - lo + 1 >= 10) {
          SegmentSpec seg;
          seg.name = std::string(base_name) + "_" + std::to_string(++n_found);
          seg.start = lo;
          seg.end = hi;
          seg.expected_gate = expected;
          out.push_back(seg);
        }
        run_start = -1;
      }
    }
  };

  collect([&](int i) { return step_deg(i) >= 0.30; }, "tilt", GateDecision::tilt);
  collect(
      [&](int i) {
        return pose_at(i).occluder_radius_px >= 8.0 && step_deg(i) < 0.25;
      },
      "occlusion", GateDecision::no_tilt);
  return out;
}

std::vector<Correspondence> Simulator::clicked_correspondences(uint64_t salt) const {
  Rng rg(mix_seed(mix_seed(cfg_.seed, 23), salt));
  std::vector<Correspondence> out;
  for (const Landmark& l : landmarks_) {
    Correspondence c;
    c.X = l.X;
    c.u = l.u + cfg_.noise.click_sigma * Pixel(rg.normal(), rg.normal());
    out.push_back(c);
  }
  return out;
}

RgbImage Simulator::render_rgb(int i) const {
  LabelImage labels;
  DepthMap depth;
  scene_at(i, &labels, &depth);
  const int W = cfg_.K.width, H = cfg_.K.height;
  RgbImage img(W, H);

  const Eigen::Vector3d light = Eigen::Vector3d(-0.4, 0.35, -1.0).normalized();
  auto depth_at = [&](int x, int y, double fb) {
    if (x < 0 || x >= W || y < 0 || y >= H || !depth.valid(x, y)) return fb;
    return static_cast<double>(depth.at(x, y));
  };

  for (int y = 0; y < H; ++y) {
    for (int x = 0; x < W; ++x) {
      const uint8_t lab = labels.at(x, y);
      double rgb[3] = {18, 16, 20};
      static const double kAnatomyTint[3] = {205, 170, 150};
      static const double kToolTint[3] = {165, 170, 180};
      if (lab == 1 || lab == 2) {
        const double z = depth.at(x, y);
        const double gx = (depth_at(x + 1, y, z) - depth_at(x - 1, y, z)) / 2.0;
        const double gy = (depth_at(x, y + 1, z) - depth_at(x, y - 1, z)) / 2.0;
        const double k = cfg_.K.fx / z;
        const Eigen::Vector3d n = Eigen::Vector3d(gx * k, gy * k, -1.0).normalized();
        const double shade = 0.45 + 0.55 * std::max(0.0, n.dot(light));
        const double* tint = lab == 1 ? kAnatomyTint : kToolTint;
        for (int c = 0; c < 3; ++c) rgb[c] = tint[c] * shade;
      } else if (lab == 3) {
        rgb[0] = 70;
        rgb[1] = 65;
        rgb[2] = 62;
      }
      uint8_t* px = img.pixel(x, y);
      for (int c = 0; c < 3; ++c)
        px[c] = static_cast<uint8_t>(std::clamp(rgb[c], 0.0, 255.0));
    }
  }
  return img;
}

BinaryMask OracleMaskPropagator::propagate(int64_t, const BinaryMask&, int64_t to_index) {
  return sim_->clean_tool_mask(static_cast<int>(to_index));
}

BinaryMask DecayMaskPropagator::propagate(int64_t from_index, const BinaryMask& from_mask,
                                          int64_t to_index) {
  const double n_from = static_cast<double>(sim_->clean_tool_mask(static_cast<int>(from_index)).area());
  if (n_from <= 0.0)
    throw Error(ErrorCode::PropagatorFailure, "decay propagator: source frame has no tool");
  const double q_in = std::min(1.0, static_cast<double>(from_mask.area()) / n_from);
  const double gap = static_cast<double>(to_index - from_index);
  const double retention = std::max(0.0, 1.0 - coef_ * (gap / ref_gap_) * (gap / ref_gap_));
  return innermost_fraction(sim_->clean_tool_mask(static_cast<int>(to_index)), q_in * retention);
}

BinaryMask innermost_fraction(const BinaryMask& mask, double fraction) {
  fraction = std::clamp(fraction, 0.0, 1.0);
  const int W = mask.width(), H = mask.height();
  // two-pass chamfer distance to the background (3 orthogonal, 4 diagonal)
  const int kInf = 1 << 28;
  std::vector<int> dist(static_cast<size_t>(W) * H, 0);
  for (int y = 0; y < H; ++y)
    for (int x = 0; x < W; ++x) dist[y * W + x] = mask.at(x, y) ? kInf : 0;
  auto relax = [&](int x, int y, int nx, int ny, int w) {
    if (nx < 0 || nx >= W || ny < 0 || ny >= H) {
      dist[y * W + x] = std::min(dist[y * W + x], w);  // outside the image counts as background
      return;
    }
    dist[y * W + x] = std::min(dist[y * W + x], dist[ny * W + nx] + w);
  };
  for (int y = 0; y < H; ++y) {
    for (int x = 0; x < W; ++x) {
      if (!mask.at(x, y)) continue;
      relax(x, y, x - 1, y, 3);
      relax(x, y, x, y - 1, 3);
      relax(x, y, x - 1, y - 1, 4);
      relax(x, y, x + 1, y - 1, 4);
    }
  }
  for (int y = H - 1; y >= 0; --y) {
    for (int x = W - 1; x >= 0; --x) {
      if (!mask.at(x, y)) continue;
      relax(x, y, x + 1, y, 3);
      relax(x, y, x, y + 1, 3);
      relax(x, y, x + 1, y + 1, 4);
      relax(x, y, x - 1, y + 1, 4);
    }
  }

  struct Cell {
    int d, y, x;
  };
  std::vector<Cell> cells;
  for (int y = 0; y < H; ++y)
    for (int x = 0; x < W; ++x)
      if (mask.at(x, y)) cells.push_back({dist[y * W + x], y, x});
  std::sort(cells.begin(), cells.end(), [](const Cell& a, const Cell& b) {
    if (a.d != b.d) return a.d > b.d;
    if (a.y != b.y) return a.y < b.y;
    return a.x < b.x;
  });

  const size_t keep = static_cast<size_t>(std::llround(fraction * static_cast<double>(cells.size())));
  BinaryMask out(W, H);
  for (size_t i = 0; i < keep && i < cells.size(); ++i) out.set(cells[i].x, cells[i].y, true);
  return out;
}

double mask_iou(const BinaryMask& a, const BinaryMask& b) {
  if (a.width() != b.width() || a.height() != b.height())
    throw Error(ErrorCode::DimensionMismatch, "mask_iou: size mismatch");
  size_t inter = 0, uni = 0;
  for (int y = 0; y < a.height(); ++y) {
    for (int x = 0; x < a.width(); ++x) {
      const bool pa = a.at(x, y), pb = b.at(x, y);
      inter += pa && pb;
      uni += pa || pb;
    }
  }
  return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

}  // namespace surgnav
