#include "surgnav/surgnav.h"

#include <algorithm>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "camera.hpp"
#include "depth.hpp"
#include "errors.hpp"
#include "mask.hpp"
#include "mesh.hpp"
#include "metrics.hpp"
#include "pose_solver.hpp"
#include "registration.hpp"
#include "renderer.hpp"
#include "sim.hpp"

using namespace surgnav;

struct snav_camera {
  CameraIntrinsics K;
};
struct snav_mesh {
  ToolMesh mesh;
};
struct snav_mask {
  BinaryMask mask;
};
struct snav_depth {
  DepthMap depth;
};
struct snav_sim {
  Simulator sim;
};
struct snav_tracker {
  Tracker tracker;
  std::vector<PoseRecord> log;
  explicit snav_tracker(TrackerConfig cfg) : tracker(std::move(cfg)) {}
};

namespace {

thread_local std::string g_last_error;

constexpr int kInternalError = 1000;

int fail(int code, const char* what) {
  g_last_error = what ? what : "";
  return code;
}

int fail(const Error& e) { return fail(static_cast<int>(e.code()) + 1, e.what()); }

template <typename Fn>
int guarded(Fn&& fn) {
  try {
    fn();
    g_last_error.clear();
    return 0;
  } catch (const Error& e) {
    return fail(e);
  } catch (const std::exception& e) {
    return fail(kInternalError, e.what());
  } catch (...) {
    return fail(kInternalError, "unknown failure");
  }
}

int require(bool ok, const char* what) {
  return ok ? 0 : fail(static_cast<int>(ErrorCode::ConfigError) + 1, what);
}

RigidTransform unpack_T(const double T[12]) {
  RigidTransform out;
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) out.R(r, c) = T[r * 4 + c];
    out.t(r) = T[r * 4 + 3];
  }
  return out;
}

void pack_T(const RigidTransform& in, double T[12]) {
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) T[r * 4 + c] = in.R(r, c);
    T[r * 4 + 3] = in.t(r);
  }
}

}  // namespace

extern "C" {

const char* snav_error_name(int code) {
  if (code == 0) return "Ok";
  if (code == kInternalError) return "InternalError";
  const int last = static_cast<int>(ErrorCode::ConfigError) + 1;
  if (code >= 1 && code <= last) return error_code_name(static_cast<ErrorCode>(code - 1));
  return "Unknown";
}

int snav_last_error(char* buf, size_t cap) {
  const size_t len = g_last_error.size();
  if (buf && cap > 0) {
    const size_t n = std::min(cap - 1, len);
    std::memcpy(buf, g_last_error.data(), n);
    buf[n] = '\0';
  }
  return static_cast<int>(len);
}

int snav_camera_create(double fx, double fy, double cx, double cy, int width, int height,
                       snav_camera** out) {
  if (int rc = require(out != nullptr, "null output pointer")) return rc;
  return guarded([&] {
    CameraIntrinsics K{fx, fy, cx, cy, width, height};
    K.validate();
    *out = new snav_camera{K};
  });
}

int snav_camera_load(const char* path, snav_camera** out) {
  if (int rc = require(out && path, "null argument")) return rc;
  return guarded([&] { *out = new snav_camera{CameraIntrinsics::load(path)}; });
}

int snav_camera_save(const snav_camera* cam, const char* path) {
  if (int rc = require(cam && path, "null argument")) return rc;
  return guarded([&] { cam->K.save(path); });
}

void snav_camera_destroy(snav_camera* cam) { delete cam; }

int snav_mesh_load_obj(const char* path, double ax, double ay, double az, snav_mesh** out) {
  if (int rc = require(out && path, "null argument")) return rc;
  return guarded([&] { *out = new snav_mesh{load_obj(path, Eigen::Vector3d(ax, ay, az))}; });
}

int snav_mesh_save_obj(const snav_mesh* mesh, const char* path) {
  if (int rc = require(mesh && path, "null argument")) return rc;
  return guarded([&] { save_obj(mesh->mesh, path); });
}

int snav_mesh_builtin(const char* name, snav_mesh** out) {
  if (int rc = require(out && name, "null argument")) return rc;
  return guarded([&] {
    const std::string which = name;
    if (which == "tool")
      *out = new snav_mesh{make_tool_mesh()};
    else if (which == "anatomy")
      *out = new snav_mesh{make_anatomy_mesh()};
    else if (which == "structure")
      *out = new snav_mesh{make_structure_mesh()};
    else
      throw Error(ErrorCode::ConfigError, "unknown builtin mesh: " + which);
  });
}

int snav_mesh_tip(const snav_mesh* mesh, double tip[3]) {
  if (int rc = require(mesh && tip, "null argument")) return rc;
  for (int i = 0; i < 3; ++i) tip[i] = mesh->mesh.p_tip_mesh(i);
  return 0;
}

void snav_mesh_destroy(snav_mesh* mesh) { delete mesh; }

int snav_mask_load_pgm(const char* path, snav_mask** out) {
  if (int rc = require(out && path, "null argument")) return rc;
  return guarded([&] { *out = new snav_mask{BinaryMask::read_pgm(path)}; });
}

int snav_mask_save_pgm(const snav_mask* mask, const char* path) {
  if (int rc = require(mask && path, "null argument")) return rc;
  return guarded([&] { mask->mask.write_pgm(path); });
}

void snav_mask_destroy(snav_mask* mask) { delete mask; }

int snav_depth_load_pfm(const char* path, int metric, snav_depth** out) {
  if (int rc = require(out && path, "null argument")) return rc;
  return guarded([&] {
    *out = new snav_depth{
        DepthMap::read_pfm(path, metric ? DepthScale::metric_mm : DepthScale::relative)};
  });
}

int snav_depth_save_pfm(const snav_depth* depth, const char* path) {
  if (int rc = require(depth && path, "null argument")) return rc;
  return guarded([&] { depth->depth.write_pfm(path); });
}

void snav_depth_destroy(snav_depth* depth) { delete depth; }

int snav_sim_create(unsigned long long seed, int frames, int mask_radius, double depth_sigma,
                    double warp_amp, double click_sigma, snav_sim** out) {
  if (int rc = require(out != nullptr, "null output pointer")) return rc;
  return guarded([&] {
    SimConfig cfg = default_sim_config();
    cfg.seed = seed;
    cfg.frames = frames;
    cfg.noise.mask_radius = mask_radius;
    cfg.noise.depth_sigma = depth_sigma;
    cfg.noise.warp_amp = warp_amp;
    cfg.noise.click_sigma = click_sigma;
    *out = new snav_sim{Simulator(cfg)};
  });
}

void snav_sim_destroy(snav_sim* sim) { delete sim; }

int snav_sim_frame_count(const snav_sim* sim) {
  return sim ? sim->sim.config().frames : 0;
}

int snav_sim_camera(const snav_sim* sim, snav_camera** out) {
  if (int rc = require(sim && out, "null argument")) return rc;
  return guarded([&] { *out = new snav_camera{sim->sim.config().K}; });
}

int snav_sim_mesh(const snav_sim* sim, const char* which, snav_mesh** out) {
  if (int rc = require(sim && which && out, "null argument")) return rc;
  return guarded([&] {
    const std::string name = which;
    if (name == "tool")
      *out = new snav_mesh{sim->sim.tool()};
    else if (name == "anatomy")
      *out = new snav_mesh{sim->sim.anatomy()};
    else if (name == "structure")
      *out = new snav_mesh{sim->sim.structure()};
    else
      throw Error(ErrorCode::ConfigError, "unknown sim mesh: " + name);
  });
}

int snav_sim_frame(const snav_sim* sim, int index, snav_mask** tool_mask,
                   snav_mask** anatomy_mask, snav_depth** rel_depth) {
  if (int rc = require(sim != nullptr, "null simulator")) return rc;
  return guarded([&] {
    SimFrame f = sim->sim.frame(index);
    if (tool_mask) *tool_mask = new snav_mask{std::move(f.tool_mask)};
    if (anatomy_mask) *anatomy_mask = new snav_mask{std::move(f.anatomy_mask)};
    if (rel_depth) *rel_depth = new snav_depth{std::move(f.rel_depth)};
  });
}

int snav_sim_labels_pgm(const snav_sim* sim, int index, const char* path) {
  if (int rc = require(sim && path, "null argument")) return rc;
  return guarded([&] { sim->sim.frame(index).labels.write_pgm(path); });
}

int snav_sim_rgb_ppm(const snav_sim* sim, int index, const char* path) {
  if (int rc = require(sim && path, "null argument")) return rc;
  return guarded([&] { sim->sim.render_rgb(index).write_ppm(path); });
}

int snav_sim_registered_depth(const snav_sim* sim, snav_depth** out) {
  if (int rc = require(sim && out, "null argument")) return rc;
  return guarded([&] { *out = new snav_depth{sim->sim.registered_depth()}; });
}

int snav_sim_true_registration(const snav_sim* sim, double T[12]) {
  if (int rc = require(sim && T, "null argument")) return rc;
  pack_T(sim->sim.T_C_A(), T);
  return 0;
}

int snav_sim_gt_csv(const snav_sim* sim, const char* path) {
  if (int rc = require(sim && path, "null argument")) return rc;
  return guarded([&] { save_pose_csv(sim->sim.gt_records(), path); });
}

int snav_sim_segments_csv(const snav_sim* sim, const char* path) {
  if (int rc = require(sim && path, "null argument")) return rc;
  return guarded([&] { save_segments(sim->sim.stress_segments(), path); });
}

int snav_sim_landmarks_csv(const snav_sim* sim, const char* path) {
  if (int rc = require(sim && path, "null argument")) return rc;
  return guarded([&] { save_landmarks_csv(sim->sim.landmarks(), path); });
}

int snav_sim_clicked_landmarks_csv(const snav_sim* sim, unsigned long long salt,
                                   const char* path) {
  if (int rc = require(sim && path, "null argument")) return rc;
  return guarded([&] {
    const std::vector<Correspondence> clicks = sim->sim.clicked_correspondences(salt);
    std::vector<Landmark> rows = sim->sim.landmarks();
    for (size_t i = 0; i < rows.size(); ++i) rows[i].u = clicks[i].u;
    save_landmarks_csv(rows, path);
  });
}

int snav_register_landmarks_csv(const snav_camera* cam, const char* landmarks_csv, double T[12],
                                double* rmse_px, double* rmse_mm) {
  if (int rc = require(cam && landmarks_csv && T, "null argument")) return rc;
  return guarded([&] {
    const std::vector<Landmark> lms = load_landmarks_csv(landmarks_csv);
    std::vector<Correspondence> corrs;
    for (const Landmark& l : lms) corrs.push_back({l.u, l.X});
    const RegistrationResult res = solve_pnp(corrs, cam->K);
    pack_T(res.T_C_A, T);
    if (rmse_px) *rmse_px = res.rmse_px;
    if (rmse_mm) *rmse_mm = res.rmse_mm;
  });
}

int snav_render_anatomy_depth(const snav_mesh* anatomy, const double T[12],
                              const snav_camera* cam, snav_depth** out) {
  if (int rc = require(anatomy && T && cam && out, "null argument")) return rc;
  return guarded([&] {
    *out = new snav_depth{render_anatomy_depth(anatomy->mesh, unpack_T(T), cam->K)};
  });
}

int snav_tracker_create(const snav_camera* cam, const snav_mesh* tool, int depth_only,
                        int robust_fit, snav_tracker** out) {
  if (int rc = require(cam && tool && out, "null argument")) return rc;
  return guarded([&] {
    TrackerConfig cfg;
    cfg.K = cam->K;
    cfg.tool = tool->mesh;
    cfg.depth_only = depth_only != 0;
    cfg.robust_depth_fit = robust_fit != 0;
    *out = new snav_tracker(std::move(cfg));
  });
}

void snav_tracker_destroy(snav_tracker* t) { delete t; }

int snav_tracker_track(snav_tracker* t, const snav_mask* tool_mask, const snav_mask* anatomy_mask,
                       const snav_depth* rel_depth, const snav_depth* registered_anatomy,
                       int frame_index) {
  if (int rc = require(t && tool_mask && anatomy_mask && rel_depth && registered_anatomy,
                       "null argument"))
    return rc;
  return guarded([&] {
    const PoseEstimate est = t->tracker.track_frame(
        tool_mask->mask, anatomy_mask->mask, rel_depth->depth, registered_anatomy->depth,
        frame_index);
    t->log.push_back(to_record(est));
  });
}

int snav_tracker_pose(const snav_tracker* t, double T[12], double d[3], double* length_px,
                      char gate[16]) {
  if (int rc = require(t != nullptr, "null tracker")) return rc;
  if (int rc = require(!t->log.empty(), "no frames tracked yet")) return rc;
  const PoseRecord& rec = t->log.back();
  if (T) pack_T(rec.T, T);
  if (d)
    for (int i = 0; i < 3; ++i) d[i] = rec.d(i);
  if (length_px) *length_px = rec.length_px;
  if (gate) {
    std::snprintf(gate, 16, "%s", gate_name(rec.gate));
  }
  return 0;
}

int snav_tracker_save_log_csv(const snav_tracker* t, const char* path) {
  if (int rc = require(t && path, "null argument")) return rc;
  return guarded([&] { save_pose_csv(t->log, path); });
}

int snav_overlay_ppm(const char* base_ppm, const snav_mesh* structure_mesh, const double T[12],
                     const snav_camera* cam, const snav_depth* z_bone, double alpha0,
                     double tau_mm, int rational_decay, const char* out_ppm) {
  if (int rc = require(base_ppm && structure_mesh && T && cam && z_bone && out_ppm,
                       "null argument"))
    return rc;
  return guarded([&] {
    const RgbImage base = RgbImage::read_ppm(base_ppm);
    const DepthMap z_seg = rasterize_depth(structure_mesh->mesh, unpack_T(T), cam->K);
    OverlayConfig cfg;
    cfg.alpha0 = alpha0;
    cfg.tau_mm = tau_mm;
    cfg.decay = rational_decay ? OpacityDecay::rational : OpacityDecay::exponential;
    OverlayStructure st;
    st.depth = &z_seg;
    st.color = {90, 200, 255};
    const RgbImage out = compose_overlay(base, {st}, z_bone->depth, cfg);
    out.write_ppm(out_ppm);
  });
}

int snav_evaluate_csv(const char* est_csv, const char* ref_csv, double tip_x, double tip_y,
                      double tip_z, const char* segments_csv, const char* report_csv) {
  if (int rc = require(est_csv && ref_csv && report_csv, "null argument")) return rc;
  return guarded([&] {
    const std::vector<PoseRecord> est = load_pose_csv(est_csv);
    const std::vector<PoseRecord> ref = load_pose_csv(ref_csv);
    const MetricsReport report = compute_metrics(est, ref, Point3(tip_x, tip_y, tip_z));
    save_metrics_csv(report, report_csv);
    if (segments_csv) {
      std::ofstream out(report_csv, std::ios::app);
      for (const SegmentSpec& seg : load_segments(segments_csv))
        out << "gate_accuracy_" << seg.name << "," << gate_accuracy(est, seg) << "\n";
    }
  });
}

}  // extern "C"
