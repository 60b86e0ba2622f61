// Command-line frontend. Talks to the engine exclusively through the C API.
#include <chrono>
#include <cstdio>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "surgnav/surgnav.h"

namespace {

std::string last_error() {
  char buf[512];
  snav_last_error(buf, sizeof(buf));
  return std::string(buf);
}

// Raises the failure as a CLI11 runtime error so main() maps it to exit 1.
void check(int rc, const std::string& what) {
  if (rc != 0) {
    throw CLI::RuntimeError(what + ": " + snav_error_name(rc) + " (" + last_error() + ")", 1);
  }
}

std::string frame_path(const std::string& dir, int index, const std::string& suffix) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "f%04d", index);
  return dir + "/" + buf + suffix;
}

void write_transform(const double T[12], const std::string& path) {
  FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw CLI::RuntimeError("cannot write " + path, 1);
  for (int r = 0; r < 3; ++r)
    std::fprintf(f, "%.17g %.17g %.17g %.17g\n", T[r * 4], T[r * 4 + 1], T[r * 4 + 2],
                 T[r * 4 + 3]);
  std::fclose(f);
}

void read_transform(const std::string& path, double T[12]) {
  FILE* f = std::fopen(path.c_str(), "r");
  if (!f) throw CLI::RuntimeError("cannot read " + path, 1);
  for (int i = 0; i < 12; ++i) {
    if (std::fscanf(f, "%lf", &T[i]) != 1) {
      std::fclose(f);
      throw CLI::RuntimeError("bad transform file " + path, 1);
    }
  }
  std::fclose(f);
}

struct SimArgs {
  std::string out_dir;
  unsigned long long seed = 1;
  int frames = 300;
  int mask_radius = 0;
  double depth_sigma = 0.0;
  double warp_amp = 0.0;
  double click_sigma = 0.0;
  bool calibrated = false;
  bool rgb = false;
};

void run_simulate(const SimArgs& a) {
  int mask_radius = a.mask_radius;
  double depth_sigma = a.depth_sigma, warp_amp = a.warp_amp, click_sigma = a.click_sigma;
  if (a.calibrated) {
    mask_radius = 1;
    depth_sigma = 0.05;
    warp_amp = 0.12;
    click_sigma = 3.0;
  }

  snav_sim* sim = nullptr;
  check(snav_sim_create(a.seed, a.frames, mask_radius, depth_sigma, warp_amp, click_sigma, &sim),
        "sim_create");
  std::unique_ptr<snav_sim, void (*)(snav_sim*)> sim_guard(sim, snav_sim_destroy);

  snav_camera* cam = nullptr;
  check(snav_sim_camera(sim, &cam), "sim_camera");
  check(snav_camera_save(cam, (a.out_dir + "/camera.txt").c_str()), "camera_save");
  snav_camera_destroy(cam);

  for (const char* name : {"tool", "anatomy", "structure"}) {
    snav_mesh* mesh = nullptr;
    check(snav_sim_mesh(sim, name, &mesh), "sim_mesh");
    check(snav_mesh_save_obj(mesh, (a.out_dir + "/" + name + ".obj").c_str()), "mesh_save");
    snav_mesh_destroy(mesh);
  }

  double T[12];
  check(snav_sim_true_registration(sim, T), "true_registration");
  write_transform(T, a.out_dir + "/t_c_a.txt");

  snav_depth* sreg = nullptr;
  check(snav_sim_registered_depth(sim, &sreg), "registered_depth");
  check(snav_depth_save_pfm(sreg, (a.out_dir + "/sreg.mm.pfm").c_str()), "depth_save");
  snav_depth_destroy(sreg);

  check(snav_sim_landmarks_csv(sim, (a.out_dir + "/landmarks.csv").c_str()), "landmarks");
  if (click_sigma > 0.0) {
    check(snav_sim_clicked_landmarks_csv(sim, 7, (a.out_dir + "/clicked_landmarks.csv").c_str()),
          "clicked_landmarks");
  }
  check(snav_sim_gt_csv(sim, (a.out_dir + "/gt.csv").c_str()), "gt_csv");
  check(snav_sim_segments_csv(sim, (a.out_dir + "/segments.csv").c_str()), "segments");

  for (int i = 0; i < a.frames; ++i) {
    snav_mask* tool_mask = nullptr;
    snav_mask* anatomy_mask = nullptr;
    snav_depth* rel = nullptr;
    check(snav_sim_frame(sim, i, &tool_mask, &anatomy_mask, &rel), "sim_frame");
    check(snav_mask_save_pgm(tool_mask, frame_path(a.out_dir, i, ".tool.pgm").c_str()),
          "mask_save");
    check(snav_mask_save_pgm(anatomy_mask, frame_path(a.out_dir, i, ".anatomy.pgm").c_str()),
          "mask_save");
    check(snav_depth_save_pfm(rel, frame_path(a.out_dir, i, ".rel.pfm").c_str()), "depth_save");
    snav_mask_destroy(tool_mask);
    snav_mask_destroy(anatomy_mask);
    snav_depth_destroy(rel);
    check(snav_sim_labels_pgm(sim, i, frame_path(a.out_dir, i, ".labels.pgm").c_str()), "labels");
    if (a.rgb)
      check(snav_sim_rgb_ppm(sim, i, frame_path(a.out_dir, i, ".ppm").c_str()), "rgb");
  }
  std::printf("wrote %d frames to %s\n", a.frames, a.out_dir.c_str());
}

struct TrackArgs {
  std::string camera, tool, data_dir, out_csv;
  std::string sreg, registration, anatomy;
  int frames = 0;
  bool depth_only = false;
  bool robust_fit = false;
};

void run_track(const TrackArgs& a) {
  snav_camera* cam = nullptr;
  check(snav_camera_load(a.camera.c_str(), &cam), "camera_load");
  std::unique_ptr<snav_camera, void (*)(snav_camera*)> cam_guard(cam, snav_camera_destroy);

  snav_mesh* tool = nullptr;
  if (a.tool.empty())
    check(snav_mesh_builtin("tool", &tool), "mesh_builtin");
  else
    check(snav_mesh_load_obj(a.tool.c_str(), 0, 0, 1, &tool), "mesh_load");
  std::unique_ptr<snav_mesh, void (*)(snav_mesh*)> tool_guard(tool, snav_mesh_destroy);

  snav_depth* sreg = nullptr;
  if (!a.sreg.empty()) {
    check(snav_depth_load_pfm(a.sreg.c_str(), 1, &sreg), "depth_load");
  } else if (!a.registration.empty() && !a.anatomy.empty()) {
    snav_mesh* anatomy = nullptr;
    check(snav_mesh_load_obj(a.anatomy.c_str(), 0, 0, 1, &anatomy), "mesh_load");
    double T[12];
    read_transform(a.registration, T);
    const int rc = snav_render_anatomy_depth(anatomy, T, cam, &sreg);
    snav_mesh_destroy(anatomy);
    check(rc, "render_anatomy_depth");
  } else {
    throw CLI::RuntimeError("need --sreg, or --registration with --anatomy", 2);
  }
  std::unique_ptr<snav_depth, void (*)(snav_depth*)> sreg_guard(sreg, snav_depth_destroy);

  snav_tracker* tracker = nullptr;
  check(snav_tracker_create(cam, tool, a.depth_only ? 1 : 0, a.robust_fit ? 1 : 0, &tracker),
        "tracker_create");
  std::unique_ptr<snav_tracker, void (*)(snav_tracker*)> trk_guard(tracker, snav_tracker_destroy);

  double track_seconds = 0.0;
  for (int i = 0; i < a.frames; ++i) {
    snav_mask* tool_mask = nullptr;
    snav_mask* anatomy_mask = nullptr;
    snav_depth* rel = nullptr;
    check(snav_mask_load_pgm(frame_path(a.data_dir, i, ".tool.pgm").c_str(), &tool_mask),
          "mask_load");
    check(snav_mask_load_pgm(frame_path(a.data_dir, i, ".anatomy.pgm").c_str(), &anatomy_mask),
          "mask_load");
    check(snav_depth_load_pfm(frame_path(a.data_dir, i, ".rel.pfm").c_str(), 0, &rel),
          "depth_load");
    const auto t0 = std::chrono::steady_clock::now();
    const int rc = snav_tracker_track(tracker, tool_mask, anatomy_mask, rel, sreg, i);
    track_seconds += std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    snav_mask_destroy(tool_mask);
    snav_mask_destroy(anatomy_mask);
    snav_depth_destroy(rel);
    check(rc, "track");
  }
  check(snav_tracker_save_log_csv(tracker, a.out_csv.c_str()), "save_log");
  if (a.frames > 0 && track_seconds > 0.0)
    std::printf("tracked %d frames, %.1f fps\n", a.frames, a.frames / track_seconds);
}

struct RegisterArgs {
  std::string camera, landmarks, out_transform;
};

void run_register(const RegisterArgs& a) {
  snav_camera* cam = nullptr;
  check(snav_camera_load(a.camera.c_str(), &cam), "camera_load");
  std::unique_ptr<snav_camera, void (*)(snav_camera*)> cam_guard(cam, snav_camera_destroy);
  double T[12], rmse_px = 0, rmse_mm = 0;
  check(snav_register_landmarks_csv(cam, a.landmarks.c_str(), T, &rmse_px, &rmse_mm), "register");
  write_transform(T, a.out_transform);
  std::printf("rmse_px %.4f rmse_mm %.4f\n", rmse_px, rmse_mm);
}

struct OverlayArgs {
  std::string base, structure, transform, camera, zbone, out;
  double alpha0 = 0.8;
  double tau_mm = 2.0;
  bool rational = false;
};

void run_overlay(const OverlayArgs& a) {
  snav_camera* cam = nullptr;
  check(snav_camera_load(a.camera.c_str(), &cam), "camera_load");
  std::unique_ptr<snav_camera, void (*)(snav_camera*)> cam_guard(cam, snav_camera_destroy);
  snav_mesh* structure = nullptr;
  check(snav_mesh_load_obj(a.structure.c_str(), 0, 0, 1, &structure), "mesh_load");
  std::unique_ptr<snav_mesh, void (*)(snav_mesh*)> mesh_guard(structure, snav_mesh_destroy);
  snav_depth* zbone = nullptr;
  check(snav_depth_load_pfm(a.zbone.c_str(), 1, &zbone), "depth_load");
  std::unique_ptr<snav_depth, void (*)(snav_depth*)> z_guard(zbone, snav_depth_destroy);
  double T[12];
  read_transform(a.transform, T);
  check(snav_overlay_ppm(a.base.c_str(), structure, T, cam, zbone, a.alpha0, a.tau_mm,
                         a.rational ? 1 : 0, a.out.c_str()),
        "overlay");
}

struct EvaluateArgs {
  std::string est, ref, segments, report;
  std::vector<double> tip{0.0, 0.0, 0.0};
};

void run_evaluate(const EvaluateArgs& a) {
  check(snav_evaluate_csv(a.est.c_str(), a.ref.c_str(), a.tip[0], a.tip[1], a.tip[2],
                          a.segments.empty() ? nullptr : a.segments.c_str(), a.report.c_str()),
        "evaluate");
  std::printf("report written to %s\n", a.report.c_str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"surgical navigation geometry engine"};
  app.require_subcommand(1);

  SimArgs sim;
  CLI::App* c_sim = app.add_subcommand("simulate", "generate a synthetic sequence");
  c_sim->add_option("-o,--out", sim.out_dir, "output directory")->required();
  c_sim->add_option("--seed", sim.seed, "rng seed");
  c_sim->add_option("--frames", sim.frames, "frame count")->check(CLI::PositiveNumber);
  c_sim->add_option("--mask-radius", sim.mask_radius, "mask boundary jitter radius, px");
  c_sim->add_option("--depth-sigma", sim.depth_sigma, "multiplicative depth noise sigma");
  c_sim->add_option("--warp-amp", sim.warp_amp, "low-frequency depth warp amplitude");
  c_sim->add_option("--click-sigma", sim.click_sigma, "landmark click noise, px");
  c_sim->add_flag("--calibrated", sim.calibrated, "use the calibrated noise preset");
  c_sim->add_flag("--rgb", sim.rgb, "also write shaded renders");

  TrackArgs trk;
  CLI::App* c_trk = app.add_subcommand("track", "run the tracker over a sequence");
  c_trk->add_option("--camera", trk.camera, "camera intrinsics file")->required();
  c_trk->add_option("--tool", trk.tool, "tool mesh OBJ (default: built-in)");
  c_trk->add_option("-d,--data", trk.data_dir, "sequence directory")->required();
  c_trk->add_option("--frames", trk.frames, "frame count")->required();
  c_trk->add_option("-o,--out", trk.out_csv, "pose log CSV")->required();
  c_trk->add_option("--sreg", trk.sreg, "registered anatomy depth PFM");
  c_trk->add_option("--registration", trk.registration, "camera-from-anatomy transform file");
  c_trk->add_option("--anatomy", trk.anatomy, "anatomy mesh OBJ for depth rendering");
  c_trk->add_flag("--depth-only", trk.depth_only, "per-frame depth baseline mode");
  c_trk->add_flag("--robust-fit", trk.robust_fit, "robust affine depth fit");

  RegisterArgs reg;
  CLI::App* c_reg = app.add_subcommand("register", "solve anatomy registration from landmarks");
  c_reg->add_option("--camera", reg.camera, "camera intrinsics file")->required();
  c_reg->add_option("--landmarks", reg.landmarks, "landmark CSV")->required();
  c_reg->add_option("-o,--out", reg.out_transform, "output transform file")->required();

  OverlayArgs ovl;
  CLI::App* c_ovl = app.add_subcommand("overlay", "blend a hidden structure into an image");
  c_ovl->add_option("--base", ovl.base, "base PPM image")->required();
  c_ovl->add_option("--structure", ovl.structure, "structure mesh OBJ")->required();
  c_ovl->add_option("--transform", ovl.transform, "camera-from-anatomy transform file")
      ->required();
  c_ovl->add_option("--camera", ovl.camera, "camera intrinsics file")->required();
  c_ovl->add_option("--zbone", ovl.zbone, "registered anatomy depth PFM")->required();
  c_ovl->add_option("-o,--out", ovl.out, "output PPM")->required();
  c_ovl->add_option("--alpha0", ovl.alpha0, "base opacity");
  c_ovl->add_option("--tau", ovl.tau_mm, "depth-gap fade length, mm");
  c_ovl->add_flag("--rational", ovl.rational, "rational opacity falloff");

  EvaluateArgs ev;
  CLI::App* c_ev = app.add_subcommand("evaluate", "compare a pose log against a reference");
  c_ev->add_option("--est", ev.est, "estimated pose CSV")->required();
  c_ev->add_option("--ref", ev.ref, "reference pose CSV")->required();
  c_ev->add_option("--tip", ev.tip, "mesh tip point, mm")->expected(3);
  c_ev->add_option("--segments", ev.segments, "stress segment CSV");
  c_ev->add_option("-o,--out", ev.report, "report CSV")->required();

  try {
    app.parse(argc, argv);
    if (*c_sim) run_simulate(sim);
    if (*c_trk) run_track(trk);
    if (*c_reg) run_register(reg);
    if (*c_ovl) run_overlay(ovl);
    if (*c_ev) run_evaluate(ev);
  } catch (const CLI::RuntimeError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return e.get_exit_code();
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;  // parse and usage problems
  }
  return 0;
}
