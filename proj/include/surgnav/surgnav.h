#ifndef SURGNAV_H
#define SURGNAV_H

/* C interface to the surgical navigation geometry engine.
 *
 * All functions returning int use 0 for success and a nonzero error code
 * otherwise; snav_error_name() maps codes to stable identifiers and
 * snav_last_error() retrieves the failure message of the current thread.
 * Objects created through *_create / *_load calls are owned by the caller
 * and released with the matching *_destroy.
 *
 * Rigid transforms are passed as double[12], a row-major 3x4 [R | t] block:
 * T[0..2] = first rotation row, T[3] = t_x, T[4..6] second row, T[7] = t_y,
 * T[8..10] third row, T[11] = t_z. Millimeters and pixels throughout.
 */

#include <stddef.h>

#if defined(_WIN32)
#define SNAV_API __declspec(dllexport)
#else
#define SNAV_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef struct snav_camera snav_camera;
typedef struct snav_mesh snav_mesh;
typedef struct snav_mask snav_mask;
typedef struct snav_depth snav_depth;
typedef struct snav_sim snav_sim;
typedef struct snav_tracker snav_tracker;

/* error reporting */
SNAV_API const char* snav_error_name(int code);
SNAV_API int snav_last_error(char* buf, size_t cap); /* returns message length */

/* camera intrinsics */
SNAV_API int snav_camera_create(double fx, double fy, double cx, double cy, int width, int height,
                                snav_camera** out);
SNAV_API int snav_camera_load(const char* path, snav_camera** out);
SNAV_API int snav_camera_save(const snav_camera* cam, const char* path);
SNAV_API void snav_camera_destroy(snav_camera* cam);

/* triangle meshes; (ax, ay, az) is the local tip-to-base axis */
SNAV_API int snav_mesh_load_obj(const char* path, double ax, double ay, double az,
                                snav_mesh** out);
SNAV_API int snav_mesh_save_obj(const snav_mesh* mesh, const char* path);
/* built-in synthetic meshes: "tool", "anatomy", "structure" */
SNAV_API int snav_mesh_builtin(const char* name, snav_mesh** out);
SNAV_API int snav_mesh_tip(const snav_mesh* mesh, double tip[3]);
SNAV_API void snav_mesh_destroy(snav_mesh* mesh);

/* binary masks (PGM) and depth maps (PFM; metric flag 1 = millimeters) */
SNAV_API int snav_mask_load_pgm(const char* path, snav_mask** out);
SNAV_API int snav_mask_save_pgm(const snav_mask* mask, const char* path);
SNAV_API void snav_mask_destroy(snav_mask* mask);
SNAV_API int snav_depth_load_pfm(const char* path, int metric, snav_depth** out);
SNAV_API int snav_depth_save_pfm(const snav_depth* depth, const char* path);
SNAV_API void snav_depth_destroy(snav_depth* depth);

/* deterministic synthetic scene */
SNAV_API int snav_sim_create(unsigned long long seed, int frames, int mask_radius,
                             double depth_sigma, double warp_amp, double click_sigma,
                             snav_sim** out);
SNAV_API void snav_sim_destroy(snav_sim* sim);
SNAV_API int snav_sim_frame_count(const snav_sim* sim);
SNAV_API int snav_sim_camera(const snav_sim* sim, snav_camera** out);
SNAV_API int snav_sim_mesh(const snav_sim* sim, const char* which, snav_mesh** out);
/* per-frame outputs; any out pointer may be NULL to skip it */
SNAV_API int snav_sim_frame(const snav_sim* sim, int index, snav_mask** tool_mask,
                            snav_mask** anatomy_mask, snav_depth** rel_depth);
SNAV_API int snav_sim_labels_pgm(const snav_sim* sim, int index, const char* path);
SNAV_API int snav_sim_rgb_ppm(const snav_sim* sim, int index, const char* path);
SNAV_API int snav_sim_registered_depth(const snav_sim* sim, snav_depth** out);
SNAV_API int snav_sim_true_registration(const snav_sim* sim, double T[12]);
SNAV_API int snav_sim_gt_csv(const snav_sim* sim, const char* path);
SNAV_API int snav_sim_segments_csv(const snav_sim* sim, const char* path);
/* exact landmarks, and clicked landmarks with the configured pixel jitter */
SNAV_API int snav_sim_landmarks_csv(const snav_sim* sim, const char* path);
SNAV_API int snav_sim_clicked_landmarks_csv(const snav_sim* sim, unsigned long long salt,
                                            const char* path);

/* anatomy registration from `name,u,v,X,Y,Z` landmark rows */
SNAV_API int snav_register_landmarks_csv(const snav_camera* cam, const char* landmarks_csv,
                                         double T[12], double* rmse_px, double* rmse_mm);
SNAV_API int snav_render_anatomy_depth(const snav_mesh* anatomy, const double T[12],
                                       const snav_camera* cam, snav_depth** out);

/* per-frame tool pose tracking */
SNAV_API int snav_tracker_create(const snav_camera* cam, const snav_mesh* tool, int depth_only,
                                 int robust_fit, snav_tracker** out);
SNAV_API void snav_tracker_destroy(snav_tracker* t);
SNAV_API int snav_tracker_track(snav_tracker* t, const snav_mask* tool_mask,
                                const snav_mask* anatomy_mask, const snav_depth* rel_depth,
                                const snav_depth* registered_anatomy, int frame_index);
/* pose of the most recent frame; gate holds "init"/"tilt"/"no_tilt"/"held" */
SNAV_API int snav_tracker_pose(const snav_tracker* t, double T[12], double d[3],
                               double* length_px, char gate[16]);
SNAV_API int snav_tracker_save_log_csv(const snav_tracker* t, const char* path);

/* depth-gap-modulated structure overlay on a PPM image */
SNAV_API int snav_overlay_ppm(const char* base_ppm, const snav_mesh* structure_mesh,
                              const double T[12], const snav_camera* cam,
                              const snav_depth* z_bone, double alpha0, double tau_mm,
                              int rational_decay, const char* out_ppm);

/* pose-log evaluation: per-axis tip errors, rotation-propagation discrepancy,
 * gate counts, and (when a segments file is given) per-segment gate accuracy */
SNAV_API int snav_evaluate_csv(const char* est_csv, const char* ref_csv, double tip_x,
                               double tip_y, double tip_z, const char* segments_csv,
                               const char* report_csv);

#ifdef __cplusplus
}
#endif

#endif /* SURGNAV_H */
