#pragma once

#include <cstdint>
#include <vector>

#include "camera.hpp"
#include "depth.hpp"
#include "mask.hpp"
#include "mesh.hpp"
#include "metrics.hpp"
#include "registration.hpp"
#include "renderer.hpp"
#include "stream_buffer.hpp"

namespace surgnav {

struct SimNoise {
  int mask_radius = 0;        // dilate-or-erode magnitude on observed masks, 0 = exact
  double depth_sigma = 0.0;   // relative gaussian depth noise
  double warp_amp = 0.0;      // low-frequency multiplicative depth warp
  double click_sigma = 0.0;   // landmark click jitter, pixels
};

// the calibrated noise profile used by the hybrid-vs-depth-only comparisons
SimNoise calibrated_noise();

struct SimConfig {
  CameraIntrinsics K;
  int frames = 300;
  uint64_t seed = 1;
  SimNoise noise;
};

SimConfig default_sim_config();

// cone-tipped cylinder, apex at the local origin, axis +z tip to base
ToolMesh make_tool_mesh(double length_mm = 50.0, double radius_mm = 2.5, int segments = 24);

// open-surface heightfield mound, anatomy frame, millimeters
ToolMesh make_anatomy_mesh();

// buried tube a few millimeters behind the anatomy surface (overlay target)
ToolMesh make_structure_mesh();

// analytic anatomy surface height at (x, y), anatomy frame
double anatomy_height(double x, double y);

struct SimFrame {
  int index = 0;
  BinaryMask tool_mask;       // observed tool segmentation (noise applied)
  BinaryMask anatomy_mask;    // observed anatomy segmentation (noise applied)
  LabelImage labels;          // exact labels: 0 bg, 1 anatomy, 2 tool, 3 occluder
  DepthMap rel_depth;         // relative depth on the labeled foreground
  PoseRecord gt;              // true tool pose and expected gate
  double occluder_radius_px = 0.0;
  double tilt_step_deg = 0.0;  // |pitch(i) - pitch(i-1)|
};

// Deterministic 300-frame microsurgical scene: a tool sliding on a heightfield
// mound through approach, tilt, occlusion, and withdrawal phases. Frames are
// generated on demand; everything derives from (seed, frame index).
class Simulator {
 public:
  explicit Simulator(const SimConfig& cfg);

  const SimConfig& config() const { return cfg_; }
  const ToolMesh& tool() const { return tool_; }
  const ToolMesh& anatomy() const { return anatomy_; }
  const ToolMesh& structure() const { return structure_; }
  const RigidTransform& T_C_A() const { return T_C_A_; }

  // anatomy surface depth under the true registration
  const DepthMap& registered_depth() const { return anatomy_depth_; }

  const std::vector<Landmark>& landmarks() const { return landmarks_; }

  // landmark clicks with the configured pixel jitter applied
  std::vector<Correspondence> clicked_correspondences(uint64_t salt) const;

  SimFrame frame(int i) const;
  BinaryMask clean_tool_mask(int i) const;

  std::vector<PoseRecord> gt_records() const;
  std::vector<SegmentSpec> stress_segments() const;

  // shaded scene image for overlay rendering
  RgbImage render_rgb(int i) const;

 private:
  struct Pose {
    double phi_rad = 0.0;  // out-of-plane pitch from the image plane
    double psi_rad = 0.0;  // in-plane yaw
    Point3 tip_C = Point3::Zero();
    Eigen::Vector3d d_C = Eigen::Vector3d(0, 0, -1);
    double occluder_radius_px = 0.0;
  };
  Pose pose_at(int i) const;
  void scene_at(int i, LabelImage* labels, DepthMap* scene_depth) const;

  SimConfig cfg_;
  ToolMesh tool_;
  ToolMesh anatomy_;
  ToolMesh structure_;
  RigidTransform T_C_A_;
  DepthMap anatomy_depth_;
  std::vector<Landmark> landmarks_;
  double sym_y_ = 0.0;          // anatomy-frame y putting the tip on the Y_C = 0 plane
  Point3 sym_tip_C_;            // tip point shared by the static late phases
  mutable std::vector<PoseRecord> gt_cache_;
};

// propagators for catch-up experiments

// perfect transport: returns the exact segmentation at the target frame
class OracleMaskPropagator : public MaskPropagator {
 public:
  explicit OracleMaskPropagator(const Simulator& sim) : sim_(&sim) {}
  BinaryMask propagate(int64_t from_index, const BinaryMask& from_mask,
                       int64_t to_index) override;

 private:
  const Simulator* sim_;
};

// Transport whose quality decays with hop gap: a hop keeps a
// 1 - coef (gap / ref_gap)^2 fraction of the mask quality, and the carried
// mask is the innermost surviving fraction of the exact target mask.
class DecayMaskPropagator : public MaskPropagator {
 public:
  DecayMaskPropagator(const Simulator& sim, double coef = 0.01, double ref_gap = 10.0)
      : sim_(&sim), coef_(coef), ref_gap_(ref_gap) {}
  BinaryMask propagate(int64_t from_index, const BinaryMask& from_mask,
                       int64_t to_index) override;

 private:
  const Simulator* sim_;
  double coef_;
  double ref_gap_;
};

// innermost fraction of a mask by distance to the background, deterministic
BinaryMask innermost_fraction(const BinaryMask& mask, double fraction);

double mask_iou(const BinaryMask& a, const BinaryMask& b);

}  // namespace surgnav
