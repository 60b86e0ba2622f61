#pragma once

#include <string>
#include <vector>

#include "camera.hpp"
#include "depth.hpp"
#include "mask.hpp"
#include "mesh.hpp"

namespace surgnav {

struct AxisSolution {
  Eigen::Vector3d d = Eigen::Vector3d(0, 0, -1);  // unit axis, camera frame
  bool infeasible = false;  // constraints admitted no exact root; clamped to the closest one
};

// Closed-form camera-frame axis with a fixed z component and a fixed in-plane
// magnitude rho, whose projected footprint at the tip point runs parallel to
// d_2D. The quadratic has two roots; the winner maximizes footprint-sign
// agreement plus alignment with d_prior. Throws DegenerateYaw when d_2D
// carries no direction.
AxisSolution solve_axis(const Pixel& d_2D, double rho, double d_z, const Point3& p_tip_C,
                        const Eigen::Vector3d& d_prior, const CameraIntrinsics& K);

// Silhouette of the tool aligned to axis d with its tip pinned at p_tip_C.
BinaryMask render_tool_mask(const ToolMesh& tool, const Eigen::Vector3d& d, const Point3& p_tip_C,
                            const CameraIntrinsics& K);

// Skeleton length of a silhouette, measured exactly like an observed mask
// (border-aware crop included); the tip side is the projected anchor.
double silhouette_length_px(const BinaryMask& silhouette, const Pixel& tip_px,
                            const Pixel* dir_hint);

enum class GateDecision { init, tilt, no_tilt, held };

const char* gate_name(GateDecision g);
GateDecision gate_from_name(const std::string& name);

struct PoseEstimate {
  int frame_index = -1;
  RigidTransform T_C_mesh;
  Eigen::Vector3d d_C = Eigen::Vector3d(0, 0, -1);  // tip-to-base axis, camera frame
  Point3 p_tip_C = Point3::Zero();
  Pixel tip_px = Pixel(0, 0);
  double rho = 0.0;        // in-plane magnitude of d_C
  double length_px = 0.0;  // measured skeleton length of the current mask
  GateDecision gate = GateDecision::held;
  std::vector<std::string> flags;
  double f1_tilt = -1.0;     // silhouette overlap of the tilt proposal
  double f1_no_tilt = -1.0;  // and of the in-plane-only proposal
};

struct TrackerConfig {
  CameraIntrinsics K;
  ToolMesh tool;
  int cloud_stride = 2;
  bool robust_depth_fit = false;
  double f1_tie = 1e-6;   // overlap margin below which the in-plane proposal wins
  int flip_patience = 5;  // consecutive prior disagreements before a d_z sign flip
  // Baseline mode: re-estimate from the scaled monocular depth every frame.
  // The tip depth comes from the scaled map instead of the registered surface
  // and the cross-frame gate never runs (every frame reports gate = init).
  bool depth_only = false;
};

// Per-frame tool pose from a segmentation mask, a relative monocular depth
// map, and the registered anatomy depth. The first frame must succeed; after
// that any per-frame failure re-emits the previous pose with gate = held.
class Tracker {
 public:
  explicit Tracker(TrackerConfig cfg);

  PoseEstimate track_frame(const BinaryMask& tool_mask, const BinaryMask& anatomy_mask,
                           const DepthMap& relative_depth, const DepthMap& registered_anatomy,
                           int frame_index);

  bool initialized() const { return initialized_; }
  const PoseEstimate& last() const { return last_; }

 private:
  PoseEstimate run_frame(const BinaryMask& tool_mask, const BinaryMask& anatomy_mask,
                         const DepthMap& relative_depth, const DepthMap& registered_anatomy,
                         int frame_index);

  TrackerConfig cfg_;
  bool initialized_ = false;
  PoseEstimate last_;
  TipTrack tip_track_;
  Pixel prev_dir_ = Pixel(0, 0);
  int sign_disagreements_ = 0;
};

}  // namespace surgnav
