#pragma once

#include <map>
#include <string>
#include <vector>

#include "camera.hpp"
#include "mesh.hpp"
#include "pose_solver.hpp"

namespace surgnav {

struct PoseRecord {
  int frame = -1;
  RigidTransform T;  // camera-from-tool
  Eigen::Vector3d d = Eigen::Vector3d(0, 0, -1);
  double length_px = 0.0;
  GateDecision gate = GateDecision::held;
  std::vector<std::string> flags;
};

PoseRecord to_record(const PoseEstimate& estimate);

// frame,tx,ty,tz,r00..r22,dx,dy,dz,length_px,gate,flags
void save_pose_csv(const std::vector<PoseRecord>& records, const std::string& path);
std::vector<PoseRecord> load_pose_csv(const std::string& path);

struct Stat {
  double mean = 0.0;
  double stddev = 0.0;
  double max_abs = 0.0;
  int count = 0;
};

struct MetricsReport {
  int frames_total = 0;
  int frames_excluded = 0;  // held frames dropped from every statistic
  Stat tip_x_mm, tip_y_mm, tip_z_mm;  // per-axis |delta| of the tip position
  Stat tip_mm;                        // Euclidean tip error
  Stat axis_deg;                      // angle between estimated and true axis
  Stat dyaw_deg, dpitch_deg, dphi_deg;  // per-frame propagation discrepancy
  std::map<std::string, int> gate_counts;
};

// Pose-stream agreement. Tip positions come from the mesh tip pushed through
// each stream's transform. Rotation agreement is incremental: per-frame
// rotation deltas of each stream are compared, the residual is factored as
// yaw (camera y), then pitch (camera x), roll discarded as unobservable for a
// rotationally symmetric tool, and dphi is the geodesic angle of the yaw-pitch
// part. Held frames are excluded, as are increments touching one.
MetricsReport compute_metrics(const std::vector<PoseRecord>& estimated,
                              const std::vector<PoseRecord>& reference,
                              const Point3& p_tip_mesh);

void save_metrics_csv(const MetricsReport& report, const std::string& path);

// yaw-pitch-roll split of a rotation as Ry(yaw) * Rx(pitch) * Rz(roll)
void yaw_pitch_roll(const Eigen::Matrix3d& R, double& yaw, double& pitch, double& roll);

struct SegmentSpec {
  std::string name;
  int start = 0;  // inclusive
  int end = 0;    // inclusive
  GateDecision expected_gate = GateDecision::no_tilt;
};

void save_segments(const std::vector<SegmentSpec>& segments, const std::string& path);
std::vector<SegmentSpec> load_segments(const std::string& path);

// fraction of the segment's frames whose gate matches the expectation
double gate_accuracy(const std::vector<PoseRecord>& records, const SegmentSpec& segment);

}  // namespace surgnav
