#pragma once

#include <string>
#include <vector>

#include "camera.hpp"
#include "depth.hpp"
#include "mesh.hpp"

namespace surgnav {

struct Correspondence {
  Pixel u;   // observed 2D landmark
  Point3 X;  // matching 3D anatomy-frame point, millimeters
};

struct Landmark {
  std::string name;
  Pixel u;
  Point3 X;
};

struct RegistrationResult {
  RigidTransform T_C_A;
  double rmse_px = 0.0;
  double rmse_mm = 0.0;  // rmse_px * mean landmark depth / mean focal
  std::vector<double> residuals_px;
};

// Reprojection-minimizing pose from N >= 4 correspondences: algebraic
// three-point initialization over point triples, best candidate refined by
// damped least squares on (axis-angle, translation). All landmarks must map
// to positive depth.
RegistrationResult solve_pnp(const std::vector<Correspondence>& corrs, const CameraIntrinsics& K);

struct ReprojectionStats {
  double rmse_px = 0.0;
  std::vector<double> residuals_px;    // per point; excluded points hold +inf
  std::vector<int> excluded_indices;   // landmarks behind the camera
};

ReprojectionStats reprojection_rmse(const std::vector<Correspondence>& corrs,
                                    const RigidTransform& T, const CameraIntrinsics& K);

// depth of the registered anatomy surface per pixel (the tip-depth and
// depth-anchoring reference map)
DepthMap render_anatomy_depth(const ToolMesh& anatomy_mesh, const RigidTransform& T_C_A,
                              const CameraIntrinsics& K);

// CSV rows `name,u,v,X,Y,Z`; a leading header row is skipped if present
std::vector<Landmark> load_landmarks_csv(const std::string& path);
void save_landmarks_csv(const std::vector<Landmark>& landmarks, const std::string& path);

}  // namespace surgnav
