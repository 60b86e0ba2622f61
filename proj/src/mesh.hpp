#pragma once

#include <Eigen/Core>
#include <array>
#include <string>
#include <vector>

#include "camera.hpp"

namespace surgnav {

struct RigidTransform {
  Eigen::Matrix3d R = Eigen::Matrix3d::Identity();
  Eigen::Vector3d t = Eigen::Vector3d::Zero();

  Point3 apply(const Point3& p) const { return R * p + t; }
  RigidTransform compose(const RigidTransform& other) const {
    return {R * other.R, R * other.t + t};
  }
  RigidTransform inverse() const { return {R.transpose(), -(R.transpose() * t)}; }
};

// Triangle mesh in its local frame, millimeters. For tool meshes the canonical
// axis convention is: a_local points tip -> base, a_tip = -a_local, and the
// simulator and solver share this single convention.
struct ToolMesh {
  std::vector<Point3> vertices;
  std::vector<std::array<int, 3>> faces;
  Eigen::Vector3d a_local = Eigen::Vector3d::UnitZ();
  Point3 p_tip_mesh = Point3::Zero();
  double length_mm = 0.0;

  // recompute p_tip_mesh and length_mm from vertices and a_local
  void refresh_primitives();
};

// tip vertex (argmax of v . a_tip, ties to lowest index) and axial extent
std::pair<Point3, double> extract_primitives(const std::vector<Point3>& vertices,
                                             const Eigen::Vector3d& a_tip);

// Rodrigues rotation taking unit vector a onto unit vector d. The anti-parallel
// case returns a 180 degree rotation about a deterministic orthogonal axis.
Eigen::Matrix3d rotation_from_axes(const Eigen::Vector3d& a, const Eigen::Vector3d& d);

// rigid transform placing the mesh tip at p_tip_C with its axis along d_C
RigidTransform align_mesh(const ToolMesh& mesh, const Eigen::Vector3d& d_C, const Point3& p_tip_C);

// ASCII OBJ subset: 'v x y z' and 'f i j k' records (1-based indices, optional
// /vt/vn suffixes ignored, polygons fan-triangulated). Other records skipped.
ToolMesh load_obj(const std::string& path, const Eigen::Vector3d& a_local);
void save_obj(const ToolMesh& mesh, const std::string& path);

}  // namespace surgnav
