#pragma once

#include <Eigen/Core>
#include <string>

namespace surgnav {

using Pixel = Eigen::Vector2d;
using Point3 = Eigen::Vector3d;

struct CameraIntrinsics {
  double fx = 0.0;
  double fy = 0.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 0;
  int height = 0;

  static CameraIntrinsics load(const std::string& path);
  void save(const std::string& path) const;
  void validate() const;
};

// pinhole projection, Z must be positive
Pixel project(const Point3& p, const CameraIntrinsics& K);

// inverse of project at depth z (camera frame, z > 0)
Point3 back_project(const Pixel& pix, double z, const CameraIntrinsics& K);

// 2x3 derivative of project() with respect to the camera-frame point
Eigen::Matrix<double, 2, 3> projection_jacobian(const Point3& p, const CameraIntrinsics& K);

}  // namespace surgnav
