#include "camera.hpp"

#include <cmath>
#include <fstream>

#include "config.hpp"
#include "errors.hpp"

namespace surgnav {

void CameraIntrinsics::validate() const {
  if (!(fx > 0.0) || !(fy > 0.0))
    throw Error(ErrorCode::ConfigError, "intrinsics: focal lengths must be positive");
  if (width <= 0 || height <= 0)
    throw Error(ErrorCode::ConfigError, "intrinsics: image size must be positive");
  if (!(cx >= 0.0 && cx < width) || !(cy >= 0.0 && cy < height))
    throw Error(ErrorCode::ConfigError, "intrinsics: principal point outside image");
}

CameraIntrinsics CameraIntrinsics::load(const std::string& path) {
  Config cfg = Config::load(path);
  CameraIntrinsics K;
  K.fx = cfg.get_double("fx");
  K.fy = cfg.get_double("fy");
  K.cx = cfg.get_double("cx");
  K.cy = cfg.get_double("cy");
  K.width = cfg.get_int("width");
  K.height = cfg.get_int("height");
  K.validate();
  return K;
}

void CameraIntrinsics::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot write intrinsics file: " + path);
  out.precision(17);
  out << "fx=" << fx << "\nfy=" << fy << "\ncx=" << cx << "\ncy=" << cy << "\nwidth=" << width
      << "\nheight=" << height << "\n";
}

Pixel project(const Point3& p, const CameraIntrinsics& K) {
  if (!p.allFinite()) throw Error(ErrorCode::NonFiniteInput, "project: non-finite point");
  if (!(p.z() > 0.0)) throw Error(ErrorCode::NonPositiveDepth, "project: Z must be positive");
  return {K.fx * p.x() / p.z() + K.cx, K.fy * p.y() / p.z() + K.cy};
}

Point3 back_project(const Pixel& pix, double z, const CameraIntrinsics& K) {
  if (!pix.allFinite() || !std::isfinite(z))
    throw Error(ErrorCode::NonFiniteInput, "back_project: non-finite input");
  if (!(z > 0.0)) throw Error(ErrorCode::NonPositiveDepth, "back_project: z must be positive");
  return {(pix.x() - K.cx) / K.fx * z, (pix.y() - K.cy) / K.fy * z, z};
}

Eigen::Matrix<double, 2, 3> projection_jacobian(const Point3& p, const CameraIntrinsics& K) {
  if (!p.allFinite()) throw Error(ErrorCode::NonFiniteInput, "projection_jacobian: non-finite point");
  if (!(p.z() > 0.0))
    throw Error(ErrorCode::NonPositiveDepth, "projection_jacobian: Z must be positive");
  const double x = p.x() / p.z();
  const double y = p.y() / p.z();
  Eigen::Matrix<double, 2, 3> J;
  J << K.fx, 0.0, -K.fx * x,
       0.0, K.fy, -K.fy * y;
  J /= p.z();
  return J;
}

}  // namespace surgnav
