#include "mesh.hpp"

#include <Eigen/Geometry>

#include <array>
#include <cmath>
#include <fstream>
#include <sstream>

#include "errors.hpp"

namespace surgnav {

void ToolMesh::refresh_primitives() {
  auto [tip, len] = extract_primitives(vertices, -a_local);
  p_tip_mesh = tip;
  length_mm = len;
}

std::pair<Point3, double> extract_primitives(const std::vector<Point3>& vertices,
                                             const Eigen::Vector3d& a_tip) {
  if (vertices.size() < 2) throw Error(ErrorCode::EmptyMesh, "extract_primitives: need >= 2 vertices");
  size_t best = 0;
  double best_proj = vertices[0].dot(a_tip);
  double lo = best_proj, hi = best_proj;
  for (size_t i = 1; i < vertices.size(); ++i) {
    const double proj = vertices[i].dot(a_tip);
    if (proj > best_proj + 1e-9) {  // ties keep the lowest index
      best_proj = proj;
      best = i;
    }
    lo = std::min(lo, proj);
    hi = std::max(hi, proj);
  }
  // extent along a_base = -a_tip equals the projection spread along a_tip
  return {vertices[best], hi - lo};
}

Eigen::Matrix3d rotation_from_axes(const Eigen::Vector3d& a, const Eigen::Vector3d& d) {
  const double c = a.dot(d);

  if (c < -0.99) {
    // nearly antiparallel: the one-step formula divides by 1 + c and loses
    // digits, so map a onto -d (well conditioned) and finish with a half turn
    // about a deterministic axis orthogonal to d
    int k = 0;
    while (k < 2 && std::abs(d[k]) > 0.9) ++k;
    const Eigen::Vector3d w = d.cross(Eigen::Vector3d::Unit(k)).normalized();
    const Eigen::Matrix3d flip = 2.0 * w * w.transpose() - Eigen::Matrix3d::Identity();
    return flip * rotation_from_axes(a, -d);
  }

  const Eigen::Vector3d v = a.cross(d);
  const double s2 = v.squaredNorm();
  if (s2 < 1e-18 && c > 0.0) return Eigen::Matrix3d::Identity();

  Eigen::Matrix3d vx;
  vx << 0, -v.z(), v.y(),
        v.z(), 0, -v.x(),
        -v.y(), v.x(), 0;
  // (1 - c) / s^2 == 1 / (1 + c), which stays finite away from c = -1
  return Eigen::Matrix3d::Identity() + vx + vx * vx / (1.0 + c);
}

RigidTransform align_mesh(const ToolMesh& mesh, const Eigen::Vector3d& d_C,
                          const Point3& p_tip_C) {
  if (!(p_tip_C.z() > 0.0))
    throw Error(ErrorCode::NonPositiveDepth, "align_mesh: tip must be in front of the camera");
  RigidTransform T;
  T.R = rotation_from_axes(mesh.a_local, d_C);
  T.t = p_tip_C - T.R * mesh.p_tip_mesh;
  return T;
}

ToolMesh load_obj(const std::string& path, const Eigen::Vector3d& a_local) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open mesh file: " + path);

  ToolMesh mesh;
  mesh.a_local = a_local.normalized();
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ls(line);
    std::string tag;
    if (!(ls >> tag)) continue;
    if (tag == "v") {
      double x, y, z;
      if (!(ls >> x >> y >> z))
        throw Error(ErrorCode::ParseError,
                    path + ":" + std::to_string(lineno) + ": malformed vertex record");
      mesh.vertices.emplace_back(x, y, z);
    } else if (tag == "f") {
      std::vector<int> idx;
      std::string tok;
      while (ls >> tok) {
        // face tokens may carry /vt/vn suffixes; only the vertex index is used
        int v = std::atoi(tok.c_str());
        if (v == 0)
          throw Error(ErrorCode::ParseError,
                      path + ":" + std::to_string(lineno) + ": bad face index '" + tok + "'");
        if (v < 0) v = static_cast<int>(mesh.vertices.size()) + 1 + v;
        idx.push_back(v - 1);
      }
      if (idx.size() < 3)
        throw Error(ErrorCode::ParseError,
                    path + ":" + std::to_string(lineno) + ": face with fewer than 3 vertices");
      for (size_t i = 2; i < idx.size(); ++i)
        mesh.faces.push_back({idx[0], idx[i - 1], idx[i]});
    }
    // all other record types ignored
  }
  if (mesh.vertices.size() < 2) throw Error(ErrorCode::EmptyMesh, "mesh has fewer than 2 vertices: " + path);
  for (const auto& f : mesh.faces)
    for (int v : f)
      if (v < 0 || v >= static_cast<int>(mesh.vertices.size()))
        throw Error(ErrorCode::ParseError, "face index out of range in " + path);
  mesh.refresh_primitives();
  return mesh;
}

void save_obj(const ToolMesh& mesh, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot write mesh file: " + path);
  out.precision(10);
  for (const auto& v : mesh.vertices) out << "v " << v.x() << " " << v.y() << " " << v.z() << "\n";
  for (const auto& f : mesh.faces)
    out << "f " << f[0] + 1 << " " << f[1] + 1 << " " << f[2] + 1 << "\n";
}

}  // namespace surgnav
