#include "renderer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "errors.hpp"

namespace surgnav {

namespace {

constexpr double kNearPlane = 1e-3;  // millimeters

struct ClipVertex {
  Point3 p;  // camera frame
};

// Sutherland-Hodgman clip of a triangle against Z >= near; returns 0-4 vertices
int clip_near(const std::array<Point3, 3>& tri, std::array<Point3, 4>& out) {
  int n = 0;
  for (int i = 0; i < 3; ++i) {
    const Point3& a = tri[i];
    const Point3& b = tri[(i + 1) % 3];
    const bool ain = a.z() >= kNearPlane;
    const bool bin = b.z() >= kNearPlane;
    if (ain) out[n++] = a;
    if (ain != bin) {
      const double t = (kNearPlane - a.z()) / (b.z() - a.z());
      out[n++] = a + t * (b - a);
    }
  }
  return n;
}

void raster_triangle(DepthMap& depth, const Point3& p0, const Point3& p1, const Point3& p2,
                     const CameraIntrinsics& K) {
  const Pixel a = project(p0, K), b = project(p1, K), c = project(p2, K);

  const double area = (b.x() - a.x()) * (c.y() - a.y()) - (b.y() - a.y()) * (c.x() - a.x());
  if (area == 0.0) return;

  int x0 = std::max(0, static_cast<int>(std::floor(std::min({a.x(), b.x(), c.x()}) - 0.5)));
  int x1 = std::min(depth.width() - 1, static_cast<int>(std::ceil(std::max({a.x(), b.x(), c.x()}))));
  int y0 = std::max(0, static_cast<int>(std::floor(std::min({a.y(), b.y(), c.y()}) - 0.5)));
  int y1 = std::min(depth.height() - 1, static_cast<int>(std::ceil(std::max({a.y(), b.y(), c.y()}))));
  if (x0 > x1 || y0 > y1) return;

  const double inv_area = 1.0 / area;
  // depth interpolated perspective-correctly via 1/z
  const double iz0 = 1.0 / p0.z(), iz1 = 1.0 / p1.z(), iz2 = 1.0 / p2.z();

  for (int y = y0; y <= y1; ++y) {
    const double py = y + 0.5;
    for (int x = x0; x <= x1; ++x) {
      const double px = x + 0.5;
      double w0 = (b.x() - a.x()) * (py - a.y()) - (b.y() - a.y()) * (px - a.x());
      double w1 = (c.x() - b.x()) * (py - b.y()) - (c.y() - b.y()) * (px - b.x());
      double w2 = (a.x() - c.x()) * (py - c.y()) - (a.y() - c.y()) * (px - c.x());
      if (area < 0) { w0 = -w0; w1 = -w1; w2 = -w2; }
      if (w0 < 0 || w1 < 0 || w2 < 0) continue;
      // barycentric weights: w1 is opposite vertex 0 etc.
      const double l0 = w1 * std::abs(inv_area);
      const double l1 = w2 * std::abs(inv_area);
      const double l2 = w0 * std::abs(inv_area);
      const double z = 1.0 / (l0 * iz0 + l1 * iz1 + l2 * iz2);
      const float current = depth.at(x, y);
      if (current == kDepthSentinel || z < current) depth.set(x, y, static_cast<float>(z));
    }
  }
}

}  // namespace

DepthMap rasterize_depth(const ToolMesh& mesh, const RigidTransform& T, const CameraIntrinsics& K) {
  DepthMap depth(K.width, K.height, DepthScale::metric_mm);

  std::vector<Point3> cam(mesh.vertices.size());
  for (size_t i = 0; i < mesh.vertices.size(); ++i) cam[i] = T.apply(mesh.vertices[i]);

  for (const auto& f : mesh.faces) {
    const std::array<Point3, 3> tri{cam[f[0]], cam[f[1]], cam[f[2]]};
    if (tri[0].z() >= kNearPlane && tri[1].z() >= kNearPlane && tri[2].z() >= kNearPlane) {
      raster_triangle(depth, tri[0], tri[1], tri[2], K);
      continue;
    }
    std::array<Point3, 4> poly;
    const int n = clip_near(tri, poly);
    for (int i = 2; i < n; ++i) raster_triangle(depth, poly[0], poly[i - 1], poly[i], K);
  }
  return depth;
}

BinaryMask silhouette(const DepthMap& depth) {
  BinaryMask mask(depth.width(), depth.height());
  for (int y = 0; y < depth.height(); ++y)
    for (int x = 0; x < depth.width(); ++x) mask.set(x, y, depth.valid(x, y));
  return mask;
}

DepthMap depth_gap(const DepthMap& z_seg, const DepthMap& z_bone) {
  if (z_seg.width() != z_bone.width() || z_seg.height() != z_bone.height())
    throw Error(ErrorCode::DimensionMismatch, "depth_gap: dimensions differ");
  DepthMap gap(z_seg.width(), z_seg.height(), DepthScale::metric_mm);
  for (int y = 0; y < gap.height(); ++y)
    for (int x = 0; x < gap.width(); ++x) {
      if (!z_seg.valid(x, y) || !z_bone.valid(x, y)) continue;
      const float g = std::max(0.0f, z_seg.at(x, y) - z_bone.at(x, y));
      // a true zero gap is a valid value, not a missing pixel; nudge off the
      // sentinel by keeping validity in the caller through the seg silhouette
      gap.set(x, y, g);
    }
  return gap;
}

std::vector<double> modulate_opacity(const DepthMap& gap, const OverlayConfig& cfg) {
  std::vector<double> alpha(gap.width() * gap.height(), 0.0);
  for (int y = 0; y < gap.height(); ++y)
    for (int x = 0; x < gap.width(); ++x) {
      const double g = gap.at(x, y);
      const double f = cfg.decay == OpacityDecay::exponential ? std::exp(-g / cfg.tau_mm)
                                                              : 1.0 / (1.0 + g / cfg.tau_mm);
      alpha[y * gap.width() + x] = cfg.alpha0 * f;
    }
  return alpha;
}

RgbImage compose_overlay(const RgbImage& base, const std::vector<OverlayStructure>& structures,
                         const DepthMap& z_bone, const OverlayConfig& cfg) {
  const int w = base.width(), h = base.height();
  if (z_bone.width() != w || z_bone.height() != h)
    throw Error(ErrorCode::DimensionMismatch, "compose_overlay: bone depth dimensions differ");
  for (const auto& s : structures)
    if (s.depth->width() != w || s.depth->height() != h)
      throw Error(ErrorCode::DimensionMismatch, "compose_overlay: structure dimensions differ");

  RgbImage out = base;
  std::vector<int> order(structures.size());
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      int n = 0;
      for (size_t i = 0; i < structures.size(); ++i)
        if (structures[i].depth->valid(x, y)) order[n++] = static_cast<int>(i);
      if (n == 0) continue;
      // farthest first so the nearest structure lands on top
      std::sort(order.begin(), order.begin() + n, [&](int ia, int ib) {
        return structures[ia].depth->at(x, y) > structures[ib].depth->at(x, y);
      });
      double r = out.pixel(x, y)[0], g = out.pixel(x, y)[1], b = out.pixel(x, y)[2];
      for (int k = 0; k < n; ++k) {
        const auto& s = structures[order[k]];
        const double z_seg = s.depth->at(x, y);
        double gap = 0.0;
        if (z_bone.valid(x, y)) gap = std::max(0.0, z_seg - static_cast<double>(z_bone.at(x, y)));
        const double f = cfg.decay == OpacityDecay::exponential ? std::exp(-gap / cfg.tau_mm)
                                                                : 1.0 / (1.0 + gap / cfg.tau_mm);
        const double a = cfg.alpha0 * f;
        r = (1.0 - a) * r + a * s.color[0];
        g = (1.0 - a) * g + a * s.color[1];
        b = (1.0 - a) * b + a * s.color[2];
      }
      out.pixel(x, y)[0] = static_cast<uint8_t>(std::lround(std::clamp(r, 0.0, 255.0)));
      out.pixel(x, y)[1] = static_cast<uint8_t>(std::lround(std::clamp(g, 0.0, 255.0)));
      out.pixel(x, y)[2] = static_cast<uint8_t>(std::lround(std::clamp(b, 0.0, 255.0)));
    }
  return out;
}

double mask_f1(const BinaryMask& a, const BinaryMask& b) {
  if (a.width() != b.width() || a.height() != b.height())
    throw Error(ErrorCode::DimensionMismatch, "mask_f1: dimensions differ");
  size_t inter = 0, na = 0, nb = 0;
  const auto& ba = a.bits();
  const auto& bb = b.bits();
  for (size_t i = 0; i < ba.size(); ++i) {
    na += ba[i] != 0;
    nb += bb[i] != 0;
    inter += (ba[i] & bb[i]) != 0;
  }
  if (na + nb == 0) return 0.0;
  return 2.0 * static_cast<double>(inter) / static_cast<double>(na + nb);
}

RgbImage RgbImage::read_ppm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open image file: " + path);
  std::string magic;
  in >> magic;
  if (magic != "P6") throw Error(ErrorCode::ParseError, path + ": not a P6 PPM file");
  int w, h, maxval;
  if (!(in >> w >> h >> maxval) || w <= 0 || h <= 0 || maxval != 255)
    throw Error(ErrorCode::ParseError, path + ": unsupported PPM geometry");
  in.get();
  RgbImage img(w, h);
  in.read(reinterpret_cast<char*>(img.data().data()), img.data().size());
  if (!in) throw Error(ErrorCode::ParseError, path + ": truncated PPM data");
  return img;
}

void RgbImage::write_ppm(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write image file: " + path);
  out << "P6\n" << width_ << " " << height_ << "\n255\n";
  out.write(reinterpret_cast<const char*>(data_.data()), data_.size());
}

}  // namespace surgnav
