#include "depth.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include "errors.hpp"

namespace surgnav {

BinaryMask foreground_union(const std::vector<const BinaryMask*>& masks) {
  if (masks.empty()) throw Error(ErrorCode::DimensionMismatch, "foreground_union: no masks");
  const int w = masks[0]->width(), h = masks[0]->height();
  for (const auto* m : masks)
    if (m->width() != w || m->height() != h)
      throw Error(ErrorCode::DimensionMismatch, "foreground_union: mask dimensions differ");
  BinaryMask out(w, h);
  for (const auto* m : masks) {
    const auto& src = m->bits();
    auto& dst = out.bits();
    for (size_t i = 0; i < src.size(); ++i) dst[i] |= src[i];
  }
  return out;
}

AffineDepthParams fit_affine_scale(const DepthMap& relative, const DepthMap& anatomy_metric,
                                   const BinaryMask& anatomy_mask, bool robust_percentiles) {
  constexpr double kEps = 1e-6;
  if (relative.width() != anatomy_metric.width() || relative.height() != anatomy_metric.height() ||
      relative.width() != anatomy_mask.width() || relative.height() != anatomy_mask.height())
    throw Error(ErrorCode::DimensionMismatch, "fit_affine_scale: dimensions differ");

  std::vector<float> rs, ss;
  for (int y = 0; y < relative.height(); ++y)
    for (int x = 0; x < relative.width(); ++x) {
      if (!anatomy_mask.at(x, y)) continue;
      if (!relative.valid(x, y) || !anatomy_metric.valid(x, y)) continue;
      rs.push_back(relative.at(x, y));
      ss.push_back(anatomy_metric.at(x, y));
    }
  if (rs.size() < 2)
    throw Error(ErrorCode::InsufficientAnchor, "fit_affine_scale: fewer than 2 anchor pixels");

  double r_lo, r_hi, s_lo, s_hi;
  if (robust_percentiles) {
    auto percentile = [](std::vector<float>& v, double q) {
      const size_t k = static_cast<size_t>(q * (v.size() - 1) + 0.5);
      std::nth_element(v.begin(), v.begin() + k, v.end());
      return static_cast<double>(v[k]);
    };
    r_lo = percentile(rs, 0.05);
    r_hi = percentile(rs, 0.95);
    s_lo = percentile(ss, 0.05);
    s_hi = percentile(ss, 0.95);
  } else {
    auto [rmin, rmax] = std::minmax_element(rs.begin(), rs.end());
    auto [smin, smax] = std::minmax_element(ss.begin(), ss.end());
    r_lo = *rmin; r_hi = *rmax;
    s_lo = *smin; s_hi = *smax;
  }

  AffineDepthParams p;
  const double span = r_hi - r_lo;
  p.low_confidence = span < kEps;
  p.alpha = (s_hi - s_lo) / std::max(span, kEps);
  p.beta = s_lo - p.alpha * r_lo;
  return p;
}

DepthMap apply_affine(const DepthMap& relative, const AffineDepthParams& params,
                      bool* negatives_flag) {
  DepthMap out(relative.width(), relative.height(), DepthScale::metric_mm);
  bool saw_negative = false;
  const auto& src = relative.values();
  auto& dst = out.values();
  for (size_t i = 0; i < src.size(); ++i) {
    if (src[i] == kDepthSentinel) continue;
    const double z = params.alpha * src[i] + params.beta;
    if (z > 0.0) {
      dst[i] = static_cast<float>(z);
    } else {
      // negative metric depth is meaningless; invalidate rather than clamp
      saw_negative = true;
    }
  }
  if (negatives_flag) *negatives_flag = saw_negative;
  return out;
}

PointCloud backproject_mask(const DepthMap& depth, const BinaryMask& mask,
                            const CameraIntrinsics& K, int stride) {
  if (depth.scale() != DepthScale::metric_mm)
    throw Error(ErrorCode::ConfigError, "backproject_mask: depth map must be metric");
  if (depth.width() != mask.width() || depth.height() != mask.height())
    throw Error(ErrorCode::DimensionMismatch, "backproject_mask: dimensions differ");
  if (stride < 1) stride = 1;

  PointCloud cloud;
  for (int y = 0; y < depth.height(); y += stride)
    for (int x = 0; x < depth.width(); x += stride) {
      if (!mask.at(x, y) || !depth.valid(x, y)) continue;
      cloud.points.push_back(back_project(Pixel(x + 0.5, y + 0.5), depth.at(x, y), K));
    }
  if (cloud.points.empty())
    throw Error(ErrorCode::EmptyCloud, "backproject_mask: no valid masked pixels");
  return cloud;
}

Eigen::Vector3d axis_prior_3d(const PointCloud& cloud, const Pixel& d_2D) {
  if (cloud.points.size() < 3)
    throw Error(ErrorCode::DegenerateCloud, "axis_prior_3d: need >= 3 points");

  Point3 mu = Point3::Zero();
  for (const auto& p : cloud.points) mu += p;
  mu /= static_cast<double>(cloud.points.size());

  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  for (const auto& p : cloud.points) {
    const Point3 d = p - mu;
    cov += d * d.transpose();
  }
  cov /= static_cast<double>(cloud.points.size());

  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(cov);
  const Eigen::Vector3d evals = eig.eigenvalues();  // ascending
  if (evals[2] < 1e-12 || evals[2] / std::max(evals[1], 1e-12) < 1.5)
    throw Error(ErrorCode::DegenerateCloud, "axis_prior_3d: covariance has no dominant axis");

  Eigen::Vector3d axis = eig.eigenvectors().col(2);

  // sign so the image-plane footprint of the axis agrees with d_2D; the
  // footprint at the centroid is (fx(dx - x dz), fy(dy - y dz)) up to 1/Z
  const double x = mu.x() / mu.z();
  const double y = mu.y() / mu.z();
  Pixel g(axis.x() - x * axis.z(), axis.y() - y * axis.z());
  double agree = g.dot(d_2D);
  if (std::abs(agree) < 1e-12) agree = Pixel(axis.x(), axis.y()).dot(d_2D);
  if (agree < 0) axis = -axis;
  return axis;
}

DepthMap DepthMap::read_pfm(const std::string& path, DepthScale scale) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open depth file: " + path);
  std::string magic;
  in >> magic;
  if (magic != "Pf") throw Error(ErrorCode::ParseError, path + ": not a grayscale PFM file");
  int w, h;
  double hdr_scale;
  if (!(in >> w >> h >> hdr_scale) || w <= 0 || h <= 0)
    throw Error(ErrorCode::ParseError, path + ": malformed PFM header");
  in.get();  // single whitespace before the raster

  DepthMap map(w, h, scale);
  std::vector<float> row(w);
  const bool file_little_endian = hdr_scale < 0.0;
  const bool host_little_endian = std::endian::native == std::endian::little;
  // PFM stores rows bottom-to-top
  for (int y = h - 1; y >= 0; --y) {
    in.read(reinterpret_cast<char*>(row.data()), w * sizeof(float));
    if (!in) throw Error(ErrorCode::ParseError, path + ": truncated PFM data");
    if (file_little_endian != host_little_endian) {
      for (float& f : row) {
        uint32_t u;
        std::memcpy(&u, &f, 4);
        u = __builtin_bswap32(u);
        std::memcpy(&f, &u, 4);
      }
    }
    for (int x = 0; x < w; ++x) map.set(x, y, std::isfinite(row[x]) ? row[x] : kDepthSentinel);
  }
  return map;
}

void DepthMap::write_pfm(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write depth file: " + path);
  out << "Pf\n" << width_ << " " << height_ << "\n-1.0\n";
  std::vector<float> row(width_);
  const bool host_little_endian = std::endian::native == std::endian::little;
  for (int y = height_ - 1; y >= 0; --y) {
    for (int x = 0; x < width_; ++x) row[x] = at(x, y);
    if (!host_little_endian) {
      for (float& f : row) {
        uint32_t u;
        std::memcpy(&u, &f, 4);
        u = __builtin_bswap32(u);
        std::memcpy(&f, &u, 4);
      }
    }
    out.write(reinterpret_cast<const char*>(row.data()), width_ * sizeof(float));
  }
}

}  // namespace surgnav
