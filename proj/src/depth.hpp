#pragma once

#include <string>
#include <vector>

#include "camera.hpp"
#include "mask.hpp"

namespace surgnav {

enum class DepthScale { relative, metric_mm };

// sentinel value marking invalid pixels in depth maps
constexpr float kDepthSentinel = 0.0f;

class DepthMap {
 public:
  DepthMap() = default;
  DepthMap(int width, int height, DepthScale scale)
      : width_(width), height_(height), scale_(scale), values_(width * height, kDepthSentinel) {}

  int width() const { return width_; }
  int height() const { return height_; }
  DepthScale scale() const { return scale_; }
  void set_scale(DepthScale s) { scale_ = s; }

  float at(int x, int y) const { return values_[y * width_ + x]; }
  void set(int x, int y, float v) { values_[y * width_ + x] = v; }
  bool valid(int x, int y) const { return at(x, y) != kDepthSentinel; }

  const std::vector<float>& values() const { return values_; }
  std::vector<float>& values() { return values_; }

  // PFM, single channel, little-endian (negative scale header). Rows are
  // stored bottom-up per the format convention. The metric/relative flag is
  // carried by the file name suffix (.mm.pfm vs .rel.pfm), so callers pass it.
  static DepthMap read_pfm(const std::string& path, DepthScale scale);
  void write_pfm(const std::string& path) const;

 private:
  int width_ = 0;
  int height_ = 0;
  DepthScale scale_ = DepthScale::relative;
  std::vector<float> values_;
};

struct AffineDepthParams {
  double alpha = 1.0;
  double beta = 0.0;
  bool low_confidence = false;  // relative span hit the epsilon guard
};

struct PointCloud {
  std::vector<Point3> points;
};

BinaryMask foreground_union(const std::vector<const BinaryMask*>& masks);

// Affine anchor fit on anatomy pixels valid in both maps: alpha maps the
// relative extrema onto the metric extrema, beta aligns the minima. The
// robust variant uses 5th/95th percentile extrema instead of min/max.
AffineDepthParams fit_affine_scale(const DepthMap& relative, const DepthMap& anatomy_metric,
                                   const BinaryMask& anatomy_mask, bool robust_percentiles = false);

// Z = alpha * R + beta on valid pixels; non-positive outputs become sentinel
DepthMap apply_affine(const DepthMap& relative, const AffineDepthParams& params,
                      bool* negatives_flag = nullptr);

PointCloud backproject_mask(const DepthMap& depth, const BinaryMask& mask,
                            const CameraIntrinsics& K, int stride = 2);

// dominant eigenvector of the cloud covariance, sign-aligned so its image
// projection has non-negative dot with d_2D
Eigen::Vector3d axis_prior_3d(const PointCloud& cloud, const Pixel& d_2D);

}  // namespace surgnav
