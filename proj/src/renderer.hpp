#pragma once

#include <array>
#include <string>
#include <vector>

#include "depth.hpp"
#include "mask.hpp"
#include "mesh.hpp"

namespace surgnav {

class RgbImage {
 public:
  RgbImage() = default;
  RgbImage(int width, int height) : width_(width), height_(height), data_(width * height * 3, 0) {}

  int width() const { return width_; }
  int height() const { return height_; }
  uint8_t* pixel(int x, int y) { return &data_[(y * width_ + x) * 3]; }
  const uint8_t* pixel(int x, int y) const { return &data_[(y * width_ + x) * 3]; }
  const std::vector<uint8_t>& data() const { return data_; }
  std::vector<uint8_t>& data() { return data_; }

  static RgbImage read_ppm(const std::string& path);
  void write_ppm(const std::string& path) const;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<uint8_t> data_;
};

enum class OpacityDecay { exponential, rational };

struct OverlayConfig {
  double alpha0 = 0.8;                            // base opacity
  double tau_mm = 2.0;                            // depth-gap fade length
  OpacityDecay decay = OpacityDecay::exponential;
};

struct OverlayStructure {
  const DepthMap* depth = nullptr;  // rendered structure depth (z_seg)
  std::array<uint8_t, 3> color{255, 255, 255};
};

// Z-buffered per-pixel nearest-surface depth of the transformed mesh. Pixel
// coverage is sampled at integer centers, no anti-aliasing, no back-face
// culling; triangles are clipped against a small positive near plane.
DepthMap rasterize_depth(const ToolMesh& mesh, const RigidTransform& T, const CameraIntrinsics& K);

// foreground where the depth map has a surface
BinaryMask silhouette(const DepthMap& depth);

// elementwise max(0, z_seg - z_bone) where both valid, sentinel elsewhere
DepthMap depth_gap(const DepthMap& z_seg, const DepthMap& z_bone);

// alpha(u,v) = alpha0 * f(gap) computed pointwise on the gap values;
// exponential f = exp(-gap/tau), rational f = 1/(1 + gap/tau). Callers mask
// the result by the structure silhouette.
std::vector<double> modulate_opacity(const DepthMap& gap, const OverlayConfig& cfg);

// Depth-gap-modulated alpha blend of the selected structures over the base
// image. Overlapping structures composite nearest-first (nearest on top).
RgbImage compose_overlay(const RgbImage& base, const std::vector<OverlayStructure>& structures,
                         const DepthMap& z_bone, const OverlayConfig& cfg);

// F1 overlap between two masks: 2|A∩B| / (|A|+|B|); 0 when both empty
double mask_f1(const BinaryMask& a, const BinaryMask& b);

}  // namespace surgnav
