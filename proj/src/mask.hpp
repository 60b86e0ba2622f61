#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "camera.hpp"

namespace surgnav {

class BinaryMask {
 public:
  BinaryMask() = default;
  BinaryMask(int width, int height) : width_(width), height_(height), bits_(width * height, 0) {}

  int width() const { return width_; }
  int height() const { return height_; }
  bool at(int x, int y) const { return bits_[y * width_ + x] != 0; }
  void set(int x, int y, bool v) { bits_[y * width_ + x] = v ? 1 : 0; }
  bool in_bounds(int x, int y) const { return x >= 0 && x < width_ && y >= 0 && y < height_; }

  const std::vector<uint8_t>& bits() const { return bits_; }
  std::vector<uint8_t>& bits() { return bits_; }

  size_t area() const;

  static BinaryMask read_pgm(const std::string& path);
  void write_pgm(const std::string& path) const;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<uint8_t> bits_;
};

// 8-bit label image sharing the PGM container (0 = background)
class LabelImage {
 public:
  LabelImage() = default;
  LabelImage(int width, int height) : width_(width), height_(height), labels_(width * height, 0) {}

  int width() const { return width_; }
  int height() const { return height_; }
  uint8_t at(int x, int y) const { return labels_[y * width_ + x]; }
  void set(int x, int y, uint8_t v) { labels_[y * width_ + x] = v; }

  BinaryMask label_mask(uint8_t label) const;

  static LabelImage read_pgm(const std::string& path);
  void write_pgm(const std::string& path) const;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<uint8_t> labels_;
};

struct MaskSkeleton {
  Pixel d_2D = Pixel(1, 0);   // unit first principal axis, image plane
  Pixel e1 = Pixel(0, 0);     // extremum with minimal projection onto d_2D
  Pixel e2 = Pixel(0, 0);     // extremum with maximal projection
  double length_px = 0.0;     // projection spread e1..e2
  Pixel centroid = Pixel(0, 0);
  bool near_isotropic = false;  // eigenvalue ratio below threshold, direction unreliable
  bool truncated = false;       // boundary crop exhausted its iteration budget
};

struct TipTrack {
  Pixel p_t = Pixel(0, 0);
  Pixel p_prev = Pixel(0, 0);
  bool initialized = false;
};

struct TrajectoryPrompt {
  double x_min = 0, x_max = 0, y_min = 0, y_max = 0;  // bbox
  Pixel mu = Pixel(0, 0);
  Pixel sigma = Pixel(0, 0);
  std::vector<Pixel> positive_points;
  std::vector<Pixel> negative_points;
};

// Principal-axis skeleton of the foreground pixels. Sign of d_2D follows the
// previous direction when one is supplied, else the first nonzero component is
// made positive.
MaskSkeleton mask_pca(const BinaryMask& mask, const Pixel* prev_dir = nullptr);

// Tip choice among skeleton endpoints. Uninitialized track: the endpoint
// farther from the image boundary is the tip (the boundary-closer one is the
// shaft). Initialized: nearest endpoint to the previous tip, ties toward e1.
Pixel select_tip(const MaskSkeleton& skeleton, TipTrack& track, int image_width, int image_height);

// Skeleton robust to base-side border truncation: strips of the mask are
// removed from the base side until the base endpoint leaves the image
// boundary, then PCA is recomputed. Budget exhaustion sets the truncated flag.
MaskSkeleton boundary_crop_pca(const BinaryMask& mask, const Pixel& tip_side,
                               const Pixel* prev_dir = nullptr, int max_iterations = 10,
                               double strip_fraction = 0.05);

TrajectoryPrompt build_trajectory_prompt(const std::vector<Pixel>& traj, int K, double sigma_factor,
                                         uint64_t seed);

TrajectoryPrompt add_negative_prompt(const TrajectoryPrompt& prompt, const Pixel& point);

// disk-structuring-element binary morphology (small radii)
BinaryMask dilate(const BinaryMask& mask, int radius);
BinaryMask erode(const BinaryMask& mask, int radius);

}  // namespace surgnav
