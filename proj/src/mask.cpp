#include "mask.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>

#include "errors.hpp"
#include "rng.hpp"

namespace surgnav {

namespace {

constexpr double kNearIsotropicRatio = 1.5;

// Pixel (x, y) contributes its center (x+0.5, y+0.5); all mask geometry and
// the rasterizer share this continuous-coordinate convention.
std::vector<Pixel> foreground_centers(const BinaryMask& mask) {
  std::vector<Pixel> pts;
  pts.reserve(1024);
  for (int y = 0; y < mask.height(); ++y)
    for (int x = 0; x < mask.width(); ++x)
      if (mask.at(x, y)) pts.emplace_back(x + 0.5, y + 0.5);
  return pts;
}

MaskSkeleton pca_of_points(const std::vector<Pixel>& pts, const Pixel* prev_dir) {
  if (pts.empty()) throw Error(ErrorCode::EmptyMask, "mask_pca: no foreground pixels");
  if (pts.size() == 1) throw Error(ErrorCode::DegenerateMask, "mask_pca: single-pixel mask");

  Pixel mu = Pixel::Zero();
  for (const auto& p : pts) mu += p;
  mu /= static_cast<double>(pts.size());

  double sxx = 0, sxy = 0, syy = 0;
  for (const auto& p : pts) {
    const Pixel d = p - mu;
    sxx += d.x() * d.x();
    sxy += d.x() * d.y();
    syy += d.y() * d.y();
  }
  const double n = static_cast<double>(pts.size());
  sxx /= n; sxy /= n; syy /= n;

  // closed-form symmetric 2x2 eigendecomposition
  const double tr = sxx + syy;
  const double det = sxx * syy - sxy * sxy;
  const double disc = std::sqrt(std::max(tr * tr / 4.0 - det, 0.0));
  const double l1 = tr / 2.0 + disc;
  const double l2 = tr / 2.0 - disc;
  if (l1 < 1e-12) throw Error(ErrorCode::DegenerateMask, "mask_pca: covariance rank 0");

  Pixel dir;
  if (std::abs(sxy) > 1e-12) {
    dir = Pixel(l1 - syy, sxy).normalized();
  } else {
    dir = (sxx >= syy) ? Pixel(1, 0) : Pixel(0, 1);
  }

  MaskSkeleton sk;
  sk.near_isotropic = l1 / std::max(l2, 1e-12) < kNearIsotropicRatio;

  if (prev_dir && prev_dir->squaredNorm() > 0) {
    if (dir.dot(*prev_dir) < 0) dir = -dir;
  } else {
    if (std::abs(dir.x()) > 1e-12 ? dir.x() < 0 : dir.y() < 0) dir = -dir;
  }
  sk.d_2D = dir;
  sk.centroid = mu;

  double lo = pts[0].dot(dir), hi = lo;
  size_t ilo = 0, ihi = 0;
  for (size_t i = 1; i < pts.size(); ++i) {
    const double proj = pts[i].dot(dir);
    if (proj < lo) { lo = proj; ilo = i; }
    if (proj > hi) { hi = proj; ihi = i; }
  }
  sk.e1 = pts[ilo];
  sk.e2 = pts[ihi];
  sk.length_px = hi - lo;
  return sk;
}

bool on_image_border(const Pixel& p, int width, int height) {
  return p.x() <= 1.0 || p.y() <= 1.0 || p.x() >= width - 1.0 || p.y() >= height - 1.0;
}

}  // namespace

size_t BinaryMask::area() const {
  size_t n = 0;
  for (uint8_t b : bits_) n += b != 0;
  return n;
}

MaskSkeleton mask_pca(const BinaryMask& mask, const Pixel* prev_dir) {
  return pca_of_points(foreground_centers(mask), prev_dir);
}

Pixel select_tip(const MaskSkeleton& skeleton, TipTrack& track, int image_width,
                 int image_height) {
  const Pixel& e1 = skeleton.e1;
  const Pixel& e2 = skeleton.e2;
  Pixel tip;
  if (!track.initialized) {
    // the endpoint closer to the image boundary is taken as the shaft side
    auto border_dist = [&](const Pixel& p) {
      return std::min(std::min(p.x(), p.y()),
                      std::min(image_width - p.x(), image_height - p.y()));
    };
    tip = border_dist(e1) >= border_dist(e2) ? e1 : e2;
    track.initialized = true;
    track.p_prev = tip;
  } else {
    const double d1 = (e1 - track.p_t).squaredNorm();
    const double d2 = (e2 - track.p_t).squaredNorm();
    tip = (d1 <= d2) ? e1 : e2;
    track.p_prev = track.p_t;
  }
  track.p_t = tip;
  return tip;
}

MaskSkeleton boundary_crop_pca(const BinaryMask& mask, const Pixel& tip_side,
                               const Pixel* prev_dir, int max_iterations,
                               double strip_fraction) {
  std::vector<Pixel> pts = foreground_centers(mask);
  MaskSkeleton sk = pca_of_points(pts, prev_dir);
  const MaskSkeleton pre_crop = sk;

  for (int iter = 0; iter < max_iterations; ++iter) {
    const bool base_is_e2 = (sk.e1 - tip_side).squaredNorm() <= (sk.e2 - tip_side).squaredNorm();
    const Pixel base = base_is_e2 ? sk.e2 : sk.e1;
    if (!on_image_border(base, mask.width(), mask.height())) return sk;

    const double thickness = std::max(strip_fraction * sk.length_px, 1.0);
    const Pixel dir = sk.d_2D;
    std::vector<Pixel> kept;
    kept.reserve(pts.size());
    if (base_is_e2) {
      const double cut = sk.e2.dot(dir) - thickness;
      for (const auto& p : pts)
        if (p.dot(dir) <= cut) kept.push_back(p);
    } else {
      const double cut = sk.e1.dot(dir) + thickness;
      for (const auto& p : pts)
        if (p.dot(dir) >= cut) kept.push_back(p);
    }
    if (kept.size() < 2) {
      MaskSkeleton out = pre_crop;
      out.truncated = true;
      return out;
    }
    pts.swap(kept);
    const Pixel keep_sign = sk.d_2D;
    sk = pca_of_points(pts, &keep_sign);
  }
  sk.truncated = true;
  return sk;
}

TrajectoryPrompt build_trajectory_prompt(const std::vector<Pixel>& traj, int K,
                                         double sigma_factor, uint64_t seed) {
  if (traj.size() < 2)
    throw Error(ErrorCode::EmptyMask, "build_trajectory_prompt: need >= 2 trajectory points");
  TrajectoryPrompt pr;
  pr.x_min = pr.x_max = traj[0].x();
  pr.y_min = pr.y_max = traj[0].y();
  for (const auto& p : traj) {
    pr.x_min = std::min(pr.x_min, p.x());
    pr.x_max = std::max(pr.x_max, p.x());
    pr.y_min = std::min(pr.y_min, p.y());
    pr.y_max = std::max(pr.y_max, p.y());
  }
  // degenerate hull: inflate the collapsed dimensions by one pixel per side
  if (pr.x_max - pr.x_min <= 0) { pr.x_min -= 1; pr.x_max += 1; }
  if (pr.y_max - pr.y_min <= 0) { pr.y_min -= 1; pr.y_max += 1; }

  pr.mu = Pixel((pr.x_min + pr.x_max) / 2.0, (pr.y_min + pr.y_max) / 2.0);
  pr.sigma = Pixel(sigma_factor * (pr.x_max - pr.x_min), sigma_factor * (pr.y_max - pr.y_min));

  Rng rng(seed);
  pr.positive_points.reserve(K);
  for (int k = 0; k < K; ++k) {
    const double x = std::clamp(rng.normal(pr.mu.x(), pr.sigma.x()), pr.x_min, pr.x_max);
    const double y = std::clamp(rng.normal(pr.mu.y(), pr.sigma.y()), pr.y_min, pr.y_max);
    pr.positive_points.emplace_back(x, y);
  }
  return pr;
}

TrajectoryPrompt add_negative_prompt(const TrajectoryPrompt& prompt, const Pixel& point) {
  TrajectoryPrompt out = prompt;
  out.negative_points.push_back(point);
  return out;
}

BinaryMask dilate(const BinaryMask& mask, int radius) {
  if (radius <= 0) return mask;
  BinaryMask out(mask.width(), mask.height());
  const int r2 = radius * radius;
  for (int y = 0; y < mask.height(); ++y)
    for (int x = 0; x < mask.width(); ++x) {
      if (!mask.at(x, y)) continue;
      for (int dy = -radius; dy <= radius; ++dy)
        for (int dx = -radius; dx <= radius; ++dx) {
          if (dx * dx + dy * dy > r2) continue;
          const int nx = x + dx, ny = y + dy;
          if (mask.in_bounds(nx, ny)) out.set(nx, ny, true);
        }
    }
  return out;
}

BinaryMask erode(const BinaryMask& mask, int radius) {
  if (radius <= 0) return mask;
  BinaryMask out(mask.width(), mask.height());
  const int r2 = radius * radius;
  for (int y = 0; y < mask.height(); ++y)
    for (int x = 0; x < mask.width(); ++x) {
      if (!mask.at(x, y)) continue;
      bool keep = true;
      for (int dy = -radius; keep && dy <= radius; ++dy)
        for (int dx = -radius; dx <= radius; ++dx) {
          if (dx * dx + dy * dy > r2) continue;
          const int nx = x + dx, ny = y + dy;
          if (!mask.in_bounds(nx, ny) || !mask.at(nx, ny)) { keep = false; break; }
        }
      out.set(x, y, keep);
    }
  return out;
}

namespace {

void read_pgm_header(std::ifstream& in, const std::string& path, int& w, int& h) {
  std::string magic;
  in >> magic;
  if (magic != "P5") throw Error(ErrorCode::ParseError, path + ": not a P5 PGM file");
  auto next_int = [&](int& v) {
    // skip whitespace and '#' comment lines
    for (;;) {
      int c = in.peek();
      if (c == EOF) break;
      if (c == '#') {
        std::string line;
        std::getline(in, line);
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        in.get();
      } else {
        break;
      }
    }
    if (!(in >> v)) throw Error(ErrorCode::ParseError, path + ": truncated PGM header");
  };
  int maxval = 0;
  next_int(w);
  next_int(h);
  next_int(maxval);
  if (w <= 0 || h <= 0 || maxval != 255)
    throw Error(ErrorCode::ParseError, path + ": unsupported PGM geometry");
  in.get();  // single whitespace after maxval
}

}  // namespace

BinaryMask BinaryMask::read_pgm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open mask file: " + path);
  int w, h;
  read_pgm_header(in, path, w, h);
  BinaryMask mask(w, h);
  std::vector<uint8_t> row(w);
  for (int y = 0; y < h; ++y) {
    in.read(reinterpret_cast<char*>(row.data()), w);
    if (!in) throw Error(ErrorCode::ParseError, path + ": truncated PGM data");
    for (int x = 0; x < w; ++x) mask.set(x, y, row[x] >= 128);
  }
  return mask;
}

void BinaryMask::write_pgm(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write mask file: " + path);
  out << "P5\n" << width_ << " " << height_ << "\n255\n";
  std::vector<uint8_t> row(width_);
  for (int y = 0; y < height_; ++y) {
    for (int x = 0; x < width_; ++x) row[x] = at(x, y) ? 255 : 0;
    out.write(reinterpret_cast<const char*>(row.data()), width_);
  }
}

BinaryMask LabelImage::label_mask(uint8_t label) const {
  BinaryMask mask(width_, height_);
  for (int y = 0; y < height_; ++y)
    for (int x = 0; x < width_; ++x) mask.set(x, y, at(x, y) == label);
  return mask;
}

LabelImage LabelImage::read_pgm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open label file: " + path);
  int w, h;
  read_pgm_header(in, path, w, h);
  LabelImage img(w, h);
  std::vector<uint8_t> row(w);
  for (int y = 0; y < h; ++y) {
    in.read(reinterpret_cast<char*>(row.data()), w);
    if (!in) throw Error(ErrorCode::ParseError, path + ": truncated PGM data");
    for (int x = 0; x < w; ++x) img.set(x, y, row[x]);
  }
  return img;
}

void LabelImage::write_pgm(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write label file: " + path);
  out << "P5\n" << width_ << " " << height_ << "\n255\n";
  for (int y = 0; y < height_; ++y)
    out.write(reinterpret_cast<const char*>(&labels_[y * width_]), width_);
}

}  // namespace surgnav
