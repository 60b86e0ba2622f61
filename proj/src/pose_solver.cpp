#include "pose_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "errors.hpp"
#include "renderer.hpp"

namespace surgnav {

AxisSolution solve_axis(const Pixel& d_2D, double rho, double d_z, const Point3& p_tip_C,
                        const Eigen::Vector3d& d_prior, const CameraIntrinsics& K) {
  if (d_2D.norm() < 1e-9)
    throw Error(ErrorCode::DegenerateYaw, "solve_axis: image direction carries no yaw");
  if (p_tip_C.z() <= 0)
    throw Error(ErrorCode::NonPositiveDepth, "solve_axis: tip behind the camera");
  rho = std::clamp(rho, 0.0, 1.0);

  const Pixel m = d_2D.normalized();
  const double x = p_tip_C.x() / p_tip_C.z();
  const double y = p_tip_C.y() / p_tip_C.z();

  // the projected footprint of d at (x, y) is (fx (d_x - x d_z), fy (d_y - y d_z)),
  // so axes with footprint parallel to m form the pencil
  //   d_xy(alpha) = (x, y) d_z + alpha (m_x / fx, m_y / fy)
  const double A = m.x() / K.fx;
  const double B = m.y() / K.fy;
  const double Cx = x * d_z;
  const double Cy = y * d_z;

  // |d_xy(alpha)|^2 = rho^2
  const double a = A * A + B * B;
  const double b = 2.0 * (Cx * A + Cy * B);
  const double c = Cx * Cx + Cy * Cy - rho * rho;
  const double disc = b * b - 4.0 * a * c;

  AxisSolution out;
  std::vector<double> alphas;
  if (disc < 0) {
    out.infeasible = true;
    alphas.push_back(-b / (2.0 * a));  // closest attainable in-plane magnitude
  } else {
    const double s = std::sqrt(disc);
    alphas.push_back((-b + s) / (2.0 * a));
    alphas.push_back((-b - s) / (2.0 * a));
  }

  const Eigen::Vector3d prior =
      d_prior.norm() > 1e-12 ? d_prior.normalized() : Eigen::Vector3d::Zero();
  double best_score = -std::numeric_limits<double>::infinity();
  for (double alpha : alphas) {
    Eigen::Vector3d d(Cx + alpha * A, Cy + alpha * B, d_z);
    const double dn = d.norm();
    if (dn < 1e-12) continue;
    d /= dn;
    // footprint of this root is alpha * m, so its direction score is sign(alpha)
    const double footprint = alpha > 0 ? 1.0 : (alpha < 0 ? -1.0 : 0.0);
    const double score = footprint + d.dot(prior);
    if (score > best_score) {
      best_score = score;
      out.d = d;
    }
  }
  if (!std::isfinite(best_score))
    throw Error(ErrorCode::DegenerateYaw, "solve_axis: no valid axis root");
  return out;
}

BinaryMask render_tool_mask(const ToolMesh& tool, const Eigen::Vector3d& d, const Point3& p_tip_C,
                            const CameraIntrinsics& K) {
  const RigidTransform T = align_mesh(tool, d, p_tip_C);
  return silhouette(rasterize_depth(tool, T, K));
}

double silhouette_length_px(const BinaryMask& silhouette, const Pixel& tip_px,
                            const Pixel* dir_hint) {
  return boundary_crop_pca(silhouette, tip_px, dir_hint).length_px;
}

const char* gate_name(GateDecision g) {
  switch (g) {
    case GateDecision::init: return "init";
    case GateDecision::tilt: return "tilt";
    case GateDecision::no_tilt: return "no_tilt";
    case GateDecision::held: return "held";
  }
  return "held";
}

GateDecision gate_from_name(const std::string& name) {
  if (name == "init") return GateDecision::init;
  if (name == "tilt") return GateDecision::tilt;
  if (name == "no_tilt") return GateDecision::no_tilt;
  if (name == "held") return GateDecision::held;
  throw Error(ErrorCode::ParseError, "unknown gate name: " + name);
}

namespace {

BinaryMask anchor_mask(const BinaryMask& anatomy, const BinaryMask& tool) {
  BinaryMask out(anatomy.width(), anatomy.height());
  for (int y = 0; y < anatomy.height(); ++y)
    for (int x = 0; x < anatomy.width(); ++x)
      out.set(x, y, anatomy.at(x, y) && !tool.at(x, y));
  return out;
}

}  // namespace

Tracker::Tracker(TrackerConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.K.validate();
  if (cfg_.tool.vertices.empty())
    throw Error(ErrorCode::EmptyMesh, "Tracker: tool mesh has no vertices");
}

PoseEstimate Tracker::track_frame(const BinaryMask& tool_mask, const BinaryMask& anatomy_mask,
                                  const DepthMap& relative_depth,
                                  const DepthMap& registered_anatomy, int frame_index) {
  try {
    return run_frame(tool_mask, anatomy_mask, relative_depth, registered_anatomy, frame_index);
  } catch (const Error& e) {
    if (!initialized_) throw;  // nothing to hold yet
    PoseEstimate held = last_;
    held.frame_index = frame_index;
    held.gate = GateDecision::held;
    held.flags = {std::string("held_") + error_code_name(e.code())};
    held.f1_tilt = held.f1_no_tilt = -1.0;
    last_ = held;
    return held;
  }
}

PoseEstimate Tracker::run_frame(const BinaryMask& tool_mask, const BinaryMask& anatomy_mask,
                                const DepthMap& relative_depth,
                                const DepthMap& registered_anatomy, int frame_index) {
  std::vector<std::string> flags;

  // observed 2D skeleton; the crop keeps border truncation out of the length
  const Pixel* dir_hint = initialized_ ? &prev_dir_ : nullptr;
  const MaskSkeleton pre = mask_pca(tool_mask, dir_hint);
  const Pixel tip_px = select_tip(pre, tip_track_, cfg_.K.width, cfg_.K.height);
  const MaskSkeleton skel = boundary_crop_pca(tool_mask, tip_px, dir_hint);
  if (skel.truncated) flags.push_back("truncated");
  if (skel.near_isotropic) flags.push_back("near_isotropic");

  Pixel d2d = skel.d_2D;
  if (skel.near_isotropic && initialized_) d2d = prev_dir_;  // measurement unreliable
  const Pixel base_px =
      ((pre.e1 - tip_px).squaredNorm() > (pre.e2 - tip_px).squaredNorm()) ? pre.e1 : pre.e2;
  if (d2d.dot(base_px - tip_px) < 0) d2d = -d2d;  // tip-to-base in the image too
  const double length_px = skel.length_px;

  // metric scale for the monocular depth, anchored on uncovered anatomy
  const AffineDepthParams fit = fit_affine_scale(relative_depth, registered_anatomy,
                                                 anchor_mask(anatomy_mask, tool_mask),
                                                 cfg_.robust_depth_fit);
  if (fit.low_confidence) flags.push_back("low_confidence_fit");
  bool negatives = false;
  const DepthMap scaled = apply_affine(relative_depth, fit, &negatives);
  if (negatives) flags.push_back("negative_scaled_depth");

  // tip depth, preferring the registered anatomy surface under the tip pixel
  const int tx = std::clamp(static_cast<int>(std::floor(tip_px.x())), 0, cfg_.K.width - 1);
  const int ty = std::clamp(static_cast<int>(std::floor(tip_px.y())), 0, cfg_.K.height - 1);
  double tip_z = 0.0;
  if (!cfg_.depth_only && registered_anatomy.valid(tx, ty)) tip_z = registered_anatomy.at(tx, ty);
  if (tip_z <= 0.0) {
    tip_z = scaled.valid(tx, ty) ? scaled.at(tx, ty) : 0.0;
    if (!cfg_.depth_only) flags.push_back("tip_depth_fallback");
  }
  if (tip_z <= 0.0)
    throw Error(ErrorCode::NonPositiveDepth, "track_frame: no usable depth at the tip pixel");
  const Point3 p_tip_C = back_project(tip_px, tip_z, cfg_.K);

  PoseEstimate est;
  est.frame_index = frame_index;
  est.tip_px = tip_px;
  est.p_tip_C = p_tip_C;
  est.length_px = length_px;

  if (!initialized_ || cfg_.depth_only) {
    // coarse 3D direction from the scaled depth under the tool pixels
    const PointCloud cloud = backproject_mask(scaled, tool_mask, cfg_.K, cfg_.cloud_stride);
    const Eigen::Vector3d prior = axis_prior_3d(cloud, d2d);

    // the prior's pitch is noisy; correct its in-plane magnitude by the ratio
    // of the observed skeleton length to the one the prior would produce
    const BinaryMask rendered = render_tool_mask(cfg_.tool, prior, p_tip_C, cfg_.K);
    const double len_mesh =
        silhouette_length_px(rendered, project(p_tip_C, cfg_.K), &d2d);
    if (len_mesh < 1e-9)
      throw Error(ErrorCode::EmptyMask, "track_frame: prior pose renders to nothing");
    const double ratio = length_px / len_mesh;
    const double rho = std::clamp(prior.head<2>().norm() * ratio, 0.0, 1.0);
    double dz = std::sqrt(std::max(0.0, 1.0 - rho * rho));
    if (prior.z() < 0) dz = -dz;

    const AxisSolution sol = solve_axis(d2d, rho, dz, p_tip_C, prior, cfg_.K);
    if (sol.infeasible) flags.push_back("infeasible_constraints");
    est.d_C = sol.d;
    est.gate = GateDecision::init;
    sign_disagreements_ = 0;
  } else {
    if (last_.length_px < 1e-9)
      throw Error(ErrorCode::ZeroPrevLength, "track_frame: previous skeleton length is zero");
    const double prev_rho = std::clamp(last_.d_C.head<2>().norm(), 0.0, 1.0);
    const double prev_dz = last_.d_C.z();

    // proposal A: the length ratio drives an out-of-plane tilt
    const double ratio = length_px / last_.length_px;
    const double rho_t = std::clamp(prev_rho * ratio, 0.0, 1.0);
    double dz_t = std::sqrt(std::max(0.0, 1.0 - rho_t * rho_t));
    if (prev_dz < 0) dz_t = -dz_t;
    const AxisSolution tilt = solve_axis(d2d, rho_t, dz_t, p_tip_C, last_.d_C, cfg_.K);

    // proposal B: keep the tilt, re-aim in the image plane only
    const AxisSolution keep = solve_axis(d2d, prev_rho, prev_dz, p_tip_C, last_.d_C, cfg_.K);

    est.f1_tilt = mask_f1(render_tool_mask(cfg_.tool, tilt.d, p_tip_C, cfg_.K), tool_mask);
    est.f1_no_tilt = mask_f1(render_tool_mask(cfg_.tool, keep.d, p_tip_C, cfg_.K), tool_mask);

    const bool tilt_wins = est.f1_tilt > est.f1_no_tilt + cfg_.f1_tie;
    const AxisSolution& win = tilt_wins ? tilt : keep;
    est.gate = tilt_wins ? GateDecision::tilt : GateDecision::no_tilt;
    if (win.infeasible) flags.push_back("infeasible_constraints");
    Eigen::Vector3d d = win.d;

    // a depth-sign flip must be earned by a persistent prior disagreement
    try {
      const PointCloud cloud = backproject_mask(scaled, tool_mask, cfg_.K, cfg_.cloud_stride);
      const Eigen::Vector3d prior = axis_prior_3d(cloud, d2d);
      const bool disagree =
          std::abs(prior.z()) > 1e-9 && std::signbit(prior.z()) != std::signbit(d.z());
      sign_disagreements_ = disagree ? sign_disagreements_ + 1 : 0;
    } catch (const Error&) {
      flags.push_back("prior_unavailable");
      sign_disagreements_ = 0;
    }
    if (sign_disagreements_ >= cfg_.flip_patience) {
      d.z() = -d.z();
      sign_disagreements_ = 0;
      flags.push_back("dz_flip");
    }
    est.d_C = d;
  }

  est.rho = est.d_C.head<2>().norm();
  est.T_C_mesh = align_mesh(cfg_.tool, est.d_C, p_tip_C);
  est.flags = std::move(flags);

  prev_dir_ = d2d;
  initialized_ = true;
  last_ = est;
  return est;
}

}  // namespace surgnav
