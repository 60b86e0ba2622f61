#include "registration.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "errors.hpp"
#include "renderer.hpp"

namespace surgnav {

namespace {

// ---- small dense polynomial helpers (coefficient arrays, index = power) ----

using Poly = std::vector<double>;

Poly poly_mul(const Poly& a, const Poly& b) {
  Poly out(a.size() + b.size() - 1, 0.0);
  for (size_t i = 0; i < a.size(); ++i)
    for (size_t j = 0; j < b.size(); ++j) out[i + j] += a[i] * b[j];
  return out;
}

Poly poly_add(const Poly& a, const Poly& b, double sb = 1.0) {
  Poly out(std::max(a.size(), b.size()), 0.0);
  for (size_t i = 0; i < a.size(); ++i) out[i] += a[i];
  for (size_t i = 0; i < b.size(); ++i) out[i] += sb * b[i];
  return out;
}

// real roots via companion-matrix eigenvalues
std::vector<double> poly_real_roots(Poly p) {
  while (!p.empty() && std::abs(p.back()) < 1e-14) p.pop_back();
  if (p.size() < 2) return {};
  const int n = static_cast<int>(p.size()) - 1;
  Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) companion(i, n - 1) = -p[i] / p[n];
  companion.block(1, 0, n - 1, n - 1).setIdentity();
  Eigen::EigenSolver<Eigen::MatrixXd> eig(companion);
  std::vector<double> roots;
  for (int i = 0; i < n; ++i) {
    const auto r = eig.eigenvalues()[i];
    if (std::abs(r.imag()) < 1e-7 * std::max(1.0, std::abs(r.real()))) roots.push_back(r.real());
  }
  return roots;
}

// ---- three-point pose ----

// Rigid alignment mapping model points onto camera points (Kabsch)
RigidTransform absolute_orientation(const std::vector<Point3>& model,
                                    const std::vector<Point3>& cam) {
  Point3 cm = Point3::Zero(), cc = Point3::Zero();
  for (size_t i = 0; i < model.size(); ++i) {
    cm += model[i];
    cc += cam[i];
  }
  cm /= static_cast<double>(model.size());
  cc /= static_cast<double>(model.size());

  Eigen::Matrix3d H = Eigen::Matrix3d::Zero();
  for (size_t i = 0; i < model.size(); ++i) H += (model[i] - cm) * (cam[i] - cc).transpose();

  Eigen::JacobiSVD<Eigen::Matrix3d> svd(H, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix3d R = svd.matrixV() * svd.matrixU().transpose();
  if (R.determinant() < 0) {
    Eigen::Matrix3d V = svd.matrixV();
    V.col(2) *= -1;
    R = V * svd.matrixU().transpose();
  }
  RigidTransform T;
  T.R = R;
  T.t = cc - R * cm;
  return T;
}

// All rigid poses placing the three model points on the three camera rays.
// The two ray-constraint quadratics in the distance ratios (u, v) are reduced
// to one quartic in v through their resultant; candidates are validated
// against both original constraints before acceptance.
std::vector<RigidTransform> solve_p3p(const std::array<Point3, 3>& X,
                                      const std::array<Eigen::Vector3d, 3>& rays) {
  const double a = (X[1] - X[2]).norm();
  const double b = (X[0] - X[2]).norm();
  const double c = (X[0] - X[1]).norm();
  if (a < 1e-9 || b < 1e-9 || c < 1e-9) return {};

  const double cos_alpha = rays[1].dot(rays[2]);
  const double cos_beta = rays[0].dot(rays[2]);
  const double cos_gamma = rays[0].dot(rays[1]);

  const double p = (a * a) / (b * b);
  const double q = (c * c) / (b * b);

  // with u = s2/s1, v = s3/s1 and w(v) = 1 + v^2 - 2 v cos_beta:
  //   (i)  u^2 - 2 v cos_alpha u + (v^2 - p w) = 0
  //   (ii) u^2 - 2 cos_gamma  u + (1   - q w) = 0
  const Poly C1{-p, 2.0 * p * cos_beta, 1.0 - p};
  const Poly C2{1.0 - q, 2.0 * q * cos_beta, -q};
  const Poly B1{0.0, -2.0 * cos_alpha};
  const Poly B2{-2.0 * cos_gamma};

  const Poly dC = poly_add(C1, C2, -1.0);
  const Poly dB = poly_add(B1, B2, -1.0);
  // resultant of the two monic quadratics in u:
  // (C1-C2)^2 - B1 (C1-C2)(B1-B2) + C1 (B1-B2)^2
  Poly res = poly_add(poly_mul(dC, dC), poly_mul(poly_mul(B1, dC), dB), -1.0);
  res = poly_add(res, poly_mul(C1, poly_mul(dB, dB)), 1.0);

  std::vector<RigidTransform> out;
  for (double v : poly_real_roots(res)) {
    if (v <= 0) continue;
    const double w = 1.0 + v * v - 2.0 * v * cos_beta;
    if (w <= 1e-12) continue;

    // candidate u from the linear combination, with a quadratic fallback
    std::vector<double> us;
    const double denom = -2.0 * (v * cos_alpha - cos_gamma);
    const double num = (C1[0] - C2[0]) + (C1[1] - C2[1]) * v + (C1[2] - C2[2]) * v * v;
    if (std::abs(denom) > 1e-9) {
      us.push_back(-num / denom);
    } else {
      const double disc = cos_gamma * cos_gamma - (1.0 - q * w);
      if (disc >= 0) {
        us.push_back(cos_gamma + std::sqrt(disc));
        us.push_back(cos_gamma - std::sqrt(disc));
      }
    }
    for (double u : us) {
      if (u <= 0) continue;
      // both original constraints must hold
      const double r1 = u * u - 2.0 * u * v * cos_alpha + v * v - p * w;
      const double r2 = u * u - 2.0 * u * cos_gamma + 1.0 - q * w;
      if (std::abs(r1) > 1e-6 * (1.0 + p) || std::abs(r2) > 1e-6 * (1.0 + q)) continue;

      const double s1 = b / std::sqrt(w);
      const double s2 = u * s1;
      const double s3 = v * s1;
      if (!(s1 > 0 && s2 > 0 && s3 > 0)) continue;

      std::vector<Point3> model{X[0], X[1], X[2]};
      std::vector<Point3> cam{s1 * rays[0], s2 * rays[1], s3 * rays[2]};
      out.push_back(absolute_orientation(model, cam));
    }
  }
  return out;
}

Eigen::Matrix3d skew(const Eigen::Vector3d& v) {
  Eigen::Matrix3d m;
  m << 0, -v.z(), v.y(),
       v.z(), 0, -v.x(),
       -v.y(), v.x(), 0;
  return m;
}

Eigen::Matrix3d exp_so3(const Eigen::Vector3d& w) {
  const double theta = w.norm();
  if (theta < 1e-12) return Eigen::Matrix3d::Identity() + skew(w);
  const Eigen::Vector3d axis = w / theta;
  const Eigen::Matrix3d K = skew(axis);
  return Eigen::Matrix3d::Identity() + std::sin(theta) * K + (1.0 - std::cos(theta)) * K * K;
}

double total_cost(const std::vector<Correspondence>& corrs, const RigidTransform& T,
                  const CameraIntrinsics& K) {
  double cost = 0.0;
  for (const auto& c : corrs) {
    const Point3 pc = T.apply(c.X);
    if (pc.z() <= 0) return std::numeric_limits<double>::infinity();
    const Pixel r = c.u - project(pc, K);
    cost += r.squaredNorm();
  }
  return cost;
}

// damped least squares on (axis-angle, translation); steps that do not
// decrease the cost are rejected and re-damped
RigidTransform refine_pose(const std::vector<Correspondence>& corrs, RigidTransform T,
                           const CameraIntrinsics& K) {
  const int n = static_cast<int>(corrs.size());
  double lambda = 1e-4;
  double cost = total_cost(corrs, T, K);

  for (int iter = 0; iter < 100; ++iter) {
    Eigen::Matrix<double, 6, 6> JtJ = Eigen::Matrix<double, 6, 6>::Zero();
    Eigen::Matrix<double, 6, 1> Jtr = Eigen::Matrix<double, 6, 1>::Zero();
    for (int i = 0; i < n; ++i) {
      const Point3 pc = T.apply(corrs[i].X);
      if (pc.z() <= 0) break;
      const Eigen::Matrix<double, 2, 3> Jp = projection_jacobian(pc, K);
      Eigen::Matrix<double, 2, 6> J;
      J.block<2, 3>(0, 0) = -Jp * (-skew(pc - T.t));  // left-multiplied rotation update
      J.block<2, 3>(0, 3) = -Jp;
      const Pixel r = corrs[i].u - project(pc, K);
      JtJ += J.transpose() * J;
      Jtr += J.transpose() * r;
    }

    bool stepped = false;
    for (int attempt = 0; attempt < 10; ++attempt) {
      Eigen::Matrix<double, 6, 6> A = JtJ;
      for (int d = 0; d < 6; ++d) A(d, d) += lambda * std::max(JtJ(d, d), 1e-12);
      const Eigen::Matrix<double, 6, 1> step = A.ldlt().solve(-Jtr);
      if (!step.allFinite()) break;

      RigidTransform Tn;
      Tn.R = exp_so3(step.head<3>()) * T.R;
      Tn.t = T.t + step.tail<3>();
      const double new_cost = total_cost(corrs, Tn, K);
      if (new_cost < cost) {
        T = Tn;
        cost = new_cost;
        lambda = std::max(lambda * 0.3, 1e-12);
        stepped = true;
        if (step.norm() < 1e-10) return T;
        break;
      }
      lambda *= 10.0;
    }
    if (!stepped) return T;
  }
  return T;
}

}  // namespace

RegistrationResult solve_pnp(const std::vector<Correspondence>& corrs, const CameraIntrinsics& K) {
  const int n = static_cast<int>(corrs.size());
  if (n < 4) throw Error(ErrorCode::TooFewPoints, "solve_pnp: need at least 4 correspondences");

  // collinear 3D points leave the pose under-determined
  {
    Point3 mu = Point3::Zero();
    for (const auto& c : corrs) mu += c.X;
    mu /= n;
    Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
    for (const auto& c : corrs) cov += (c.X - mu) * (c.X - mu).transpose();
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(cov);
    if (eig.eigenvalues()[1] < 1e-10 * std::max(eig.eigenvalues()[2], 1.0))
      throw Error(ErrorCode::DegenerateConfiguration, "solve_pnp: landmarks are collinear");
  }

  std::vector<Eigen::Vector3d> rays(n);
  for (int i = 0; i < n; ++i)
    rays[i] =
        Eigen::Vector3d((corrs[i].u.x() - K.cx) / K.fx, (corrs[i].u.y() - K.cy) / K.fy, 1.0)
            .normalized();

  // candidate poses from every point triple (N stays small in practice)
  RigidTransform best;
  double best_cost = std::numeric_limits<double>::infinity();
  int triples = 0;
  for (int i = 0; i < n && triples < 256; ++i)
    for (int j = i + 1; j < n && triples < 256; ++j)
      for (int k = j + 1; k < n && triples < 256; ++k) {
        ++triples;
        const std::array<Point3, 3> X{corrs[i].X, corrs[j].X, corrs[k].X};
        const std::array<Eigen::Vector3d, 3> R3{rays[i], rays[j], rays[k]};
        for (const auto& cand : solve_p3p(X, R3)) {
          const double cost = total_cost(corrs, cand, K);
          if (cost < best_cost) {
            best_cost = cost;
            best = cand;
          }
        }
      }
  if (!std::isfinite(best_cost))
    throw Error(ErrorCode::NoCheiralSolution, "solve_pnp: no pose places all landmarks in front");

  best = refine_pose(corrs, best, K);

  RegistrationResult result;
  result.T_C_A = best;
  double depth_sum = 0.0;
  double sq_sum = 0.0;
  result.residuals_px.reserve(n);
  for (const auto& c : corrs) {
    const Point3 pc = best.apply(c.X);
    if (pc.z() <= 0)
      throw Error(ErrorCode::NoCheiralSolution, "solve_pnp: refined pose violates cheirality");
    const double r = (c.u - project(pc, K)).norm();
    result.residuals_px.push_back(r);
    sq_sum += r * r;
    depth_sum += pc.z();
  }
  result.rmse_px = std::sqrt(sq_sum / n);
  const double mean_depth = depth_sum / n;
  const double mean_focal = (K.fx + K.fy) / 2.0;
  result.rmse_mm = result.rmse_px * mean_depth / mean_focal;
  return result;
}

ReprojectionStats reprojection_rmse(const std::vector<Correspondence>& corrs,
                                    const RigidTransform& T, const CameraIntrinsics& K) {
  ReprojectionStats stats;
  stats.residuals_px.reserve(corrs.size());
  double sq_sum = 0.0;
  int included = 0;
  for (size_t i = 0; i < corrs.size(); ++i) {
    const Point3 pc = T.apply(corrs[i].X);
    if (pc.z() <= 0) {
      stats.residuals_px.push_back(std::numeric_limits<double>::infinity());
      stats.excluded_indices.push_back(static_cast<int>(i));
      continue;
    }
    const double r = (corrs[i].u - project(pc, K)).norm();
    stats.residuals_px.push_back(r);
    sq_sum += r * r;
    ++included;
  }
  stats.rmse_px = included ? std::sqrt(sq_sum / included) : 0.0;
  return stats;
}

DepthMap render_anatomy_depth(const ToolMesh& anatomy_mesh, const RigidTransform& T_C_A,
                              const CameraIntrinsics& K) {
  return rasterize_depth(anatomy_mesh, T_C_A, K);
}

std::vector<Landmark> load_landmarks_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open landmark file: " + path);
  std::vector<Landmark> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string name, f[5];
    if (!std::getline(ls, name, ',')) continue;
    bool ok = true;
    for (auto& s : f)
      if (!std::getline(ls, s, ',')) ok = false;
    if (!ok) {
      if (lineno == 1) continue;  // header row
      throw Error(ErrorCode::ParseError, path + ":" + std::to_string(lineno) + ": short CSV row");
    }
    try {
      Landmark lm;
      lm.name = name;
      lm.u = Pixel(std::stod(f[0]), std::stod(f[1]));
      lm.X = Point3(std::stod(f[2]), std::stod(f[3]), std::stod(f[4]));
      out.push_back(lm);
    } catch (const std::exception&) {
      if (lineno == 1) continue;  // header row with non-numeric fields
      throw Error(ErrorCode::ParseError,
                  path + ":" + std::to_string(lineno) + ": non-numeric landmark fields");
    }
  }
  return out;
}

void save_landmarks_csv(const std::vector<Landmark>& landmarks, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot write landmark file: " + path);
  out.precision(12);
  out << "name,u,v,X,Y,Z\n";
  for (const auto& lm : landmarks)
    out << lm.name << "," << lm.u.x() << "," << lm.u.y() << "," << lm.X.x() << "," << lm.X.y()
        << "," << lm.X.z() << "\n";
}

}  // namespace surgnav
