#include "metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "errors.hpp"

namespace surgnav {

namespace {

constexpr double kRad2Deg = 180.0 / M_PI;

std::string join_flags(const std::vector<std::string>& flags) {
  std::string out;
  for (size_t i = 0; i < flags.size(); ++i) {
    if (i) out += "|";
    out += flags[i];
  }
  return out;
}

std::vector<std::string> split_flags(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == '|') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

class StatAccum {
 public:
  void add(double v) {
    sum_ += v;
    sq_ += v * v;
    max_ = std::max(max_, std::abs(v));
    ++n_;
  }
  Stat finish() const {
    Stat s;
    s.count = n_;
    if (n_ == 0) return s;
    s.mean = sum_ / n_;
    const double var = std::max(sq_ / n_ - s.mean * s.mean, 0.0);
    s.stddev = std::sqrt(var);
    s.max_abs = max_;
    return s;
  }

 private:
  double sum_ = 0, sq_ = 0, max_ = 0;
  int n_ = 0;
};

}  // namespace

PoseRecord to_record(const PoseEstimate& e) {
  PoseRecord r;
  r.frame = e.frame_index;
  r.T = e.T_C_mesh;
  r.d = e.d_C;
  r.length_px = e.length_px;
  r.gate = e.gate;
  r.flags = e.flags;
  return r;
}

void save_pose_csv(const std::vector<PoseRecord>& records, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot write pose file: " + path);
  out.precision(15);
  out << "frame,tx,ty,tz,r00,r01,r02,r10,r11,r12,r20,r21,r22,dx,dy,dz,length_px,gate,flags\n";
  for (const auto& r : records) {
    out << r.frame << "," << r.T.t.x() << "," << r.T.t.y() << "," << r.T.t.z();
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) out << "," << r.T.R(i, j);
    out << "," << r.d.x() << "," << r.d.y() << "," << r.d.z();
    out << "," << r.length_px << "," << gate_name(r.gate) << "," << join_flags(r.flags) << "\n";
  }
}

std::vector<PoseRecord> load_pose_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open pose file: " + path);
  std::vector<PoseRecord> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    if (line.rfind("frame,", 0) == 0) continue;  // header
    std::vector<std::string> f;
    std::string cur;
    for (char c : line) {
      if (c == ',') {
        f.push_back(cur);
        cur.clear();
      } else {
        cur += c;
      }
    }
    f.push_back(cur);
    if (f.size() < 18)
      throw Error(ErrorCode::ParseError, path + ":" + std::to_string(lineno) + ": short pose row");
    try {
      PoseRecord r;
      r.frame = std::stoi(f[0]);
      r.T.t = Point3(std::stod(f[1]), std::stod(f[2]), std::stod(f[3]));
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) r.T.R(i, j) = std::stod(f[4 + 3 * i + j]);
      r.d = Eigen::Vector3d(std::stod(f[13]), std::stod(f[14]), std::stod(f[15]));
      r.length_px = std::stod(f[16]);
      r.gate = gate_from_name(f[17]);
      if (f.size() > 18) r.flags = split_flags(f[18]);
      out.push_back(r);
    } catch (const std::invalid_argument&) {
      throw Error(ErrorCode::ParseError,
                  path + ":" + std::to_string(lineno) + ": non-numeric pose fields");
    }
  }
  return out;
}

void yaw_pitch_roll(const Eigen::Matrix3d& R, double& yaw, double& pitch, double& roll) {
  // R = Ry(yaw) Rx(pitch) Rz(roll):
  //   R(1,2) = -sin(pitch), R(0,2) = sin(yaw) cos(pitch), R(2,2) = cos(yaw) cos(pitch)
  //   R(1,0) = cos(pitch) sin(roll), R(1,1) = cos(pitch) cos(roll)
  pitch = std::asin(std::clamp(-R(1, 2), -1.0, 1.0));
  yaw = std::atan2(R(0, 2), R(2, 2));
  roll = std::atan2(R(1, 0), R(1, 1));
}

MetricsReport compute_metrics(const std::vector<PoseRecord>& estimated,
                              const std::vector<PoseRecord>& reference,
                              const Point3& p_tip_mesh) {
  if (estimated.size() != reference.size())
    throw Error(ErrorCode::LengthMismatch, "compute_metrics: stream lengths differ");
  const int n = static_cast<int>(estimated.size());

  MetricsReport rep;
  rep.frames_total = n;
  StatAccum ax, ay, az, ae, aang, ayaw, apitch, aphi;

  std::vector<bool> excluded(n, false);
  for (int i = 0; i < n; ++i) {
    if (estimated[i].frame != reference[i].frame)
      throw Error(ErrorCode::LengthMismatch, "compute_metrics: frame indices disagree");
    rep.gate_counts[gate_name(estimated[i].gate)]++;
    if (estimated[i].gate == GateDecision::held) {
      excluded[i] = true;
      rep.frames_excluded++;
      continue;
    }
    const Point3 tip_e = estimated[i].T.apply(p_tip_mesh);
    const Point3 tip_r = reference[i].T.apply(p_tip_mesh);
    const Point3 delta = tip_e - tip_r;
    ax.add(std::abs(delta.x()));
    ay.add(std::abs(delta.y()));
    az.add(std::abs(delta.z()));
    ae.add(delta.norm());
    const double cosang =
        std::clamp(estimated[i].d.normalized().dot(reference[i].d.normalized()), -1.0, 1.0);
    aang.add(std::acos(cosang) * kRad2Deg);
  }

  for (int i = 1; i < n; ++i) {
    if (excluded[i] || excluded[i - 1]) continue;
    const Eigen::Matrix3d inc_e = estimated[i - 1].T.R.transpose() * estimated[i].T.R;
    const Eigen::Matrix3d inc_r = reference[i - 1].T.R.transpose() * reference[i].T.R;
    const Eigen::Matrix3d diff = inc_r.transpose() * inc_e;
    double yaw, pitch, roll;
    yaw_pitch_roll(diff, yaw, pitch, roll);
    ayaw.add(std::abs(yaw) * kRad2Deg);
    apitch.add(std::abs(pitch) * kRad2Deg);
    // geodesic angle of the roll-free part Ry(yaw) Rx(pitch):
    // trace = cos(yaw) + cos(pitch) + cos(yaw) cos(pitch)
    const double tr = std::cos(yaw) + std::cos(pitch) + std::cos(yaw) * std::cos(pitch);
    aphi.add(std::acos(std::clamp((tr - 1.0) / 2.0, -1.0, 1.0)) * kRad2Deg);
  }

  rep.tip_x_mm = ax.finish();
  rep.tip_y_mm = ay.finish();
  rep.tip_z_mm = az.finish();
  rep.tip_mm = ae.finish();
  rep.axis_deg = aang.finish();
  rep.dyaw_deg = ayaw.finish();
  rep.dpitch_deg = apitch.finish();
  rep.dphi_deg = aphi.finish();
  return rep;
}

void save_metrics_csv(const MetricsReport& rep, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot write metrics file: " + path);
  out.precision(9);
  out << "metric,mean,stddev,max_abs,count\n";
  auto row = [&](const char* name, const Stat& s) {
    out << name << "," << s.mean << "," << s.stddev << "," << s.max_abs << "," << s.count << "\n";
  };
  row("tip_x_mm", rep.tip_x_mm);
  row("tip_y_mm", rep.tip_y_mm);
  row("tip_z_mm", rep.tip_z_mm);
  row("tip_mm", rep.tip_mm);
  row("axis_deg", rep.axis_deg);
  row("dyaw_deg", rep.dyaw_deg);
  row("dpitch_deg", rep.dpitch_deg);
  row("dphi_deg", rep.dphi_deg);
  out << "frames_total," << rep.frames_total << ",,,\n";
  out << "frames_excluded," << rep.frames_excluded << ",,,\n";
  for (const auto& [gate, count] : rep.gate_counts) out << "gate_" << gate << "," << count << ",,,\n";
}

void save_segments(const std::vector<SegmentSpec>& segments, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot write segments file: " + path);
  out << "name,start,end,expected_gate\n";
  for (const auto& s : segments)
    out << s.name << "," << s.start << "," << s.end << "," << gate_name(s.expected_gate) << "\n";
}

std::vector<SegmentSpec> load_segments(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open segments file: " + path);
  std::vector<SegmentSpec> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#' || line.rfind("name,", 0) == 0) continue;
    std::istringstream ls(line);
    SegmentSpec s;
    std::string f;
    if (!std::getline(ls, s.name, ',')) continue;
    if (!std::getline(ls, f, ',')) throw Error(ErrorCode::ParseError, path + ": short segment row");
    s.start = std::stoi(f);
    if (!std::getline(ls, f, ',')) throw Error(ErrorCode::ParseError, path + ": short segment row");
    s.end = std::stoi(f);
    if (!std::getline(ls, f, ',')) throw Error(ErrorCode::ParseError, path + ": short segment row");
    s.expected_gate = gate_from_name(f);
    out.push_back(s);
  }
  return out;
}

double gate_accuracy(const std::vector<PoseRecord>& records, const SegmentSpec& segment) {
  int hits = 0, total = 0;
  for (const auto& r : records) {
    if (r.frame < segment.start || r.frame > segment.end) continue;
    ++total;
    if (r.gate == segment.expected_gate) ++hits;
  }
  return total ? static_cast<double>(hits) / total : 1.0;
}

}  // namespace surgnav
