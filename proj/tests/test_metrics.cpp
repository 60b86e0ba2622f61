#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include <Eigen/Geometry>

#include "errors.hpp"
#include "metrics.hpp"
#include "rng.hpp"

using namespace surgnav;

namespace {

// translations land on a 1/256 grid so adding small integer offsets stays
// exact in floating point
double dyadic(Rng& rng, double lo, double hi) {
  return std::round(rng.uniform(lo, hi) * 256.0) / 256.0;
}

RigidTransform random_rigid(Rng& rng) {
  Eigen::Vector3d axis(rng.normal(), rng.normal(), rng.normal());
  axis.normalize();
  RigidTransform T;
  T.R = Eigen::AngleAxisd(rng.uniform(-M_PI, M_PI), axis).toRotationMatrix();
  T.t = Eigen::Vector3d(dyadic(rng, -50, 50), dyadic(rng, -50, 50), dyadic(rng, 80, 200));
  return T;
}

std::vector<PoseRecord> random_stream(Rng& rng, int n) {
  std::vector<PoseRecord> out;
  for (int i = 0; i < n; ++i) {
    PoseRecord r;
    r.frame = i;
    r.T = random_rigid(rng);
    r.d = (r.T.R * Eigen::Vector3d::UnitZ()).normalized();
    r.length_px = rng.uniform(50, 300);
    r.gate = i == 0 ? GateDecision::init : GateDecision::no_tilt;
    out.push_back(r);
  }
  return out;
}

}  // namespace

TEST_CASE("identical streams produce zero disagreement") {
  Rng rng(801);
  const auto ref = random_stream(rng, 40);
  const MetricsReport rep = compute_metrics(ref, ref, Point3(0, 0, 0));
  CHECK(rep.frames_total == 40);
  CHECK(rep.frames_excluded == 0);
  CHECK(rep.tip_x_mm.mean == 0.0);
  CHECK(rep.tip_y_mm.mean == 0.0);
  CHECK(rep.tip_z_mm.mean == 0.0);
  CHECK(rep.tip_mm.mean == 0.0);
  CHECK(rep.tip_mm.max_abs == 0.0);
  CHECK(rep.axis_deg.mean < 1e-5);
  CHECK(rep.dyaw_deg.mean < 1e-6);
  CHECK(rep.dpitch_deg.mean < 1e-6);
  CHECK(rep.dphi_deg.mean < 1e-5);
  CHECK(rep.tip_mm.count == 40);
  CHECK(rep.dyaw_deg.count == 39);
}

TEST_CASE("a constant tip offset is reported exactly") {
  Rng rng(802);
  const auto ref = random_stream(rng, 25);
  auto est = ref;
  for (auto& r : est) r.T.t += Eigen::Vector3d(1, 2, 2);

  const MetricsReport rep = compute_metrics(est, ref, Point3(0, 0, 0));
  CHECK(rep.tip_x_mm.mean == 1.0);
  CHECK(rep.tip_y_mm.mean == 2.0);
  CHECK(rep.tip_z_mm.mean == 2.0);
  CHECK(rep.tip_mm.mean == 3.0);  // sqrt(1 + 4 + 4)
  CHECK(rep.tip_x_mm.stddev == 0.0);
  CHECK(rep.tip_mm.max_abs == 3.0);
  // rotations agree, so every propagation stat stays at numerical zero
  CHECK(rep.dyaw_deg.mean < 1e-9);
  CHECK(rep.dpitch_deg.mean < 1e-9);
}

TEST_CASE("a constant rotation offset leaves propagation untouched") {
  Rng rng(803);
  const auto ref = random_stream(rng, 30);
  const Eigen::Matrix3d Q =
      Eigen::AngleAxisd(0.7, Eigen::Vector3d(1, 2, -1).normalized()).toRotationMatrix();
  auto est = ref;
  for (auto& r : est) {
    r.T.R = Q * r.T.R;  // same left offset every frame
    r.d = Q * r.d;
  }

  const MetricsReport rep = compute_metrics(est, ref, Point3(0, 0, 0));
  CHECK(rep.dyaw_deg.mean < 1e-9);
  CHECK(rep.dpitch_deg.mean < 1e-9);
  CHECK(rep.dphi_deg.mean < 1e-6);
  CHECK(rep.dyaw_deg.max_abs < 1e-9);
  // the absolute axis disagreement is of course visible
  CHECK(rep.axis_deg.mean > 10.0);
}

TEST_CASE("held frames drop out of every statistic including touching increments") {
  Rng rng(804);
  const auto ref = random_stream(rng, 6);
  auto est = ref;
  est[2].gate = GateDecision::held;
  est[2].T.t += Eigen::Vector3d(1e6, -1e6, 1e6);  // wild values must not leak
  est[2].T.R = Eigen::AngleAxisd(2.0, Eigen::Vector3d::UnitX()).toRotationMatrix() * est[2].T.R;

  const MetricsReport rep = compute_metrics(est, ref, Point3(0, 0, 0));
  CHECK(rep.frames_excluded == 1);
  CHECK(rep.tip_mm.count == 5);
  CHECK(rep.tip_mm.mean == 0.0);
  CHECK(rep.dyaw_deg.count == 3);  // increments (1,2) and (2,3) are gone
  CHECK(rep.dyaw_deg.mean < 1e-9);
  CHECK(rep.gate_counts.at("held") == 1);
  CHECK(rep.gate_counts.at("no_tilt") == 4);
  CHECK(rep.gate_counts.at("init") == 1);
}

TEST_CASE("stream shape mismatches are rejected") {
  Rng rng(805);
  const auto ref = random_stream(rng, 5);
  auto shorter = ref;
  shorter.pop_back();
  CHECK_THROWS_AS(compute_metrics(shorter, ref, Point3(0, 0, 0)), Error);
  auto shifted = ref;
  shifted[3].frame = 99;
  CHECK_THROWS_AS(compute_metrics(shifted, ref, Point3(0, 0, 0)), Error);
}

TEST_CASE("yaw pitch roll factorization roundtrips") {
  Rng rng(806);
  for (int trial = 0; trial < 500; ++trial) {
    const double yaw = rng.uniform(-M_PI + 0.05, M_PI - 0.05);
    const double pitch = rng.uniform(-M_PI / 2 + 0.05, M_PI / 2 - 0.05);
    const double roll = rng.uniform(-M_PI + 0.05, M_PI - 0.05);
    const Eigen::Matrix3d R =
        (Eigen::AngleAxisd(yaw, Eigen::Vector3d::UnitY()) *
         Eigen::AngleAxisd(pitch, Eigen::Vector3d::UnitX()) *
         Eigen::AngleAxisd(roll, Eigen::Vector3d::UnitZ()))
            .toRotationMatrix();
    double y2, p2, r2;
    yaw_pitch_roll(R, y2, p2, r2);
    CHECK(std::abs(y2 - yaw) < 1e-9);
    CHECK(std::abs(p2 - pitch) < 1e-9);
    CHECK(std::abs(r2 - roll) < 1e-9);
    const Eigen::Matrix3d back =
        (Eigen::AngleAxisd(y2, Eigen::Vector3d::UnitY()) *
         Eigen::AngleAxisd(p2, Eigen::Vector3d::UnitX()) *
         Eigen::AngleAxisd(r2, Eigen::Vector3d::UnitZ()))
            .toRotationMatrix();
    CHECK((back - R).norm() < 1e-12);
  }
}

TEST_CASE("pose csv roundtrips including gates and flags") {
  Rng rng(807);
  auto records = random_stream(rng, 8);
  records[3].gate = GateDecision::tilt;
  records[4].gate = GateDecision::held;
  records[4].flags = {"held_EmptyMask"};
  records[6].flags = {"truncated", "low_confidence_fit"};

  const std::string path = "pose_roundtrip.csv";
  save_pose_csv(records, path);
  const auto back = load_pose_csv(path);
  REQUIRE(back.size() == records.size());
  for (size_t i = 0; i < records.size(); ++i) {
    CHECK(back[i].frame == records[i].frame);
    CHECK((back[i].T.t - records[i].T.t).norm() < 1e-9);
    CHECK((back[i].T.R - records[i].T.R).norm() < 1e-9);
    CHECK((back[i].d - records[i].d).norm() < 1e-9);
    CHECK(back[i].length_px == doctest::Approx(records[i].length_px).epsilon(1e-12));
    CHECK(back[i].gate == records[i].gate);
    CHECK(back[i].flags == records[i].flags);
  }
  std::remove(path.c_str());
  CHECK_THROWS_AS(load_pose_csv("missing_pose.csv"), Error);
}

TEST_CASE("metrics csv lists every statistic") {
  Rng rng(808);
  const auto ref = random_stream(rng, 10);
  const MetricsReport rep = compute_metrics(ref, ref, Point3(0, 0, 0));
  const std::string path = "metrics_out.csv";
  save_metrics_csv(rep, path);
  std::ifstream in(path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  CHECK(text.rfind("metric,mean,stddev,max_abs,count", 0) == 0);
  CHECK(text.find("tip_mm,") != std::string::npos);
  CHECK(text.find("dpitch_deg,") != std::string::npos);
  CHECK(text.find("frames_total,10") != std::string::npos);
  CHECK(text.find("gate_no_tilt,9") != std::string::npos);
  std::remove(path.c_str());
}

TEST_CASE("segment specs roundtrip and score gate agreement") {
  std::vector<SegmentSpec> segs;
  segs.push_back({"tilt_1", 4, 7, GateDecision::tilt});
  segs.push_back({"occlusion_1", 8, 9, GateDecision::no_tilt});
  const std::string path = "segments_roundtrip.csv";
  save_segments(segs, path);
  const auto back = load_segments(path);
  REQUIRE(back.size() == 2);
  CHECK(back[0].name == "tilt_1");
  CHECK(back[0].start == 4);
  CHECK(back[0].end == 7);
  CHECK(back[0].expected_gate == GateDecision::tilt);
  std::remove(path.c_str());

  Rng rng(809);
  auto records = random_stream(rng, 10);
  records[4].gate = GateDecision::tilt;
  records[5].gate = GateDecision::tilt;
  records[6].gate = GateDecision::tilt;
  records[7].gate = GateDecision::no_tilt;  // one miss in tilt_1
  CHECK(gate_accuracy(records, back[0]) == doctest::Approx(0.75));
  CHECK(gate_accuracy(records, back[1]) == doctest::Approx(1.0));
  // empty segments count as perfect rather than dividing by zero
  CHECK(gate_accuracy(records, {"empty", 50, 60, GateDecision::tilt}) == 1.0);
}

TEST_CASE("estimates convert to records field by field") {
  PoseEstimate est;
  est.frame_index = 12;
  est.T_C_mesh.t = Point3(1, 2, 3);
  est.d_C = Eigen::Vector3d(0, 1, 0);
  est.length_px = 123.5;
  est.gate = GateDecision::tilt;
  est.flags = {"truncated"};
  const PoseRecord rec = to_record(est);
  CHECK(rec.frame == 12);
  CHECK(rec.T.t == est.T_C_mesh.t);
  CHECK(rec.d == est.d_C);
  CHECK(rec.length_px == 123.5);
  CHECK(rec.gate == GateDecision::tilt);
  CHECK(rec.flags == est.flags);
}
