#include <doctest.h>

#include <sstream>

#include "igss/calibration/detection.hpp"
#include "igss/calibration/pivot.hpp"
#include "igss/calibration/projection.hpp"
#include "igss/calibration/triangulation.hpp"
#include "igss/error.hpp"
#include "igss/registration/point_registration.hpp"
#include "igss/sim/phantom.hpp"
#include "support/oracles.hpp"

using namespace igss;
using namespace igss::calib;
using geom::RigidTransform;

namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error thrown");
  return ErrorCode::InvalidArgument;
}

// Tracker -> body poses of a tool pivoting about `pivot` with tip offset `tip`.
std::vector<RigidTransform> pivot_poses(const Vec3& tip, const Vec3& pivot, int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ang(0.05, 0.6);
  std::vector<RigidTransform> out;
  for (int i = 0; i < n; ++i) {
    const geom::Mat3 r = Eigen::AngleAxisd(ang(rng), testing::random_unit(rng)).toRotationMatrix();
    out.push_back(RigidTransform::from(r, pivot - r * tip));
  }
  return out;
}

Detection2D detections_of(const ProjectionModel& m, const std::vector<LabeledPoint3>& pts) {
  Detection2D d;
  d.view = m.view;
  for (const auto& p : pts) d.points.push_back({p.label, project(m, p.position)});
  return d;
}

std::vector<LabeledPoint3> labeled(const std::vector<Vec3>& pts, const std::string& prefix = "P") {
  std::vector<LabeledPoint3> out;
  for (std::size_t i = 0; i < pts.size(); ++i) out.push_back({prefix + std::to_string(i + 1), pts[i]});
  return out;
}

std::vector<LabeledPoint3> labeled(const reg::FiducialSet& s) {
  std::vector<LabeledPoint3> out;
  for (const auto& p : s.points) out.push_back({p.label, p.position});
  return out;
}

const ProjectionModel kAp = pinhole_view(View::AP, {0.0, 1000.0, 600.0});
const ProjectionModel kLp = pinhole_view(View::LP, {std::numbers::pi / 2, 1000.0, 600.0});

}  // namespace

TEST_CASE("pivot calibration recovers tip and pivot without noise") {
  const auto poses = pivot_poses(Vec3(0, 0, 100), Vec3::Zero(), 20, 1);
  const auto r = pivot_calibrate(poses);
  CHECK((r.tip_offset - Vec3(0, 0, 100)).norm() < 1e-9);
  CHECK(r.pivot_point.norm() < 1e-9);
  CHECK(r.residual_rms < 1e-9);
  const auto tool = make_tool_definition(r);
  CHECK(std::abs(tool.axis.norm() - 1.0) < 1e-9);
  CHECK((tool.axis - Vec3::UnitZ()).norm() < 1e-9);
}

TEST_CASE("pivot calibration errors") {
  std::vector<RigidTransform> same(12, RigidTransform::translation(Vec3(1, 2, 3)));
  CHECK(code_of([&] { (void)pivot_calibrate(same); }) == ErrorCode::InsufficientRotation);
  const auto few = pivot_poses(Vec3(0, 0, 100), Vec3::Zero(), 5, 2);
  CHECK(code_of([&] { (void)pivot_calibrate(few); }) == ErrorCode::TooFewPoses);
}

TEST_CASE("pivot residual is invariant to a change of tracker frame") {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> n(0.0, 0.2);
  auto poses = pivot_poses(Vec3(3, -2, 140), Vec3(100, 50, 900), 30, 3);
  for (auto& p : poses) p = RigidTransform::translation(Vec3(n(rng), n(rng), n(rng))) * p;
  const auto base = pivot_calibrate(poses);
  CHECK(base.residual_rms > 0.01);
  for (int k = 0; k < 10; ++k) {
    const auto world = testing::random_transform(rng, 500.0);
    std::vector<RigidTransform> moved;
    for (const auto& p : poses) moved.push_back(world * p);
    const auto r = pivot_calibrate(moved);
    CHECK(std::abs(r.residual_rms - base.residual_rms) < 1e-10);
    CHECK((r.tip_offset - base.tip_offset).norm() < 1e-8);
    CHECK((r.pivot_point - world.apply(base.pivot_point)).norm() < 1e-8);
  }
}

TEST_CASE("principal axis projects to the principal point") {
  const Vec3 src = source_position({0.0, 1000.0, 600.0});
  CHECK(project(kAp, Vec3::Zero()).norm() < 1e-12);
  CHECK(project(kAp, 0.5 * src).norm() < 1e-12);
  CHECK((camera_center(kAp) - src).norm() < 1e-9);
}

TEST_CASE("projection is invariant to scaling the matrix") {
  std::mt19937_64 rng(8);
  ProjectionModel scaled = kLp;
  scaled.matrix *= 5.0;
  ProjectionModel negated = kLp;
  negated.matrix *= -0.3;
  for (int i = 0; i < 100; ++i) {
    const Vec3 p = testing::random_vec(rng, 100.0);
    CHECK((project(scaled, p) - project(kLp, p)).norm() < 1e-12);
    CHECK((project(negated, p) - project(kLp, p)).norm() < 1e-12);
  }
  CHECK((normalized(scaled).matrix - normalized(kLp).matrix).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(normalized(negated).matrix.row(2).head<3>().norm() == doctest::Approx(1.0));
}

TEST_CASE("projection errors") {
  ProjectionModel flat;
  flat.matrix.block<2, 3>(0, 0).setIdentity();
  CHECK(code_of([&] { (void)normalized(flat); }) == ErrorCode::DegenerateGeometry);
  CHECK(code_of([&] { (void)project(kAp, source_position({0.0, 1000.0, 600.0})); }) == ErrorCode::PointAtInfinity);
}

TEST_CASE("DLT recovers a pinhole model from eight exact points") {
  std::mt19937_64 rng(12);
  std::vector<Vec3> pts;
  for (int i = 0; i < 8; ++i) pts.push_back(testing::random_vec(rng, 80.0));
  const auto world = labeled(pts);
  const auto r = dlt_calibrate(world, detections_of(kAp, world));
  CHECK(r.reprojection_rms < 1e-8);
  CHECK(r.n_points == 8);
  for (const auto& w : world) CHECK((project(r.model, w.position) - project(kAp, w.position)).norm() < 1e-8);
  for (int i = 0; i < 20; ++i) {
    const Vec3 p = testing::random_vec(rng, 80.0);
    CHECK((project(r.model, p) - project(kAp, p)).norm() < 1e-7);
  }
}

TEST_CASE("DLT errors") {
  std::vector<Vec3> plane;
  for (int i = 0; i < 8; ++i) plane.push_back(Vec3(10.0 * i, 7.0 * (i % 3), 0.0));
  const auto world = labeled(plane);
  CHECK(code_of([&] { (void)dlt_calibrate(world, detections_of(kAp, world)); }) == ErrorCode::CoplanarPoints);
  const auto few = labeled({{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}, {1, 1, 1}});
  CHECK(code_of([&] { (void)dlt_calibrate(few, detections_of(kAp, few)); }) == ErrorCode::TooFewPoints);
}

TEST_CASE("blob detection labels a projected jig") {
  const auto ph = sim::generate_phantom({}, 5);
  const auto jig = labeled(ph.jig);
  for (const auto& model : {kAp, kLp}) {
    const auto pattern = project_pattern(model, jig);
    const auto image = render_blobs(model.view, pattern.uv);
    const auto det = detect_fiducials(image, pattern);
    REQUIRE(det.points.size() == 6);
    CHECK(det.missing_labels.empty());
    for (std::size_t i = 0; i < jig.size(); ++i) {
      const auto* hit = det.find(pattern.labels[i]);
      REQUIRE(hit != nullptr);
      CHECK((hit->uv - project(model, jig[i].position)).norm() < 1e-6);
    }
  }
}

TEST_CASE("centroids of neighbouring blobs are not pulled together") {
  // 3.5 mm apart at sigma 0.6 mm: separate components, overlapping windows.
  for (double frac : {0.0, 0.13, 0.37, 0.5}) {
    const std::vector<Vec2> uvs = {Vec2(10.0 + frac, -4.0 + 0.3 * frac), Vec2(13.5 + frac, -4.0),
                                   Vec2(11.5, 0.0 - frac), Vec2(-80.0, 60.0)};
    const auto found = extract_blob_centroids(render_blobs(View::AP, uvs));
    REQUIRE(found.size() == uvs.size());
    for (const auto& uv : uvs) {
      double best = 1e9;
      for (const auto& f : found) best = std::min(best, (f - uv).norm());
      CHECK(best < 1e-6);
    }
  }
}

TEST_CASE("blob outside the detector is reported missing") {
  const auto ph = sim::generate_phantom({}, 5);
  auto jig = labeled(ph.jig);
  jig[2].position.x() += 400.0;  // lands far off the AP detector
  const auto pattern = project_pattern(kAp, jig);
  const auto image = render_blobs(View::AP, pattern.uv);
  const auto det = detect_fiducials(image, pattern);
  CHECK(det.points.size() == 5);
  REQUIRE(det.missing_labels.size() == 1);
  CHECK(det.missing_labels[0] == jig[2].label);
  for (const auto& d : det.points) CHECK((d.uv - project(kAp, std::find_if(jig.begin(), jig.end(), [&](auto& j) {
                                                                return j.label == d.label;
                                                              })->position)).norm() < 0.05);
}

TEST_CASE("too few blobs") {
  const auto pattern = project_pattern(kAp, labeled({{0, 0, 0}, {20, 0, 0}, {0, 0, 30}, {20, 0, 30}}));
  const auto image = render_blobs(View::AP, {pattern.uv[0], pattern.uv[1]});
  CHECK(code_of([&] { (void)detect_fiducials(image, pattern); }) == ErrorCode::TooFewBlobs);
}

TEST_CASE("PGM and sidecar round trip") {
  const auto image = render_blobs(View::LP, {Vec2(1.5, -2.0), Vec2(-30, 40)}, {40.0, 0.5, 0.6, 60000.0});
  std::stringstream ss;
  write_pgm16(ss, image);
  auto back = read_pgm16(ss);
  apply_sidecar(back, sidecar_json(image));
  CHECK(back.width == image.width);
  CHECK(back.view == View::LP);
  CHECK(back.origin_mm == image.origin_mm);
  const auto a = extract_blob_centroids(image);
  const auto b = extract_blob_centroids(back);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK((a[i] - b[i]).norm() < 1e-3);
}

TEST_CASE("triangulation of consistent projections is exact") {
  const Vec3 p(10, 20, 30);
  const auto t = triangulate({kAp, project(kAp, p)}, {kLp, project(kLp, p)});
  CHECK((t.point - p).norm() < 1e-9);
  CHECK(t.ray_gap < 1e-9);

  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> gantry(-std::numbers::pi, std::numbers::pi);
  std::uniform_real_distribution<double> sep(0.3, 2.8);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const double g = gantry(rng);
    const auto a = pinhole_view(View::AP, {g, 1000.0, 600.0});
    const auto b = pinhole_view(View::LP, {g + sep(rng), 1100.0, 650.0});
    const Vec3 q = testing::random_vec(rng, 100.0);
    worst = std::max(worst, (triangulate({a, project(a, q)}, {b, project(b, q)}).point - q).norm());
  }
  CHECK(worst < 1e-9);
}

TEST_CASE("near-parallel rays are rejected") {
  const auto b = pinhole_view(View::LP, {2.0 * std::numbers::pi / 180.0, 1000.0, 600.0});
  CHECK(code_of([&] { (void)triangulate({kAp, Vec2(0, 0)}, {b, Vec2(0, 0)}); }) == ErrorCode::ParallelRays);
}

TEST_CASE("triangulation under detector noise") {
  std::mt19937_64 rng(33);
  std::normal_distribution<double> n(0.0, 0.2);
  const Vec3 p(10, 20, 30);
  int good = 0;
  for (int i = 0; i < 1000; ++i) {
    const auto t = triangulate({kAp, project(kAp, p) + Vec2(n(rng), n(rng))},
                               {kLp, project(kLp, p) + Vec2(n(rng), n(rng))});
    good += (t.point - p).norm() < 1.0;
  }
  CHECK(good >= 950);
}

TEST_CASE("two-view registration is exact without noise and decomposes into its steps") {
  const auto ph = sim::generate_phantom({}, 9);
  const auto truth = RigidTransform::axis_angle(Vec3(0.2, 1, 0.1), 0.3, Vec3(5, 60, -10));
  const auto in_carm = labeled(reg::transformed(ph.jig, truth, geom::Frame::CArm));
  const ViewDetections ap{kAp, detections_of(kAp, in_carm)};
  const ViewDetections lp{kLp, detections_of(kLp, in_carm)};
  const auto r = register_patient_2d(ph.jig, ap, lp);
  CHECK(r.fre_rms < 1e-6);
  CHECK((r.transform.matrix() - truth.matrix()).cwiseAbs().maxCoeff() < 1e-9);

  std::mt19937_64 rng(2);
  std::normal_distribution<double> n(0.0, 0.2);
  ViewDetections noisy_ap = ap, noisy_lp = lp;
  for (auto& d : noisy_ap.detections.points) d.uv += Vec2(n(rng), n(rng));
  for (auto& d : noisy_lp.detections.points) d.uv += Vec2(n(rng), n(rng));
  const auto chained = reg::register_points(triangulate_common(ph.jig, noisy_ap, noisy_lp), ph.jig);
  const auto direct = register_patient_2d(ph.jig, noisy_ap, noisy_lp);
  CHECK((chained.transform.matrix() - direct.transform.matrix()).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(chained.fre_rms == doctest::Approx(direct.fre_rms).epsilon(1e-12));

  ViewDetections sparse = lp;
  sparse.detections.points.resize(3);
  CHECK(code_of([&] { (void)register_patient_2d(ph.jig, ap, sparse); }) == ErrorCode::TooFewCommonLabels);
}

TEST_CASE("two-view FRE versus direct 3D registration at equal FLE") {
  // Detector noise enters twice in the 2D chain: through the DLT calibration of
  // each view and through the jig detections. The 3D comparison point uses the
  // localization error that detection noise alone induces on the triangulated
  // points, with common random numbers for the jig detections.
  const auto ph = sim::generate_phantom({}, 1);
  const auto truth = RigidTransform::axis_angle(Vec3(0.2, 1, 0.1), 0.3, Vec3(5, 60, -10));
  const auto in_carm = reg::transformed(ph.jig, truth, geom::Frame::CArm);
  std::mt19937_64 cage_rng(17);
  std::vector<Vec3> cage_pts;
  for (int i = 0; i < 12; ++i) cage_pts.push_back(testing::random_vec(cage_rng, 70.0));
  const auto cage = labeled(cage_pts, "C");

  const int trials = 4000;
  const double sigma = 0.2;
  double fle2 = 0.0, fre_exact = 0.0, fre_calibrated = 0.0, fre_3d = 0.0;
  std::mt19937_64 rng(5150);
  std::mt19937_64 cal_rng(6160);
  std::normal_distribution<double> n(0.0, sigma);
  for (int t = 0; t < trials; ++t) {
    Detection2D a, b, ca, cb;
    a.view = ca.view = View::AP;
    b.view = cb.view = View::LP;
    for (const auto& p : in_carm.points) {
      const Vec2 da(n(rng), n(rng)), db(n(rng), n(rng));
      a.points.push_back({p.label, project(kAp, p.position) + da});
      b.points.push_back({p.label, project(kLp, p.position) + db});
    }
    for (const auto& c : cage) {
      const Vec2 da(n(cal_rng), n(cal_rng)), db(n(cal_rng), n(cal_rng));
      ca.points.push_back({c.label, project(kAp, c.position) + da});
      cb.points.push_back({c.label, project(kLp, c.position) + db});
    }
    const auto tri = triangulate_common(ph.jig, {kAp, a}, {kLp, b});
    for (std::size_t i = 0; i < tri.size(); ++i)
      fle2 += (tri.points[i].position - in_carm.points[i].position).squaredNorm();
    fre_exact += register_patient_2d(ph.jig, {kAp, a}, {kLp, b}).fre_rms;
    const auto ap_model = dlt_calibrate(cage, ca).model;
    const auto lp_model = dlt_calibrate(cage, cb).model;
    fre_calibrated += register_patient_2d(ph.jig, {ap_model, a}, {lp_model, b}).fre_rms;
  }
  const double fle = std::sqrt(fle2 / (trials * in_carm.size()));
  std::mt19937_64 rng3(5150);
  std::normal_distribution<double> n3(0.0, fle / std::sqrt(3.0));
  for (int t = 0; t < trials; ++t) {
    auto noisy = in_carm;
    for (auto& p : noisy.points) p.position += Vec3(n3(rng3), n3(rng3), n3(rng3));
    fre_3d += reg::register_points(noisy, ph.jig).fre_rms;
  }
  fre_exact /= trials;
  fre_calibrated /= trials;
  fre_3d /= trials;
  MESSAGE("FRE 2D exact ", fre_exact, ", 2D calibrated ", fre_calibrated, ", 3D ", fre_3d, ", FLE ", fle);
  CHECK(fre_exact == doctest::Approx(fre_3d).epsilon(0.04));
  CHECK(fre_calibrated > 1.05 * fre_3d);
}
