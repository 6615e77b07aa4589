#include <doctest.h>

#include <sstream>

#include "igss/error.hpp"
#include "igss/registration/icp.hpp"
#include "igss/registration/point_registration.hpp"
#include "igss/registration/tre.hpp"
#include "igss/sim/phantom.hpp"
#include "support/oracles.hpp"

using namespace igss;
using namespace igss::reg;
using igss::geom::RigidTransform;
using igss::testing::make_set;

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

std::vector<Vec3> tetra() { return {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}}; }

std::vector<Vec3> spread_points(std::mt19937_64& rng, int n, double half) {
  std::vector<Vec3> pts;
  for (int i = 0; i < n; ++i) pts.push_back(testing::random_vec(rng, half));
  return pts;
}

SurfaceModel uv_sphere(double radius, int rings, int segments) {
  SurfaceModel s;
  s.vertices.push_back({0, 0, radius});
  for (int i = 1; i < rings; ++i) {
    const double th = std::numbers::pi * i / rings;
    for (int j = 0; j < segments; ++j) {
      const double ph = 2.0 * std::numbers::pi * j / segments;
      s.vertices.push_back(radius * Vec3(std::sin(th) * std::cos(ph), std::sin(th) * std::sin(ph), std::cos(th)));
    }
  }
  s.vertices.push_back({0, 0, -radius});
  const int south = static_cast<int>(s.vertices.size()) - 1;
  auto ring = [&](int i, int j) { return 1 + (i - 1) * segments + (j % segments); };
  for (int j = 0; j < segments; ++j) s.triangles.push_back({0, ring(1, j), ring(1, j + 1)});
  for (int i = 1; i < rings - 1; ++i)
    for (int j = 0; j < segments; ++j) {
      s.triangles.push_back({ring(i, j), ring(i + 1, j), ring(i + 1, j + 1)});
      s.triangles.push_back({ring(i, j), ring(i + 1, j + 1), ring(i, j + 1)});
    }
  for (int j = 0; j < segments; ++j) s.triangles.push_back({south, ring(rings - 1, j + 1), ring(rings - 1, j)});
  return s;
}

// Area-weighted samples on the mesh.
std::vector<Vec3> sample_surface(const SurfaceModel& s, int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<double> areas;
  for (const auto& t : s.triangles)
    areas.push_back(0.5 * (s.vertices[t[1]] - s.vertices[t[0]]).cross(s.vertices[t[2]] - s.vertices[t[0]]).norm());
  std::discrete_distribution<std::size_t> pick(areas.begin(), areas.end());
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Vec3> out;
  for (int i = 0; i < n; ++i) {
    const auto& t = s.triangles[pick(rng)];
    double a = u(rng), b = u(rng);
    if (a + b > 1.0) {
      a = 1.0 - a;
      b = 1.0 - b;
    }
    const Vec3 &p0 = s.vertices[t[0]], &p1 = s.vertices[t[1]], &p2 = s.vertices[t[2]];
    out.push_back(p0 + a * (p1 - p0) + b * (p2 - p0));
  }
  return out;
}

}  // namespace

TEST_CASE("identical sets register to the identity") {
  const auto set = make_set(tetra());
  const auto r = register_points(set, set);
  CHECK(r.transform.matrix().isIdentity(1e-12));
  CHECK(r.fre_rms < 1e-12);
  CHECK(r.n_points == 4);
}

TEST_CASE("known rotation and translation recovered exactly") {
  const auto truth = RigidTransform::from(geom::rot_z(std::numbers::pi / 2), Vec3(10, 0, 0));
  const auto moving = make_set(tetra());
  const auto fixed = transformed(moving, truth, geom::Frame::Tracker);
  const auto r = register_points(fixed, moving);
  CHECK((r.transform.matrix() - truth.matrix()).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(r.fre_rms < 1e-9);
}

TEST_CASE("noise-free exactness over random transforms") {
  std::mt19937_64 rng(101);
  std::uniform_int_distribution<int> count(3, 12);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const auto pts = spread_points(rng, count(rng), 80.0);
    if (collinearity_ratio(pts) < 1e-3) continue;
    const auto truth = testing::random_transform(rng);
    const auto r = fit_rigid(geom::transform_points(truth, pts), pts);
    worst = std::max({worst, r.fre_rms, (r.transform.matrix() - truth.matrix()).cwiseAbs().maxCoeff()});
  }
  CHECK(worst < 1e-9);
}

TEST_CASE("fit agrees with an independent quaternion solver on noisy data") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n(0.0, 0.5);
  for (int i = 0; i < 200; ++i) {
    const auto pts = spread_points(rng, 7, 60.0);
    const auto truth = testing::random_transform(rng);
    auto fixed = geom::transform_points(truth, pts);
    for (auto& p : fixed) p += Vec3(n(rng), n(rng), n(rng));
    const auto mine = fit_rigid(fixed, pts).transform;
    const auto horn = testing::horn_fit(fixed, pts);
    REQUIRE((mine.matrix() - horn.matrix()).cwiseAbs().maxCoeff() < 1e-8);
  }
}

TEST_CASE("returned fit is a local optimum of FRE") {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> n(0.0, 0.4);
  const auto pts = spread_points(rng, 8, 60.0);
  auto fixed = pts;
  for (auto& p : fixed) p += Vec3(n(rng), n(rng), n(rng));
  const auto r = fit_rigid(fixed, pts);
  auto fre_of = [&](const RigidTransform& t) {
    double acc = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i) acc += (t.apply(pts[i]) - fixed[i]).squaredNorm();
    return std::sqrt(acc / pts.size());
  };
  CHECK(std::abs(fre_of(r.transform) - r.fre_rms) < 1e-12);
  std::uniform_real_distribution<double> ang(0.0, std::numbers::pi / 180.0);
  std::uniform_real_distribution<double> mag(0.0, 0.5);
  for (int i = 0; i < 100; ++i) {
    const auto delta =
        RigidTransform::axis_angle(testing::random_unit(rng), ang(rng), mag(rng) * testing::random_unit(rng));
    CHECK(fre_of(delta * r.transform) >= r.fre_rms - 1e-12);
  }
}

TEST_CASE("registration errors") {
  const auto pts = tetra();
  CHECK(code_of([&] { (void)fit_rigid(std::span(pts).first(2), std::span(pts).first(2)); }) ==
        ErrorCode::TooFewPoints);
  const std::vector<Vec3> line = {{0, 0, 0}, {1, 0, 0}, {2, 0, 0}, {3, 0, 0}};
  CHECK(code_of([&] { (void)fit_rigid(line, line); }) == ErrorCode::DegenerateGeometry);
  auto a = make_set(pts);
  auto b = make_set(pts);
  b.points[3].label = "X";
  CHECK(code_of([&] { (void)register_points(a, b); }) == ErrorCode::LabelMismatch);
  b = make_set(std::vector<Vec3>(pts.begin(), pts.begin() + 3));
  CHECK(code_of([&] { (void)register_points(a, b); }) == ErrorCode::LabelMismatch);
}

TEST_CASE("registration pairs by label, not by order") {
  const auto truth = RigidTransform::translation(Vec3(3, -2, 7));
  auto moving = make_set(tetra());
  auto fixed = transformed(moving, truth, geom::Frame::Tracker);
  std::reverse(fixed.points.begin(), fixed.points.end());
  const auto r = register_points(fixed, moving);
  CHECK((r.transform.translation() - Vec3(3, -2, 7)).norm() < 1e-12);
}

TEST_CASE("rmse_paired examples") {
  const auto a = make_set({{0, 0, 0}, {5, 5, 5}});
  CHECK(rmse_paired(a, a) == 0.0);
  CHECK(rmse_paired(make_set({{0, 0, 0}}), make_set({{1, 0, 0}})) == doctest::Approx(1.0).epsilon(1e-15));
  const auto b = make_set({{1, 0, 0}, {5, 5, 5}});
  CHECK(rmse_paired(a, b) == doctest::Approx(std::sqrt(0.5)).epsilon(1e-15));
}

TEST_CASE("mean FRE squared matches (1 - 2/N) FLE squared") {
  // FLE^2 = 3 sigma^2 with sigma = 0.3: expected 0.18 mm^2 for N = 6.
  const std::vector<Vec3> fid = {{-40, -20, -60}, {35, -25, -55}, {-30, 30, 0},
                                 {40, 20, 10},    {-10, -30, 65}, {20, 35, 55}};
  std::mt19937_64 rng(2024);
  std::normal_distribution<double> n(0.0, 0.3);
  const int trials = 100000;
  double acc = 0.0;
  std::vector<Vec3> noisy(fid.size());
  for (int t = 0; t < trials; ++t) {
    for (std::size_t i = 0; i < fid.size(); ++i) noisy[i] = fid[i] + Vec3(n(rng), n(rng), n(rng));
    const double fre = fit_rigid(fid, noisy).fre_rms;
    acc += fre * fre;
  }
  CHECK(acc / trials == doctest::Approx(0.18).epsilon(0.03));
}

TEST_CASE("TRE at the centroid is FLE over root N") {
  const std::vector<Vec3> fid = {{-40, -20, -60}, {35, -25, -55}, {-30, 30, 0},
                                 {40, 20, 10},    {-10, -30, 65}, {20, 35, 55}};
  Vec3 c = Vec3::Zero();
  for (const auto& p : fid) c += p;
  c /= 6.0;
  const double fle = std::sqrt(0.27);
  const auto pred = predict_tre(make_set(fid), fle, c);
  CHECK(pred.expected_tre_rms == doctest::Approx(std::sqrt(0.27 / 6.0)).epsilon(1e-12));
  CHECK(pred.expected_tre_rms == doctest::Approx(0.2121).epsilon(1e-3));
  const double mc = testing::monte_carlo_tre(fid, c, fle, 100000, 77);
  CHECK(pred.expected_tre_rms == doctest::Approx(mc).epsilon(0.05));
  CHECK(predict_tre(make_set(fid), 2.0 * fle, c).expected_tre_rms == 2.0 * pred.expected_tre_rms);
}

TEST_CASE("TRE off the centroid matches Monte Carlo for a tetrahedron") {
  const auto fid = tetra();
  const auto set = make_set(fid);
  const Vec3 centroid(0.25, 0.25, 0.25);
  const auto probe = predict_tre(set, 1.0, centroid);
  // FLE small against the 1 mm fiducial spread, where the first-order formula holds.
  const double fle = 0.01;
  for (int k = 0; k < 3; ++k) {
    const Vec3 target = centroid + 10.0 * probe.principal_axes.col(k);
    const auto pred = predict_tre(set, fle, target);
    const double mc = testing::monte_carlo_tre(fid, target, fle, 100000, 300 + k);
    CHECK(pred.expected_tre_rms == doctest::Approx(mc).epsilon(0.05));
  }
}

TEST_CASE("predict_tre errors") {
  const std::vector<Vec3> line = {{0, 0, 0}, {1, 0, 0}, {2, 0, 0}};
  CHECK(code_of([&] { (void)predict_tre(make_set(line), 1.0, Vec3::Zero()); }) == ErrorCode::DegenerateGeometry);
  CHECK(code_of([&] { (void)predict_tre(make_set(tetra()), 0.0, Vec3::Zero()); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("verify_registration boundaries") {
  RegistrationResult r;
  r.fre_rms = 0.0;
  CHECK(accepted(verify_registration(r, 2.0)));
  r.fre_rms = 2.0;
  CHECK(accepted(verify_registration(r, 2.0)));
  r.fre_rms = 2.5;
  const auto v = verify_registration(r, 2.0);
  REQUIRE_FALSE(accepted(v));
  CHECK(std::get<Reject>(v).fre_rms == 2.5);
  CHECK(accepted(verify_registration(RegistrationResult{})));
}

TEST_CASE("ICP on exact samples with the true pose stays put") {
  const auto ph = sim::generate_phantom({}, 3);
  const auto pts = sample_surface(ph.surface, 200, 4);
  const auto r = icp_register(pts, ph.surface, RigidTransform::identity());
  CHECK(r.fre_rms < 1e-9);
  CHECK(r.transform.matrix().isIdentity(1e-9));
  CHECK(r.converged);
  CHECK_FALSE(r.ambiguous);
}

TEST_CASE("ICP recovers a small translation on the vertebra mesh") {
  const auto ph = sim::generate_phantom({}, 3);
  auto pts = sample_surface(ph.surface, 400, 8);
  for (auto& p : pts) p -= Vec3(2, 1, 0);  // probed points sit displaced from the mesh
  IcpParams params;
  params.max_iter = 300;
  params.tol_mm = 1e-9;
  const auto r = icp_register(pts, ph.surface, RigidTransform::identity(), params);
  CHECK((r.transform.translation() - Vec3(2, 1, 0)).norm() < 0.01);
  CHECK(geom::rotation_angle_between(r.transform.rotation(), geom::Mat3::Identity()) < 1e-4);
  for (std::size_t i = 1; i < r.residual_history.size(); ++i)
    CHECK(r.residual_history[i] <= r.residual_history[i - 1] + 1e-12);
}

TEST_CASE("ICP on a sphere is flagged ambiguous") {
  const auto sphere = uv_sphere(50.0, 48, 96);
  const auto pts = sample_surface(sphere, 200, 5);
  const auto r = icp_register(pts, sphere, RigidTransform::identity());
  CHECK(r.ambiguous);
  IcpParams strict;
  strict.throw_on_ambiguous = true;
  CHECK(code_of([&] { (void)icp_register(pts, sphere, RigidTransform::identity(), strict); }) ==
        ErrorCode::DegenerateGeometry);
}

TEST_CASE("ICP needs enough points") {
  const auto sphere = uv_sphere(50.0, 8, 8);
  const auto pts = sample_surface(sphere, 5, 1);
  CHECK(code_of([&] { (void)icp_register(pts, sphere, RigidTransform::identity()); }) == ErrorCode::TooFewPoints);
}

TEST_CASE("closest point on triangle") {
  const Vec3 a(0, 0, 0), b(10, 0, 0), c(0, 10, 0);
  CHECK((closest_point_on_triangle(Vec3(2, 2, 5), a, b, c) - Vec3(2, 2, 0)).norm() < 1e-12);
  CHECK((closest_point_on_triangle(Vec3(-3, -4, 0), a, b, c) - a).norm() < 1e-12);
  CHECK((closest_point_on_triangle(Vec3(10, 10, 0), a, b, c) - Vec3(5, 5, 0)).norm() < 1e-12);
}

TEST_CASE("STL round trip") {
  const auto sphere = uv_sphere(20.0, 6, 8);
  std::stringstream ss;
  write_stl_ascii(ss, sphere, "ball");
  const auto back = read_stl_ascii(ss, geom::Frame::PreOpImage);
  REQUIRE(back.triangles.size() == sphere.triangles.size());
  for (std::size_t t = 0; t < back.triangles.size(); ++t)
    for (int k = 0; k < 3; ++k)
      CHECK((back.vertices[back.triangles[t][k]] - sphere.vertices[sphere.triangles[t][k]]).norm() < 1e-9);
  std::stringstream bad("solid x\nfacet normal 0 0 1\nouter loop\nvertex 0 0\n");
  CHECK_THROWS_AS(read_stl_ascii(bad, geom::Frame::PreOpImage), Error);
}

TEST_CASE("fiducial set validation") {
  auto s = make_set(tetra());
  CHECK_NOTHROW(validate(s));
  s.points[1].label = s.points[0].label;
  CHECK_THROWS_AS(validate(s), Error);
  CHECK_THROWS_AS(validate(FiducialSet{}), Error);
}
