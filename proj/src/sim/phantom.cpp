#include "igss/sim/phantom.hpp"

#include "igss/error.hpp"
#include "igss/registration/point_registration.hpp"
#include "igss/sim/noise.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

namespace igss::sim {

namespace {

double level_z(std::size_t i, std::size_t n) {
  return (static_cast<double>(i) - 0.5 * static_cast<double>(n - 1)) * kLevelSpacingMm;
}

// Smallest / largest singular value of the demeaned points; 0 for coplanar sets.
double planarity_ratio(const std::vector<Vec3>& pts) {
  Vec3 c = Vec3::Zero();
  for (const auto& p : pts) c += p;
  c /= static_cast<double>(pts.size());
  Eigen::MatrixXd m(pts.size(), 3);
  for (std::size_t i = 0; i < pts.size(); ++i) m.row(static_cast<Eigen::Index>(i)) = (pts[i] - c).transpose();
  const Eigen::Vector3d s = Eigen::JacobiSVD<Eigen::MatrixXd>(m).singularValues();
  return s(2) / s(0);
}

void add_box(reg::SurfaceModel& s, const Vec3& lo, const Vec3& hi) {
  const int base = static_cast<int>(s.vertices.size());
  for (int i = 0; i < 8; ++i) {
    s.vertices.emplace_back(i & 1 ? hi.x() : lo.x(), i & 2 ? hi.y() : lo.y(), i & 4 ? hi.z() : lo.z());
  }
  static constexpr int kFaces[12][3] = {{0, 2, 1}, {1, 2, 3}, {4, 5, 6}, {5, 7, 6}, {0, 1, 4}, {1, 5, 4},
                                        {2, 6, 3}, {3, 6, 7}, {0, 4, 2}, {2, 4, 6}, {1, 3, 5}, {3, 7, 5}};
  for (const auto& f : kFaces) s.triangles.push_back({base + f[0], base + f[1], base + f[2]});
}

// Closed elliptic cylinder along z.
void add_body(reg::SurfaceModel& s, const Vec3& center, double rx, double ry, double height, int segments) {
  const int base = static_cast<int>(s.vertices.size());
  for (int ring = 0; ring < 2; ++ring) {
    const double z = center.z() + (ring == 0 ? -0.5 : 0.5) * height;
    for (int k = 0; k < segments; ++k) {
      const double a = 2.0 * std::numbers::pi * k / segments;
      s.vertices.emplace_back(center.x() + rx * std::cos(a), center.y() + ry * std::sin(a), z);
    }
  }
  const int bottom = static_cast<int>(s.vertices.size());
  s.vertices.emplace_back(center.x(), center.y(), center.z() - 0.5 * height);
  s.vertices.emplace_back(center.x(), center.y(), center.z() + 0.5 * height);
  for (int k = 0; k < segments; ++k) {
    const int a0 = base + k, a1 = base + (k + 1) % segments;
    const int b0 = a0 + segments, b1 = a1 + segments;
    s.triangles.push_back({a0, a1, b1});
    s.triangles.push_back({a0, b1, b0});
    s.triangles.push_back({bottom, a1, a0});
    s.triangles.push_back({bottom + 1, b0, b1});
  }
}

reg::FiducialSet make_jig() {
  // Asymmetric layout; projected separations stay above 15 mm in both AP and LP views.
  static constexpr double kOffsets[6][3] = {
      {-35, -10, -30}, {40, 5, -22}, {12, -20, 35}, {-22, 15, 18}, {30, 22, 42}, {-5, -2, -5},
  };
  reg::FiducialSet jig;
  jig.frame = geom::Frame::Patient;
  const Vec3 center(0.0, -60.0, 0.0);
  for (int i = 0; i < 6; ++i) {
    jig.points.push_back({"J" + std::to_string(i + 1), center + Vec3(kOffsets[i][0], kOffsets[i][1], kOffsets[i][2])});
  }
  return jig;
}

// Planar four-marker optical array on a post above the jig.
reg::FiducialSet make_jig_array() {
  static constexpr double kOffsets[4][2] = {{-25, -30}, {30, -20}, {-15, 35}, {25, 30}};
  reg::FiducialSet arr;
  arr.frame = geom::Frame::Patient;
  const Vec3 center(0.0, -95.0, 10.0);
  for (int i = 0; i < 4; ++i) {
    arr.points.push_back({"A" + std::to_string(i + 1), center + Vec3(kOffsets[i][0], 0.0, kOffsets[i][1])});
  }
  return arr;
}

}  // namespace

std::string level_of(const std::string& id) {
  const auto dash = id.find('-');
  return dash == std::string::npos ? id : id.substr(0, dash);
}

Phantom generate_phantom(const PhantomSpec& spec, std::uint64_t seed) {
  if (spec.fiducial_count < 4) throw Error(ErrorCode::DegenerateSpec, "fiducial_count must be >= 4");
  if (spec.levels.empty()) throw Error(ErrorCode::DegenerateSpec, "at least one level is required");
  if (!(spec.extent_mm >= 2.0 * kMinFiducialSeparationMm) || !(spec.extent_mm <= 400.0)) {
    throw Error(ErrorCode::DegenerateSpec, "extent_mm must lie in [30, 400]");
  }
  if (std::set<std::string>(spec.levels.begin(), spec.levels.end()).size() != spec.levels.size()) {
    throw Error(ErrorCode::DegenerateSpec, "duplicate level names");
  }
  for (const auto& l : spec.levels) {
    if (l.empty() || l.find('-') != std::string::npos) throw Error(ErrorCode::DegenerateSpec, "bad level name '" + l + "'");
  }

  Rng rng(derive_seed(seed, {0x70686e74}));
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  const std::size_t nlev = spec.levels.size();
  Phantom ph;

  // Fiducials on the posterior aspect; the first two pin the craniocaudal extent.
  const double half = 0.5 * spec.extent_mm;
  const int n = spec.fiducial_count;
  std::vector<Vec3> pts;
  for (int attempt = 0;; ++attempt) {
    if (attempt > 10000) throw Error(ErrorCode::DegenerateSpec, "cannot place fiducials with the requested spacing");
    pts.clear();
    for (int i = 0; i < n; ++i) {
      const double z = i == 0 ? -half : i == 1 ? half : -half + spec.extent_mm * u01(rng);
      pts.emplace_back(-45.0 + 90.0 * u01(rng), -55.0 + 35.0 * u01(rng), z);
    }
    bool ok = true;
    for (int i = 0; i < n && ok; ++i)
      for (int k = i + 1; k < n && ok; ++k) ok = (pts[i] - pts[k]).norm() >= kMinFiducialSeparationMm;
    if (ok && reg::collinearity_ratio(pts) > 0.05 && planarity_ratio(pts) > 0.05) break;
  }
  ph.fiducials.frame = geom::Frame::Patient;
  for (int i = 0; i < n; ++i) ph.fiducials.points.push_back({"F" + std::to_string(i + 1), pts[i]});

  ph.surface.frame = geom::Frame::PreOpImage;
  ph.targets.frame = geom::Frame::Patient;
  for (std::size_t i = 0; i < nlev; ++i) {
    const double z = level_z(i, nlev);
    add_body(ph.surface, Vec3(0.0, 18.0, z), 22.0, 16.0, 24.0, 24);
    add_box(ph.surface, Vec3(-4.0, -45.0, z - 7.0), Vec3(4.0, -12.0, z + 7.0));
    for (int side = 0; side < 2; ++side) {
      const double sx = side == 0 ? 1.0 : -1.0;
      const double waist = kMinWaistRadiusMm + (kMaxWaistRadiusMm - kMinWaistRadiusMm) * u01(rng);
      plan::PedicleModel p;
      p.level = spec.levels[i] + (side == 0 ? "-left" : "-right");
      p.p0 = Vec3(sx * 24.0, -22.0, z);
      p.p1 = Vec3(sx * 9.0, 12.0, z);
      p.radius_profile = {{0.0, waist + 2.5}, {0.5, waist}, {1.0, waist + 3.5}};
      ph.targets.points.push_back({"T-" + p.level, 0.5 * (p.p0 + p.p1)});
      ph.pedicles.push_back(std::move(p));
    }
  }
  ph.jig = make_jig();
  ph.jig_array = make_jig_array();
  return ph;
}

}  // namespace igss::sim
