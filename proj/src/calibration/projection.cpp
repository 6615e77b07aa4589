#include "igss/calibration/projection.hpp"

#include "igss/error.hpp"

#include <cmath>
#include <set>

namespace igss::calib {

std::string_view to_string(View v) { return v == View::AP ? "AP" : "LP"; }

View parse_view(std::string_view name) {
  if (name == "AP") return View::AP;
  if (name == "LP") return View::LP;
  throw Error(ErrorCode::ParseError, "unknown view '" + std::string(name) + "'");
}

const Detection* Detection2D::find(const std::string& label) const {
  for (const auto& d : points) {
    if (d.label == label) return &d;
  }
  return nullptr;
}

void validate(const Detection2D& d) {
  std::set<std::string> seen;
  for (const auto& p : d.points) {
    if (!seen.insert(p.label).second) {
      throw Error(ErrorCode::InvalidArgument, "duplicate detection label '" + p.label + "'");
    }
    if (!(p.confidence >= 0.0 && p.confidence <= 1.0)) {
      throw Error(ErrorCode::InvalidArgument, "confidence outside [0, 1]");
    }
    if (!p.uv.allFinite()) throw Error(ErrorCode::InvalidArgument, "non-finite detection");
  }
}

ProjectionModel normalized(const ProjectionModel& model) {
  Eigen::JacobiSVD<Mat34> svd(model.matrix);
  const auto s = svd.singularValues();
  if (!model.matrix.allFinite() || s(0) <= 0.0 || s(2) / s(0) < 1e-12) {
    throw Error(ErrorCode::DegenerateGeometry, "projection matrix is not rank 3");
  }
  const double scale = model.matrix.block<1, 3>(2, 0).norm();
  if (scale <= 0.0) throw Error(ErrorCode::DegenerateGeometry, "projection has no depth row");
  ProjectionModel out = model;
  out.matrix /= scale;
  // Positive depth convention: the camera centre lies behind the image plane,
  // i.e. det(M) > 0 for P = [M | p4].
  if (out.matrix.block<3, 3>(0, 0).determinant() < 0.0) out.matrix = -out.matrix;
  return out;
}

Vec2 project(const ProjectionModel& model, const Vec3& p) {
  const Eigen::Vector3d h = model.matrix * p.homogeneous();
  if (std::abs(h.z()) <= 1e-9) {
    throw Error(ErrorCode::PointAtInfinity, "point lies on the camera plane");
  }
  return h.head<2>() / h.z();
}

Vec3 camera_center(const ProjectionModel& model) {
  const geom::Mat3 m = model.matrix.block<3, 3>(0, 0);
  return -m.fullPivLu().solve(model.matrix.col(3));
}

Vec3 back_projection_direction(const ProjectionModel& model, const Vec2& uv) {
  const geom::Mat3 m = model.matrix.block<3, 3>(0, 0);
  Vec3 d = m.fullPivLu().solve(uv.homogeneous());
  // Orient along increasing depth.
  if (model.matrix.block<1, 3>(2, 0).dot(d) < 0.0) d = -d;
  return d.normalized();
}

geom::Mat3 camera_axes(const CArmGeometry& g) {
  const double a = g.gantry_angle_rad;
  const Vec3 z(-std::sin(a), std::cos(a), 0.0);  // beam direction, source -> detector
  const Vec3 x(std::cos(a), std::sin(a), 0.0);
  const Vec3 y = z.cross(x);
  geom::Mat3 r;
  r.row(0) = x.transpose();
  r.row(1) = y.transpose();
  r.row(2) = z.transpose();
  return r;
}

Vec3 source_position(const CArmGeometry& g) {
  const double a = g.gantry_angle_rad;
  return g.source_to_iso_mm * Vec3(std::sin(a), -std::cos(a), 0.0);
}

ProjectionModel pinhole_view(View view, const CArmGeometry& g) {
  if (!(g.source_to_detector_mm > 0.0) || !(g.source_to_iso_mm > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "C-arm distances must be positive");
  }
  const geom::Mat3 r = camera_axes(g);
  const Vec3 c = source_position(g);
  geom::Mat3 k = geom::Mat3::Identity();
  k(0, 0) = g.source_to_detector_mm;
  k(1, 1) = g.source_to_detector_mm;
  Mat34 ext;
  ext.block<3, 3>(0, 0) = r;
  ext.col(3) = -r * c;
  return normalized(ProjectionModel{k * ext, view, geom::Frame::CArm});
}

namespace {

// Similarity that maps points to zero centroid and RMS distance sqrt(dim).
template <int Dim>
Eigen::Matrix<double, Dim + 1, Dim + 1> normalizing_transform(
    const std::vector<Eigen::Matrix<double, Dim, 1>>& pts) {
  Eigen::Matrix<double, Dim, 1> c = Eigen::Matrix<double, Dim, 1>::Zero();
  for (const auto& p : pts) c += p;
  c /= static_cast<double>(pts.size());
  double rms = 0.0;
  for (const auto& p : pts) rms += (p - c).squaredNorm();
  rms = std::sqrt(rms / static_cast<double>(pts.size()));
  const double s = rms > 0.0 ? std::sqrt(static_cast<double>(Dim)) / rms : 1.0;
  Eigen::Matrix<double, Dim + 1, Dim + 1> t = Eigen::Matrix<double, Dim + 1, Dim + 1>::Identity();
  t.template topLeftCorner<Dim, Dim>() *= s;
  t.template topRightCorner<Dim, 1>() = -s * c;
  return t;
}

}  // namespace

DltResult dlt_calibrate(std::span<const LabeledPoint3> world, const Detection2D& image) {
  validate(image);
  std::vector<Vec3> xs;
  std::vector<Vec2> us;
  for (const auto& w : world) {
    if (const Detection* d = image.find(w.label)) {
      xs.push_back(w.position);
      us.push_back(d->uv);
    }
  }
  if (xs.size() < kMinDltPoints) {
    throw Error(ErrorCode::TooFewPoints, std::to_string(xs.size()) + " correspondences, need 6");
  }

  {
    Vec3 c = Vec3::Zero();
    for (const auto& x : xs) c += x;
    c /= static_cast<double>(xs.size());
    Eigen::MatrixX3d m(xs.size(), 3);
    for (std::size_t i = 0; i < xs.size(); ++i) m.row(i) = (xs[i] - c).transpose();
    const Vec3 s = Eigen::JacobiSVD<Eigen::MatrixX3d>(m).singularValues();
    if (s(0) <= 0.0 || s(2) / s(0) < kCoplanarityRatio) {
      throw Error(ErrorCode::CoplanarPoints, "calibration points are coplanar");
    }
  }

  const Eigen::Matrix4d t3 = normalizing_transform<3>(xs);
  const Eigen::Matrix3d t2 = normalizing_transform<2>(us);

  const auto n = static_cast<Eigen::Index>(xs.size());
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(2 * n, 12);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Vector4d x = t3 * xs[static_cast<std::size_t>(i)].homogeneous();
    const Eigen::Vector3d u = t2 * us[static_cast<std::size_t>(i)].homogeneous();
    a.block<1, 4>(2 * i, 0) = x.transpose();
    a.block<1, 4>(2 * i, 8) = -u.x() * x.transpose();
    a.block<1, 4>(2 * i + 1, 4) = x.transpose();
    a.block<1, 4>(2 * i + 1, 8) = -u.y() * x.transpose();
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
  const Eigen::VectorXd p = svd.matrixV().col(11);
  Mat34 pn;
  pn << p(0), p(1), p(2), p(3), p(4), p(5), p(6), p(7), p(8), p(9), p(10), p(11);

  DltResult out;
  out.model = normalized(ProjectionModel{t2.inverse() * pn * t3, image.view, geom::Frame::CArm});
  out.n_points = xs.size();
  double sum_sq = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) sum_sq += (project(out.model, xs[i]) - us[i]).squaredNorm();
  out.reprojection_rms = std::sqrt(sum_sq / static_cast<double>(xs.size()));
  return out;
}

}  // namespace igss::calib
