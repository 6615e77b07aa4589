#include "igss/geom/transform.hpp"

#include "igss/error.hpp"

#include <algorithm>
#include <cmath>

namespace igss::geom {

namespace {

double residual_of(const Mat3& r) {
  const double ortho = (r.transpose() * r - Mat3::Identity()).cwiseAbs().maxCoeff();
  return ortho + std::abs(r.determinant() - 1.0);
}

Mat3 reorthonormalize_if_drifted(const Mat3& r) {
  if (residual_of(r) > kReorthoThreshold) return nearest_rotation(r);
  return r;
}

}  // namespace

RigidTransform RigidTransform::from(const Mat3& rotation, const Vec3& translation) {
  if (!rotation.allFinite() || !translation.allFinite()) {
    throw Error(ErrorCode::InvalidTransform, "non-finite entries");
  }
  const double res = residual_of(rotation);
  if (res > kOrthoTolerance) {
    throw Error(ErrorCode::InvalidTransform,
                "rotation not orthonormal (residual " + std::to_string(res) + ")");
  }
  return RigidTransform(rotation, translation);
}

RigidTransform RigidTransform::from_quaternion(const Quat& q, const Vec3& translation) {
  if (q.norm() < 1e-12) throw Error(ErrorCode::InvalidTransform, "zero quaternion");
  return from(nearest_rotation(q.normalized().toRotationMatrix()), translation);
}

RigidTransform RigidTransform::translation(const Vec3& t) { return from(Mat3::Identity(), t); }

RigidTransform RigidTransform::rotation(const Mat3& r) { return from(r, Vec3::Zero()); }

RigidTransform RigidTransform::axis_angle(const Vec3& axis, double angle_rad,
                                          const Vec3& translation) {
  if (axis.norm() < 1e-15) throw Error(ErrorCode::InvalidArgument, "zero rotation axis");
  const Mat3 r = Eigen::AngleAxisd(angle_rad, axis.normalized()).toRotationMatrix();
  return from(nearest_rotation(r), translation);
}

Eigen::Matrix4d RigidTransform::matrix() const {
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  m.topLeftCorner<3, 3>() = rotation_;
  m.topRightCorner<3, 1>() = translation_;
  return m;
}

double RigidTransform::orthonormality_residual() const { return residual_of(rotation_); }

RigidTransform compose(const RigidTransform& a, const RigidTransform& b) {
  const Mat3 r = reorthonormalize_if_drifted(a.rotation_ * b.rotation_);
  return RigidTransform(r, a.rotation_ * b.translation_ + a.translation_);
}

RigidTransform invert(const RigidTransform& t) {
  const Mat3 rt = reorthonormalize_if_drifted(t.rotation_.transpose());
  return RigidTransform(rt, -(rt * t.translation_));
}

Vec3 transform_point(const RigidTransform& t, const Vec3& p) { return t.apply(p); }

std::vector<Vec3> transform_points(const RigidTransform& t, std::span<const Vec3> points) {
  std::vector<Vec3> out;
  out.reserve(points.size());
  for (const auto& p : points) out.push_back(t.apply(p));
  return out;
}

Mat3 nearest_rotation(const Mat3& m) {
  Eigen::JacobiSVD<Mat3> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 u = svd.matrixU();
  const Mat3& v = svd.matrixV();
  if ((u * v.transpose()).determinant() < 0.0) u.col(2) *= -1.0;
  return u * v.transpose();
}

double rotation_angle_between(const Mat3& a, const Mat3& b) {
  const Mat3 rel = a.transpose() * b;
  const double c = std::clamp((rel.trace() - 1.0) * 0.5, -1.0, 1.0);
  // acos is ill-conditioned near 0; use the skew part there.
  const Vec3 s(rel(2, 1) - rel(1, 2), rel(0, 2) - rel(2, 0), rel(1, 0) - rel(0, 1));
  return std::atan2(0.5 * s.norm(), c);
}

Mat3 rot_x(double rad) { return Eigen::AngleAxisd(rad, Vec3::UnitX()).toRotationMatrix(); }
Mat3 rot_y(double rad) { return Eigen::AngleAxisd(rad, Vec3::UnitY()).toRotationMatrix(); }
Mat3 rot_z(double rad) { return Eigen::AngleAxisd(rad, Vec3::UnitZ()).toRotationMatrix(); }

}  // namespace igss::geom
