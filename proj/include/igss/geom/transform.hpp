#pragma once

#include <Eigen/Dense>

#include <span>
#include <vector>

namespace igss::geom {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Quat = Eigen::Quaterniond;

// Orthonormality tolerance enforced at construction.
inline constexpr double kOrthoTolerance = 1e-9;
// Compose/invert re-orthonormalize when the residual drifts past this.
inline constexpr double kReorthoThreshold = 1e-12;

/// Rigid motion p -> R p + t (rotation dimensionless, translation in mm).
///
/// Instances always satisfy R^T R = I and det R = +1 within kOrthoTolerance;
/// the checked factory throws InvalidTransform otherwise.
class RigidTransform {
 public:
  RigidTransform() : rotation_(Mat3::Identity()), translation_(Vec3::Zero()) {}

  static RigidTransform identity() { return {}; }
  static RigidTransform from(const Mat3& rotation, const Vec3& translation);
  static RigidTransform from_quaternion(const Quat& q, const Vec3& translation);
  static RigidTransform translation(const Vec3& t);
  static RigidTransform rotation(const Mat3& r);
  /// Rotation of `angle_rad` about `axis` (normalized internally), then translation.
  static RigidTransform axis_angle(const Vec3& axis, double angle_rad,
                                   const Vec3& translation = Vec3::Zero());

  const Mat3& rotation() const { return rotation_; }
  const Vec3& translation() const { return translation_; }
  Quat quaternion() const { return Quat(rotation_).normalized(); }
  Eigen::Matrix4d matrix() const;

  Vec3 apply(const Vec3& p) const { return rotation_ * p + translation_; }
  Vec3 apply_vector(const Vec3& v) const { return rotation_ * v; }

  /// Max abs entry of R^T R - I, plus |det R - 1|.
  double orthonormality_residual() const;

 private:
  RigidTransform(const Mat3& r, const Vec3& t) : rotation_(r), translation_(t) {}

  Mat3 rotation_;
  Vec3 translation_;

  friend RigidTransform compose(const RigidTransform&, const RigidTransform&);
  friend RigidTransform invert(const RigidTransform&);
};

/// Result maps p to a(b(p)).
RigidTransform compose(const RigidTransform& a, const RigidTransform& b);
RigidTransform invert(const RigidTransform& t);
Vec3 transform_point(const RigidTransform& t, const Vec3& p);
std::vector<Vec3> transform_points(const RigidTransform& t, std::span<const Vec3> points);

inline RigidTransform operator*(const RigidTransform& a, const RigidTransform& b) {
  return compose(a, b);
}

/// Nearest rotation in the Frobenius sense (polar decomposition via SVD).
Mat3 nearest_rotation(const Mat3& m);

/// Rotation angle (rad) of a^-1 b.
double rotation_angle_between(const Mat3& a, const Mat3& b);

Mat3 rot_x(double rad);
Mat3 rot_y(double rad);
Mat3 rot_z(double rad);

}  // namespace igss::geom
