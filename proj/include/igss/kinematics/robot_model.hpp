#pragma once

#include "igss/geom/transform.hpp"

#include <array>
#include <vector>

namespace igss::kin {

using geom::Vec3;

inline constexpr int kDof = 6;

/// Standard Denavit-Hartenberg row: Rz(theta + theta_offset) Tz(d) Tx(a) Rx(alpha).
struct DhRow {
  double a = 0.0;      // mm
  double alpha = 0.0;  // rad
  double d = 0.0;      // mm
  double theta_offset = 0.0;  // rad
};

struct JointLimit {
  double min = 0.0;  // rad
  double max = 0.0;  // rad
};

struct Capsule {
  Vec3 p0 = Vec3::Zero();  // mm
  Vec3 p1 = Vec3::Zero();  // mm
  double radius = 0.0;     // mm
};

using JointVector = Eigen::Matrix<double, kDof, 1>;  // rad

/// Six-revolute serial arm. Link i (1..6) is rigidly attached to DH frame i;
/// index 0 holds base geometry in the RobotBase frame.
struct RobotModel {
  std::array<DhRow, kDof> dh{};
  std::array<JointLimit, kDof> limits{};
  std::array<std::vector<Capsule>, kDof + 1> link_capsules{};
  geom::RigidTransform tool;  // flange -> tool tip; tool axis is the tool frame z

  /// Generic 6R arm with a shoulder offset and a spherical wrist, carrying a
  /// 150 mm guide tube and an off-axis tracking-array mount on the flange.
  static RobotModel default_model();
};

/// Throws InvalidArgument on min >= max or non-positive capsule radius.
void validate(const RobotModel& model);

bool within_limits(const RobotModel& model, const JointVector& q, double slack = 0.0);

/// Capsules spanning the DH link geometry for row `dh` in its own frame.
std::vector<Capsule> dh_link_capsules(const DhRow& dh, double radius);

}  // namespace igss::kin
