#pragma once

#include "igss/kinematics/robot_model.hpp"

#include <array>
#include <cstdint>

namespace igss::kin {

using Jacobian = Eigen::Matrix<double, 6, kDof>;

geom::RigidTransform dh_transform(const DhRow& row, double q);

/// Base -> flange pose.
geom::RigidTransform fk(const RobotModel& model, const JointVector& q);
/// Base -> frame i for i = 0..6 (index 0 is the identity).
std::array<geom::RigidTransform, kDof + 1> link_frames(const RobotModel& model, const JointVector& q);
/// Base -> tool tip pose.
geom::RigidTransform tool_pose(const RobotModel& model, const JointVector& q);

/// Geometric Jacobian of the flange: rows 0-2 linear velocity (mm/rad), 3-5 angular (rad/rad).
Jacobian jacobian(const RobotModel& model, const JointVector& q);

/// Position error (mm) and rotation-vector error (rad) taking `from` onto `to`.
Eigen::Matrix<double, 6, 1> pose_error(const geom::RigidTransform& from, const geom::RigidTransform& to);

struct IkParams {
  double tol_mm = 0.01;
  double tol_rad = 1e-4;
  int max_iter = 200;
  double damping = 0.01;
  int restarts = 8;
  // Length (mm) that converts angular error into the units of position error.
  double orientation_weight_mm = 300.0;
  std::uint64_t restart_seed = 0x5eed1c0ffeeULL;
};

struct IkResult {
  JointVector q = JointVector::Zero();
  double position_error_mm = 0.0;
  double orientation_error_rad = 0.0;
  int iterations = 0;
  int attempts = 0;
};

/// Damped least-squares IK for a flange target, starting from `seed` and then
/// from up to params.restarts deterministic random seeds. The returned
/// configuration is within joint limits and within tolerance of the target.
/// Throws Unreachable, or LimitViolation when every converged solution lay outside the limits.
IkResult ik_solve(const RobotModel& model, const geom::RigidTransform& target, const JointVector& seed,
                  const IkParams& params = {});

JointVector ik(const RobotModel& model, const geom::RigidTransform& target, const JointVector& seed,
               const IkParams& params = {});

}  // namespace igss::kin
