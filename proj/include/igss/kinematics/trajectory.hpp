#pragma once

#include "igss/kinematics/collision.hpp"
#include "igss/kinematics/kinematics.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace igss::kin {

inline constexpr double kMaxJointStep = 0.05;  // rad per sample

struct TrajectorySample {
  double time_s = 0.0;
  JointVector q = JointVector::Zero();
};

enum class PlanningMode { TwoPhase, DescentOnly, SinglePhase };
std::string_view to_string(PlanningMode m);

/// Samples have strictly increasing times and joint steps of at most kMaxJointStep.
struct Trajectory {
  std::vector<TrajectorySample> samples;
  PlanningMode planning_mode = PlanningMode::TwoPhase;
  bool collision_checked = false;
  double roll_rad = 0.0;  // rotation about the tool axis relative to the nominal approach
  std::size_t approach_index = 0;  // first sample of the descent phase
};

/// Planned screw axis: the tool tip ends at `entry` with its z axis along `direction`.
struct ToolAxisTarget {
  Vec3 entry = Vec3::Zero();          // mm, RobotBase frame
  Vec3 direction = Vec3::UnitZ();     // unit, pointing into the anatomy
};

struct PlanParams {
  IkParams ik;
  double roll_rad = 0.0;
  double joint_speed = 0.5;       // rad/s, phase-1 peak
  double descent_speed = 5.0;     // mm/s
  double descent_step_mm = 0.5;
};

/// Tool-tip pose for an axis target at `standoff_mm` above the entry. Roll about
/// the axis is measured from the projection of `reference_x` onto the normal plane.
geom::RigidTransform axis_pose(const ToolAxisTarget& target, double standoff_mm, const Vec3& reference_x,
                               double roll_rad);

/// Joint-space quintic to the approach pose, then a straight task-space descent
/// along the axis to the entry. Throws Unreachable or LimitViolation.
Trajectory plan_trajectory(const RobotModel& model, const JointVector& start, const ToolAxisTarget& target,
                           double standoff_mm, const PlanParams& params = {});

/// Inserts linearly interpolated samples until every joint step is <= max_step.
Trajectory densify(const Trajectory& t, double max_step = kMaxJointStep);

/// plan_trajectory retried over 8 approach rolls about the tool axis (0, +-45, +-90,
/// +-135, 180 deg), each densified and checked sample by sample.
/// Throws NoSafePath when every reachable roll collides.
Trajectory plan_safe(const RobotModel& model, const CollisionScene& scene, const JointVector& start,
                     const ToolAxisTarget& target, double standoff_mm, const PlanParams& params = {});

/// Rolls tried by plan_safe, in order.
std::vector<double> candidate_rolls();

void write_trajectory_csv(std::ostream& out, const Trajectory& t);

}  // namespace igss::kin
