#include "igss/kinematics/trajectory.hpp"

#include "igss/error.hpp"

#include <fmt/format.h>

#include <cmath>
#include <numbers>
#include <ostream>

namespace igss::kin {

std::string_view to_string(PlanningMode m) {
  switch (m) {
    case PlanningMode::TwoPhase: return "two_phase";
    case PlanningMode::DescentOnly: return "descent_only";
    case PlanningMode::SinglePhase: return "single_phase";
  }
  return "?";
}

geom::RigidTransform axis_pose(const ToolAxisTarget& target, double standoff_mm, const Vec3& reference_x,
                               double roll_rad) {
  if (target.direction.norm() < 1e-12) throw Error(ErrorCode::InvalidArgument, "zero axis direction");
  const Vec3 z = target.direction.normalized();
  Vec3 x = reference_x - reference_x.dot(z) * z;
  if (x.norm() < 1e-6) {
    x = Vec3::UnitX() - z.x() * z;
    if (x.norm() < 1e-6) x = Vec3::UnitY() - z.y() * z;
  }
  x.normalize();
  x = Eigen::AngleAxisd(roll_rad, z) * x;
  geom::Mat3 r;
  r.col(0) = x;
  r.col(1) = z.cross(x);
  r.col(2) = z;
  return geom::RigidTransform::from(geom::nearest_rotation(r), target.entry - standoff_mm * z);
}

namespace {

double quintic(double tau) { return tau * tau * tau * (10.0 + tau * (-15.0 + 6.0 * tau)); }

// Peak slope of the quintic time scaling.
constexpr double kQuinticPeak = 1.875;

void append_quintic(Trajectory& traj, const JointVector& from, const JointVector& to, double speed) {
  const double span = (to - from).cwiseAbs().maxCoeff();
  const int steps = std::max(1, static_cast<int>(std::ceil(kQuinticPeak * span / kMaxJointStep)));
  const double duration = std::max(1.0, kQuinticPeak * span / speed);
  const double t0 = traj.samples.back().time_s;
  for (int k = 1; k <= steps; ++k) {
    const double tau = static_cast<double>(k) / steps;
    traj.samples.push_back({t0 + tau * duration, from + quintic(tau) * (to - from)});
  }
}

geom::RigidTransform flange_for(const RobotModel& model, const geom::RigidTransform& tool_target) {
  return tool_target * geom::invert(model.tool);
}

}  // namespace

Trajectory plan_trajectory(const RobotModel& model, const JointVector& start, const ToolAxisTarget& target,
                           double standoff_mm, const PlanParams& params) {
  if (standoff_mm < 0.0) throw Error(ErrorCode::InvalidArgument, "negative standoff");
  if (!within_limits(model, start)) throw Error(ErrorCode::LimitViolation, "start outside joint limits");

  const Vec3 reference_x = tool_pose(model, start).rotation().col(0);
  const geom::RigidTransform approach_tool = axis_pose(target, standoff_mm, reference_x, params.roll_rad);
  const JointVector q_approach = ik(model, flange_for(model, approach_tool), start, params.ik);

  Trajectory traj;
  traj.roll_rad = params.roll_rad;
  traj.samples.push_back({0.0, start});
  const bool already_there = (q_approach - start).cwiseAbs().maxCoeff() < 1e-12;

  if (standoff_mm == 0.0) {
    traj.planning_mode = PlanningMode::SinglePhase;
    if (!already_there) append_quintic(traj, start, q_approach, params.joint_speed);
    traj.approach_index = traj.samples.size() - 1;
    return densify(traj);
  }

  traj.planning_mode = already_there ? PlanningMode::DescentOnly : PlanningMode::TwoPhase;
  if (!already_there) append_quintic(traj, start, q_approach, params.joint_speed);
  traj.approach_index = traj.samples.size() - 1;

  const int steps = std::max(1, static_cast<int>(std::ceil(standoff_mm / params.descent_step_mm)));
  const double dt = standoff_mm / steps / params.descent_speed;
  JointVector q = q_approach;
  for (int k = 1; k <= steps; ++k) {
    const double remaining = standoff_mm * (1.0 - static_cast<double>(k) / steps);
    const geom::RigidTransform waypoint =
        geom::RigidTransform::from(approach_tool.rotation(), target.entry - remaining * target.direction.normalized());
    IkParams local = params.ik;
    local.restarts = 0;  // stay on the branch reached by the approach
    try {
      q = ik(model, flange_for(model, waypoint), q, local);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::Unreachable || e.code() == ErrorCode::LimitViolation) {
        throw Error(e.code(), "descent waypoint " + std::to_string(k) + " not reachable on this branch");
      }
      throw;
    }
    traj.samples.push_back({traj.samples.back().time_s + dt, q});
  }
  return densify(traj);
}

Trajectory densify(const Trajectory& t, double max_step) {
  if (t.samples.empty()) return t;
  Trajectory out = t;
  out.samples.clear();
  out.samples.push_back(t.samples.front());
  std::size_t approach = 0;
  for (std::size_t i = 1; i < t.samples.size(); ++i) {
    const auto& a = t.samples[i - 1];
    const auto& b = t.samples[i];
    const double step = (b.q - a.q).cwiseAbs().maxCoeff();
    const int parts = std::max(1, static_cast<int>(std::ceil(step / max_step - 1e-12)));
    for (int k = 1; k <= parts; ++k) {
      const double f = static_cast<double>(k) / parts;
      out.samples.push_back({a.time_s + f * (b.time_s - a.time_s), a.q + f * (b.q - a.q)});
    }
    if (i == t.approach_index) approach = out.samples.size() - 1;
  }
  out.approach_index = approach;
  return out;
}

std::vector<double> candidate_rolls() {
  const double q = std::numbers::pi / 4.0;
  return {0.0, q, -q, 2 * q, -2 * q, 3 * q, -3 * q, 4 * q};
}

Trajectory plan_safe(const RobotModel& model, const CollisionScene& scene, const JointVector& start,
                     const ToolAxisTarget& target, double standoff_mm, const PlanParams& params) {
  bool any_planned = false;
  std::optional<Error> last_error;
  for (double roll : candidate_rolls()) {
    PlanParams p = params;
    p.roll_rad = params.roll_rad + roll;
    Trajectory traj;
    try {
      traj = plan_trajectory(model, start, target, standoff_mm, p);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::Unreachable && e.code() != ErrorCode::LimitViolation) throw;
      last_error = e;
      continue;
    }
    any_planned = true;
    bool clear = true;
    for (const auto& s : traj.samples) {
      if (!check_collision(model, scene, s.q).empty()) {
        clear = false;
        break;
      }
    }
    if (clear) {
      traj.collision_checked = true;
      return traj;
    }
  }
  if (!any_planned && last_error) throw *last_error;
  throw Error(ErrorCode::NoSafePath, "every approach roll collides with the scene");
}

void write_trajectory_csv(std::ostream& out, const Trajectory& t) {
  out << "time_s,q1,q2,q3,q4,q5,q6\n";
  for (const auto& s : t.samples) {
    out << fmt::format("{:.9f}", s.time_s);
    for (int i = 0; i < kDof; ++i) out << fmt::format(",{:.15g}", s.q(i));
    out << '\n';
  }
}

}  // namespace igss::kin
