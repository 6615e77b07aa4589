#include "igss/kinematics/robot_model.hpp"

#include "igss/error.hpp"

#include <cmath>
#include <numbers>

namespace igss::kin {

namespace {
constexpr double kDeg = std::numbers::pi / 180.0;
}

std::vector<Capsule> dh_link_capsules(const DhRow& dh, double radius) {
  // In frame i, frame i-1's origin sits at (-a, -d sin(alpha), -d cos(alpha))
  // and the elbow between the d and a offsets at (-a, 0, 0), independent of theta.
  std::vector<Capsule> out;
  const Vec3 prev(-dh.a, -dh.d * std::sin(dh.alpha), -dh.d * std::cos(dh.alpha));
  const Vec3 elbow(-dh.a, 0.0, 0.0);
  if (std::abs(dh.d) > 0.0) out.push_back({prev, elbow, radius});
  if (std::abs(dh.a) > 0.0) out.push_back({elbow, Vec3::Zero(), radius});
  return out;
}

RobotModel RobotModel::default_model() {
  RobotModel m;
  const double half_pi = std::numbers::pi / 2.0;
  m.dh = {{
      {150.0, -half_pi, 450.0, 0.0},
      {600.0, 0.0, 0.0, -half_pi},
      {120.0, -half_pi, 0.0, 0.0},
      {0.0, half_pi, 620.0, 0.0},
      {0.0, -half_pi, 0.0, 0.0},
      {0.0, 0.0, 110.0, 0.0},
  }};
  m.limits = {{
      {-170.0 * kDeg, 170.0 * kDeg},
      {-120.0 * kDeg, 120.0 * kDeg},
      {-150.0 * kDeg, 150.0 * kDeg},
      {-170.0 * kDeg, 170.0 * kDeg},
      {-125.0 * kDeg, 125.0 * kDeg},
      {-170.0 * kDeg, 170.0 * kDeg},
  }};
  const std::array<double, kDof> radii = {70.0, 60.0, 55.0, 50.0, 45.0, 40.0};
  for (int i = 0; i < kDof; ++i) m.link_capsules[i + 1] = dh_link_capsules(m.dh[i], radii[i]);
  m.link_capsules[0] = {{Vec3(0, 0, -50.0), Vec3(0, 0, 200.0), 110.0}};

  constexpr double kToolLength = 150.0;
  m.tool = geom::RigidTransform::translation(Vec3(0, 0, kToolLength));
  // Guide tube along the flange axis, plus a tracking-array mount off to one side.
  m.link_capsules[6].push_back({Vec3(0, 0, 10.0), Vec3(0, 0, kToolLength), 8.0});
  m.link_capsules[6].push_back({Vec3(90.0, 0, 20.0), Vec3(90.0, 0, 90.0), 20.0});
  return m;
}

void validate(const RobotModel& model) {
  for (int i = 0; i < kDof; ++i) {
    const auto& l = model.limits[i];
    if (!(l.min < l.max)) {
      throw Error(ErrorCode::InvalidArgument, "joint " + std::to_string(i + 1) + " limits inverted");
    }
  }
  for (const auto& link : model.link_capsules) {
    for (const auto& c : link) {
      if (!(c.radius > 0.0)) throw Error(ErrorCode::InvalidArgument, "capsule radius must be positive");
    }
  }
}

bool within_limits(const RobotModel& model, const JointVector& q, double slack) {
  for (int i = 0; i < kDof; ++i) {
    if (q(i) < model.limits[i].min - slack || q(i) > model.limits[i].max + slack) return false;
  }
  return true;
}

}  // namespace igss::kin
