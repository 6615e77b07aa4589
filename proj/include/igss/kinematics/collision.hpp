#pragma once

#include "igss/geom/frame_graph.hpp"
#include "igss/kinematics/robot_model.hpp"

#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace igss::kin {

struct Sphere {
  Vec3 center = Vec3::Zero();  // mm
  double radius = 0.0;         // mm
};

struct Obstacle {
  std::string label;
  std::variant<Capsule, Sphere> shape;
  geom::Frame frame = geom::Frame::RobotBase;
};

/// Obstacles outside RobotBase are resolved through `frames`.
struct CollisionScene {
  std::vector<Obstacle> obstacles;
  double safety_margin = 0.0;  // mm
  std::optional<geom::FrameGraph> frames;
};

struct Contact {
  int link = 0;
  std::string obstacle;
  double distance = 0.0;  // mm, surface to surface; negative when penetrating
};

/// Closest distance between segments [p0,p1] and [q0,q1].
double segment_segment_distance(const Vec3& p0, const Vec3& p1, const Vec3& q0, const Vec3& q1);
double point_segment_distance(const Vec3& p, const Vec3& a, const Vec3& b);

/// Obstacles expressed as capsules/spheres in the RobotBase frame.
/// Throws NoPath when an obstacle frame cannot be resolved; InvalidArgument on a negative margin.
std::vector<Obstacle> obstacles_in_base(const CollisionScene& scene);

/// Every (link, obstacle) pair closer than the safety margin, with its minimum distance.
std::vector<Contact> check_collision(const RobotModel& model, const CollisionScene& scene,
                                     const JointVector& q);

/// Smallest link-obstacle distance (infinity for an empty scene).
double min_clearance(const RobotModel& model, const CollisionScene& scene, const JointVector& q);

}  // namespace igss::kin
