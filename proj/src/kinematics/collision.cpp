#include "igss/kinematics/collision.hpp"

#include "igss/error.hpp"
#include "igss/kinematics/kinematics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace igss::kin {

double point_segment_distance(const Vec3& p, const Vec3& a, const Vec3& b) {
  const Vec3 ab = b - a;
  const double len_sq = ab.squaredNorm();
  const double t = len_sq > 0.0 ? std::clamp((p - a).dot(ab) / len_sq, 0.0, 1.0) : 0.0;
  return (p - (a + t * ab)).norm();
}

// Closest points of two segments (Ericson, Real-Time Collision Detection 5.1.9).
double segment_segment_distance(const Vec3& p0, const Vec3& p1, const Vec3& q0, const Vec3& q1) {
  constexpr double kEps = 1e-12;
  const Vec3 d1 = p1 - p0;
  const Vec3 d2 = q1 - q0;
  const Vec3 r = p0 - q0;
  const double a = d1.squaredNorm();
  const double e = d2.squaredNorm();
  const double f = d2.dot(r);
  double s = 0.0;
  double t = 0.0;
  if (a <= kEps && e <= kEps) return r.norm();
  if (a <= kEps) {
    t = std::clamp(f / e, 0.0, 1.0);
  } else {
    const double c = d1.dot(r);
    if (e <= kEps) {
      s = std::clamp(-c / a, 0.0, 1.0);
    } else {
      const double b = d1.dot(d2);
      const double denom = a * e - b * b;
      s = denom > kEps ? std::clamp((b * f - c * e) / denom, 0.0, 1.0) : 0.0;
      t = (b * s + f) / e;
      if (t < 0.0) {
        t = 0.0;
        s = std::clamp(-c / a, 0.0, 1.0);
      } else if (t > 1.0) {
        t = 1.0;
        s = std::clamp((b - c) / a, 0.0, 1.0);
      }
    }
  }
  return ((p0 + s * d1) - (q0 + t * d2)).norm();
}

std::vector<Obstacle> obstacles_in_base(const CollisionScene& scene) {
  if (scene.safety_margin < 0.0) throw Error(ErrorCode::InvalidArgument, "negative safety margin");
  std::vector<Obstacle> out;
  out.reserve(scene.obstacles.size());
  for (const auto& o : scene.obstacles) {
    geom::RigidTransform to_base;
    if (o.frame != geom::Frame::RobotBase) {
      if (!scene.frames) {
        throw Error(ErrorCode::NoPath, "obstacle '" + o.label + "' needs a frame graph");
      }
      to_base = scene.frames->resolve(o.frame, geom::Frame::RobotBase);
    }
    Obstacle b{o.label, o.shape, geom::Frame::RobotBase};
    if (auto* c = std::get_if<Capsule>(&b.shape)) {
      c->p0 = to_base.apply(c->p0);
      c->p1 = to_base.apply(c->p1);
    } else {
      auto& s = std::get<Sphere>(b.shape);
      s.center = to_base.apply(s.center);
    }
    out.push_back(std::move(b));
  }
  return out;
}

namespace {

double capsule_obstacle_distance(const Vec3& a0, const Vec3& a1, double ra, const Obstacle& o) {
  if (const auto* c = std::get_if<Capsule>(&o.shape)) {
    return segment_segment_distance(a0, a1, c->p0, c->p1) - ra - c->radius;
  }
  const auto& s = std::get<Sphere>(o.shape);
  return point_segment_distance(s.center, a0, a1) - ra - s.radius;
}

template <typename Visit>
void for_each_pair(const RobotModel& model, const std::vector<Obstacle>& obstacles,
                   const JointVector& q, Visit&& visit) {
  const auto frames = link_frames(model, q);
  for (int link = 0; link <= kDof; ++link) {
    for (std::size_t k = 0; k < obstacles.size(); ++k) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& cap : model.link_capsules[link]) {
        const Vec3 a0 = frames[link].apply(cap.p0);
        const Vec3 a1 = frames[link].apply(cap.p1);
        best = std::min(best, capsule_obstacle_distance(a0, a1, cap.radius, obstacles[k]));
      }
      if (!model.link_capsules[link].empty()) visit(link, obstacles[k], best);
    }
  }
}

}  // namespace

std::vector<Contact> check_collision(const RobotModel& model, const CollisionScene& scene,
                                     const JointVector& q) {
  const auto obstacles = obstacles_in_base(scene);
  std::vector<Contact> out;
  for_each_pair(model, obstacles, q, [&](int link, const Obstacle& o, double d) {
    if (d < scene.safety_margin) out.push_back({link, o.label, d});
  });
  return out;
}

double min_clearance(const RobotModel& model, const CollisionScene& scene, const JointVector& q) {
  const auto obstacles = obstacles_in_base(scene);
  double best = std::numeric_limits<double>::infinity();
  for_each_pair(model, obstacles, q, [&](int, const Obstacle&, double d) { best = std::min(best, d); });
  return best;
}

}  // namespace igss::kin
