#include "igss/kinematics/kinematics.hpp"

#include "igss/error.hpp"

#include <cmath>
#include <numbers>
#include <random>

namespace igss::kin {

geom::RigidTransform dh_transform(const DhRow& row, double q) {
  const double th = q + row.theta_offset;
  const double ct = std::cos(th);
  const double st = std::sin(th);
  const double ca = std::cos(row.alpha);
  const double sa = std::sin(row.alpha);
  geom::Mat3 r;
  r << ct, -st * ca, st * sa,
       st, ct * ca, -ct * sa,
       0.0, sa, ca;
  return geom::RigidTransform::from(r, Vec3(row.a * ct, row.a * st, row.d));
}

std::array<geom::RigidTransform, kDof + 1> link_frames(const RobotModel& model, const JointVector& q) {
  std::array<geom::RigidTransform, kDof + 1> frames;
  for (int i = 0; i < kDof; ++i) frames[i + 1] = frames[i] * dh_transform(model.dh[i], q(i));
  return frames;
}

geom::RigidTransform fk(const RobotModel& model, const JointVector& q) {
  return link_frames(model, q)[kDof];
}

geom::RigidTransform tool_pose(const RobotModel& model, const JointVector& q) {
  return fk(model, q) * model.tool;
}

Jacobian jacobian(const RobotModel& model, const JointVector& q) {
  const auto frames = link_frames(model, q);
  const Vec3 pe = frames[kDof].translation();
  Jacobian j;
  for (int i = 0; i < kDof; ++i) {
    // Joint i+1 rotates about z of frame i.
    const Vec3 z = frames[i].rotation().col(2);
    const Vec3 o = frames[i].translation();
    j.block<3, 1>(0, i) = z.cross(pe - o);
    j.block<3, 1>(3, i) = z;
  }
  return j;
}

Eigen::Matrix<double, 6, 1> pose_error(const geom::RigidTransform& from, const geom::RigidTransform& to) {
  Eigen::Matrix<double, 6, 1> e;
  e.head<3>() = to.translation() - from.translation();
  const Eigen::AngleAxisd aa(geom::Mat3(to.rotation() * from.rotation().transpose()));
  e.tail<3>() = aa.angle() * aa.axis();
  return e;
}

namespace {

double wrap_angle(double a) {
  a = std::remainder(a, 2.0 * std::numbers::pi);
  return a;
}

// Shifts each joint by multiples of 2*pi into its limits when possible.
JointVector fit_into_limits(const RobotModel& model, JointVector q) {
  for (int i = 0; i < kDof; ++i) {
    q(i) = wrap_angle(q(i));
    for (double shift : {0.0, 2.0 * std::numbers::pi, -2.0 * std::numbers::pi}) {
      const double c = q(i) + shift;
      if (c >= model.limits[i].min && c <= model.limits[i].max) {
        q(i) = c;
        break;
      }
    }
  }
  return q;
}

struct Attempt {
  JointVector q;
  double pos_err;
  double rot_err;
  int iterations;
  bool converged;
};

Attempt run_dls(const RobotModel& model, const geom::RigidTransform& target, JointVector q,
                const IkParams& p) {
  Eigen::Matrix<double, 6, 1> w;
  w << 1, 1, 1, p.orientation_weight_mm, p.orientation_weight_mm, p.orientation_weight_mm;

  auto evaluate = [&](const JointVector& qq) {
    const auto e = pose_error(fk(model, qq), target);
    return std::make_pair(e, (w.asDiagonal() * e).norm());
  };
  auto [err, cost] = evaluate(q);
  double lambda = p.damping;
  int it = 0;
  while (it < p.max_iter) {
    if (err.head<3>().norm() < p.tol_mm && err.tail<3>().norm() < p.tol_rad) break;
    ++it;
    const Jacobian jw = w.asDiagonal() * jacobian(model, q);
    const Eigen::Matrix<double, 6, 6> jjt =
        jw * jw.transpose() + lambda * lambda * Eigen::Matrix<double, 6, 6>::Identity();
    JointVector dq = jw.transpose() * jjt.ldlt().solve(w.asDiagonal() * err);
    // Cap the step so the linearization stays meaningful.
    const double max_step = dq.cwiseAbs().maxCoeff();
    if (max_step > 0.5) dq *= 0.5 / max_step;
    const JointVector trial = q + dq;
    auto [trial_err, trial_cost] = evaluate(trial);
    if (trial_cost < cost) {
      q = trial;
      err = trial_err;
      cost = trial_cost;
      lambda = std::max(p.damping, lambda * 0.5);
    } else {
      lambda *= 2.0;
      if (lambda > 1e6) break;
    }
  }
  const bool ok = err.head<3>().norm() < p.tol_mm && err.tail<3>().norm() < p.tol_rad;
  return {q, err.head<3>().norm(), err.tail<3>().norm(), it, ok};
}

}  // namespace

IkResult ik_solve(const RobotModel& model, const geom::RigidTransform& target, const JointVector& seed,
                  const IkParams& params) {
  if (!target.rotation().allFinite() || !target.translation().allFinite()) {
    throw Error(ErrorCode::InvalidArgument, "IK target is not finite");
  }
  std::mt19937_64 rng(params.restart_seed);
  bool limit_hit = false;
  int total_iterations = 0;
  for (int attempt = 0; attempt <= params.restarts; ++attempt) {
    JointVector start = seed;
    if (attempt > 0) {
      for (int i = 0; i < kDof; ++i) {
        std::uniform_real_distribution<double> u(model.limits[i].min, model.limits[i].max);
        start(i) = u(rng);
      }
    }
    const Attempt a = run_dls(model, target, start, params);
    total_iterations += a.iterations;
    if (!a.converged) continue;
    const JointVector q = a.iterations == 0 ? a.q : fit_into_limits(model, a.q);
    if (!within_limits(model, q)) {
      limit_hit = true;
      continue;
    }
    return {q, a.pos_err, a.rot_err, total_iterations, attempt + 1};
  }
  if (limit_hit) throw Error(ErrorCode::LimitViolation, "only out-of-limit IK solutions found");
  throw Error(ErrorCode::Unreachable, "IK did not converge from the seed or any restart");
}

JointVector ik(const RobotModel& model, const geom::RigidTransform& target, const JointVector& seed,
               const IkParams& params) {
  return ik_solve(model, target, seed, params).q;
}

}  // namespace igss::kin
