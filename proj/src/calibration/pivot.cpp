#include "igss/calibration/pivot.hpp"

#include "igss/error.hpp"

#include <cmath>

namespace igss::calib {

PivotResult pivot_calibrate(std::span<const geom::RigidTransform> poses, std::size_t min_poses) {
  if (poses.size() < min_poses || poses.size() < 2) {
    throw Error(ErrorCode::TooFewPoses, std::to_string(poses.size()) + " poses, need " +
                                            std::to_string(min_poses));
  }
  const auto n = static_cast<Eigen::Index>(poses.size());
  Eigen::MatrixXd a(3 * n, 6);
  Eigen::VectorXd b(3 * n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& pose = poses[static_cast<std::size_t>(i)];
    a.block<3, 3>(3 * i, 0) = pose.rotation();
    a.block<3, 3>(3 * i, 3) = -geom::Mat3::Identity();
    b.segment<3>(3 * i) = -pose.translation();
  }

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& s = svd.singularValues();
  if (s(s.size() - 1) <= kMinRotationSingularValue) {
    throw Error(ErrorCode::InsufficientRotation,
                "poses lack rotational diversity (smallest singular value " +
                    std::to_string(s(s.size() - 1)) + ")");
  }
  const Eigen::VectorXd x = svd.solve(b);

  PivotResult out;
  out.tip_offset = x.head<3>();
  out.pivot_point = x.tail<3>();
  double sum_sq = 0.0;
  for (const auto& pose : poses) {
    sum_sq += (pose.apply(out.tip_offset) - out.pivot_point).squaredNorm();
  }
  out.residual_rms = std::sqrt(sum_sq / static_cast<double>(poses.size()));
  return out;
}

ToolDefinition make_tool_definition(const PivotResult& pivot) {
  if (pivot.tip_offset.norm() < 1e-9) {
    throw Error(ErrorCode::InvalidArgument, "tip coincides with body origin; axis undefined");
  }
  return make_tool_definition(pivot, pivot.tip_offset);
}

ToolDefinition make_tool_definition(const PivotResult& pivot, const Vec3& axis) {
  if (axis.norm() < 1e-12) throw Error(ErrorCode::InvalidArgument, "zero tool axis");
  return ToolDefinition{geom::Frame::ToolBody, pivot.tip_offset, axis.normalized(),
                        pivot.residual_rms};
}

}  // namespace igss::calib
