#pragma once

#include "igss/geom/frame_graph.hpp"

#include <span>

namespace igss::calib {

using geom::Vec3;

inline constexpr std::size_t kDefaultMinPoses = 10;
inline constexpr double kMinRotationSingularValue = 1e-6;

struct PivotResult {
  Vec3 tip_offset;   // mm, tool body frame
  Vec3 pivot_point;  // mm, tracker frame
  double residual_rms = 0.0;  // mm
};

/// Least-squares solution of R_i * tip + t_i = pivot over all tracker->body poses.
/// Throws TooFewPoses or InsufficientRotation (stacked system rank-deficient).
PivotResult pivot_calibrate(std::span<const geom::RigidTransform> poses,
                            std::size_t min_poses = kDefaultMinPoses);

struct ToolDefinition {
  geom::Frame body_frame = geom::Frame::ToolBody;
  Vec3 tip_offset = Vec3::Zero();     // mm
  Vec3 axis = Vec3::UnitZ();          // unit, body frame
  double calib_residual_rms = 0.0;    // mm
};

/// Tool definition from a pivot result; the axis defaults to the body-origin-to-tip direction.
ToolDefinition make_tool_definition(const PivotResult& pivot);
ToolDefinition make_tool_definition(const PivotResult& pivot, const Vec3& axis);

}  // namespace igss::calib
