#pragma once

#include "igss/calibration/projection.hpp"
#include "igss/registration/point_registration.hpp"

namespace igss::calib {

inline constexpr double kMinRayAngleDeg = 5.0;

struct ViewObservation {
  const ProjectionModel& model;
  Vec2 uv;
};

struct Triangulated {
  Vec3 point;           // mm, projection frame
  double ray_gap = 0.0;  // mm, length of the common perpendicular
};

/// Midpoint of the common perpendicular of the two back-projected rays.
/// Throws ParallelRays when the rays meet at less than 5 degrees.
Triangulated triangulate(const ViewObservation& a, const ViewObservation& b);

struct ViewDetections {
  ProjectionModel model;
  Detection2D detections;
};

inline constexpr std::size_t kMinCommonLabels = 4;

/// Triangulates every jig label detected in both views. Throws TooFewCommonLabels.
reg::FiducialSet triangulate_common(const reg::FiducialSet& jig, const ViewDetections& a,
                                    const ViewDetections& b);

/// Automatic fiducial registration from two C-arm views: triangulate the jig
/// fiducials, then fit the jig's patient-frame geometry onto them.
/// The result maps patient coordinates into the projection (CArm) frame.
reg::RegistrationResult register_patient_2d(const reg::FiducialSet& jig, const ViewDetections& a,
                                            const ViewDetections& b);

}  // namespace igss::calib
