#pragma once

#include "igss/registration/fiducials.hpp"

#include <array>

namespace igss::reg {

/// Expected target registration error for isotropic, independent fiducial
/// localization error, from the principal-axis geometry of the fiducials:
///
///   E[TRE^2](r) = (FLE^2 / N) * (1 + 1/3 * sum_k d_k^2 / f_k^2)
///
/// f_k is the RMS distance of the fiducials from principal axis k and d_k the
/// distance of the target from that axis (axes pass through the centroid).
struct TrePrediction {
  Vec3 target = Vec3::Zero();
  double expected_tre_rms = 0.0;  // mm
  double fle_rms = 0.0;           // mm, RMS of the 3D localization error vector
  std::array<double, 3> principal_axis_spans{};  // f_k, mm
  std::array<double, 3> target_offsets{};        // d_k, mm
  geom::Mat3 principal_axes = geom::Mat3::Identity();  // columns
};

/// Throws DegenerateGeometry (collinear or <3 fiducials) or InvalidArgument (fle_rms <= 0).
TrePrediction predict_tre(const FiducialSet& fiducials, double fle_rms, const Vec3& target);

}  // namespace igss::reg
