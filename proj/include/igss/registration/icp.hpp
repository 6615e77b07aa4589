#pragma once

#include "igss/registration/point_registration.hpp"
#include "igss/registration/surface.hpp"

#include <span>

namespace igss::reg {

struct IcpParams {
  int max_iter = 100;
  double tol_mm = 1e-6;
  // Smallest/largest eigenvalue of the point-to-plane information matrix below
  // which some rigid motion is unobservable from the probed points.
  double ambiguity_ratio = 1e-3;
  bool throw_on_ambiguous = false;
};

inline constexpr std::size_t kMinIcpPoints = 10;

/// Surface registration of stylus-probed points (moving) onto a mesh (fixed).
///
/// Alternates closest-point correspondence (point-to-triangle) with the
/// closed-form rigid fit until the RMS residual changes by less than tol_mm.
/// The residual sequence is non-increasing. Exhausting max_iter sets
/// converged = false rather than throwing. A rotationally or translationally
/// symmetric fit sets ambiguous = true (or throws DegenerateGeometry when
/// throw_on_ambiguous).
RegistrationResult icp_register(std::span<const Vec3> probed, const SurfaceModel& surface,
                                const geom::RigidTransform& init, const IcpParams& params = {});

/// Smallest/largest eigenvalue ratio of the 6x6 point-to-plane information matrix.
double observability_ratio(std::span<const Vec3> surface_points, std::span<const Vec3> normals);

}  // namespace igss::reg
