#include "igss/calibration/triangulation.hpp"

#include "igss/error.hpp"

#include <cmath>
#include <numbers>

namespace igss::calib {

Triangulated triangulate(const ViewObservation& a, const ViewObservation& b) {
  const Vec3 ca = camera_center(a.model);
  const Vec3 cb = camera_center(b.model);
  const Vec3 da = back_projection_direction(a.model, a.uv);
  const Vec3 db = back_projection_direction(b.model, b.uv);

  const double cos_angle = std::abs(da.dot(db));
  const double min_cos = std::cos(kMinRayAngleDeg * std::numbers::pi / 180.0);
  if (cos_angle > min_cos) throw Error(ErrorCode::ParallelRays, "views are nearly parallel");

  // Closest points ca + s*da and cb + t*db (unit directions).
  const Vec3 w = ca - cb;
  const double k = da.dot(db);
  const double d = da.dot(w);
  const double e = db.dot(w);
  const double denom = 1.0 - k * k;
  const double s = (k * e - d) / denom;
  const double t = (e - k * d) / denom;
  const Vec3 pa = ca + s * da;
  const Vec3 pb = cb + t * db;
  return {0.5 * (pa + pb), (pa - pb).norm()};
}

reg::FiducialSet triangulate_common(const reg::FiducialSet& jig, const ViewDetections& a,
                                    const ViewDetections& b) {
  reg::validate(jig);
  reg::FiducialSet out{a.model.frame, {}};
  for (const auto& f : jig.points) {
    const Detection* da = a.detections.find(f.label);
    const Detection* db = b.detections.find(f.label);
    if (da == nullptr || db == nullptr) continue;
    const Triangulated t = triangulate({a.model, da->uv}, {b.model, db->uv});
    out.points.push_back({f.label, t.point});
  }
  if (out.points.size() < kMinCommonLabels) {
    throw Error(ErrorCode::TooFewCommonLabels,
                std::to_string(out.points.size()) + " jig labels seen in both views, need 4");
  }
  return out;
}

reg::RegistrationResult register_patient_2d(const reg::FiducialSet& jig, const ViewDetections& a,
                                            const ViewDetections& b) {
  const reg::FiducialSet measured = triangulate_common(jig, a, b);
  reg::FiducialSet moving{jig.frame, {}};
  for (const auto& f : measured.points) moving.points.push_back(*jig.find(f.label));
  return reg::register_points(measured, moving);
}

}  // namespace igss::calib
