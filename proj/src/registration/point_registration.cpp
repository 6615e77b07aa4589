#include "igss/registration/point_registration.hpp"

#include "igss/error.hpp"

#include <cmath>

namespace igss::reg {

namespace {

Vec3 centroid(std::span<const Vec3> pts) {
  Vec3 c = Vec3::Zero();
  for (const auto& p : pts) c += p;
  return c / static_cast<double>(pts.size());
}

}  // namespace

double collinearity_ratio(std::span<const Vec3> points) {
  if (points.empty()) return 0.0;
  const Vec3 c = centroid(points);
  Eigen::MatrixX3d m(points.size(), 3);
  for (std::size_t i = 0; i < points.size(); ++i) m.row(i) = (points[i] - c).transpose();
  const Vec3 s = Eigen::JacobiSVD<Eigen::MatrixX3d>(m).singularValues();
  if (s(0) <= 0.0) return 0.0;
  return s(1) / s(0);
}

RegistrationResult fit_rigid(std::span<const Vec3> fixed, std::span<const Vec3> moving) {
  if (fixed.size() != moving.size()) {
    throw Error(ErrorCode::InvalidArgument, "correspondence lists differ in length");
  }
  const std::size_t n = fixed.size();
  if (n < 3) throw Error(ErrorCode::TooFewPoints, std::to_string(n) + " correspondences");
  if (collinearity_ratio(moving) < kCollinearityRatio ||
      collinearity_ratio(fixed) < kCollinearityRatio) {
    throw Error(ErrorCode::DegenerateGeometry, "points are collinear");
  }

  const Vec3 cf = centroid(fixed);
  const Vec3 cm = centroid(moving);
  geom::Mat3 h = geom::Mat3::Zero();
  for (std::size_t i = 0; i < n; ++i) h += (moving[i] - cm) * (fixed[i] - cf).transpose();

  Eigen::JacobiSVD<geom::Mat3> svd(h, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const geom::Mat3& u = svd.matrixU();
  const geom::Mat3& v = svd.matrixV();
  geom::Mat3 d = geom::Mat3::Identity();
  d(2, 2) = (v * u.transpose()).determinant() < 0.0 ? -1.0 : 1.0;
  const geom::Mat3 r = geom::nearest_rotation(v * d * u.transpose());

  RegistrationResult out;
  out.transform = geom::RigidTransform::from(r, cf - r * cm);
  out.n_points = n;
  out.per_point_residuals.reserve(n);
  double sum_sq = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double e = (fixed[i] - out.transform.apply(moving[i])).norm();
    out.per_point_residuals.push_back(e);
    sum_sq += e * e;
  }
  out.fre_rms = std::sqrt(sum_sq / static_cast<double>(n));
  return out;
}

RegistrationResult register_points(const FiducialSet& fixed, const FiducialSet& moving) {
  const MatchedPairs pairs = match_by_label(fixed, moving);
  return fit_rigid(pairs.a, pairs.b);
}

double rmse_paired(const FiducialSet& a, const FiducialSet& b) {
  const MatchedPairs pairs = match_by_label(a, b);
  double sum_sq = 0.0;
  for (std::size_t i = 0; i < pairs.a.size(); ++i) sum_sq += (pairs.a[i] - pairs.b[i]).squaredNorm();
  return std::sqrt(sum_sq / static_cast<double>(pairs.a.size()));
}

Verdict verify_registration(const RegistrationResult& result, double threshold_mm) {
  if (result.fre_rms <= threshold_mm) return Accept{};
  return Reject{result.fre_rms, "FRE " + std::to_string(result.fre_rms) + " mm exceeds " +
                                    std::to_string(threshold_mm) + " mm"};
}

}  // namespace igss::reg
