#include "igss/registration/tre.hpp"

#include "igss/error.hpp"
#include "igss/registration/point_registration.hpp"

#include <cmath>

namespace igss::reg {

TrePrediction predict_tre(const FiducialSet& fiducials, double fle_rms, const Vec3& target) {
  validate(fiducials);
  if (!(fle_rms > 0.0)) throw Error(ErrorCode::InvalidArgument, "fle_rms must be positive");
  const auto pts = fiducials.positions();
  if (pts.size() < 3 || collinearity_ratio(pts) < kCollinearityRatio) {
    throw Error(ErrorCode::DegenerateGeometry, "need >= 3 non-collinear fiducials");
  }

  const double n = static_cast<double>(pts.size());
  Vec3 c = Vec3::Zero();
  for (const auto& p : pts) c += p;
  c /= n;
  geom::Mat3 cov = geom::Mat3::Zero();
  for (const auto& p : pts) cov += (p - c) * (p - c).transpose();
  cov /= n;

  Eigen::SelfAdjointEigenSolver<geom::Mat3> eig(cov);
  const Vec3 lambda = eig.eigenvalues();
  const geom::Mat3 axes = eig.eigenvectors();
  const Vec3 r = target - c;

  TrePrediction out;
  out.target = target;
  out.fle_rms = fle_rms;
  out.principal_axes = axes;
  double sum = 0.0;
  for (int k = 0; k < 3; ++k) {
    const double f_sq = lambda.sum() - lambda(k);
    const double along = r.dot(axes.col(k));
    const double d_sq = std::max(0.0, r.squaredNorm() - along * along);
    out.principal_axis_spans[k] = std::sqrt(f_sq);
    out.target_offsets[k] = std::sqrt(d_sq);
    sum += d_sq / f_sq;
  }
  out.expected_tre_rms = std::sqrt(fle_rms * fle_rms / n * (1.0 + sum / 3.0));
  return out;
}

}  // namespace igss::reg
