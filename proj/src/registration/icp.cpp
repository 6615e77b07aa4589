#include "igss/registration/icp.hpp"

#include "igss/error.hpp"

#include <cmath>

namespace igss::reg {

namespace {

struct Correspondences {
  std::vector<Vec3> points;
  std::vector<Vec3> normals;
  std::vector<double> distances;
  double rms = 0.0;
};

Correspondences correspond(const SurfaceIndex& index, std::span<const Vec3> probed,
                           const geom::RigidTransform& t) {
  Correspondences c;
  c.points.reserve(probed.size());
  c.normals.reserve(probed.size());
  c.distances.reserve(probed.size());
  double sum_sq = 0.0;
  for (const auto& p : probed) {
    const ClosestPoint hit = index.closest(t.apply(p));
    c.points.push_back(hit.point);
    c.normals.push_back(hit.normal);
    c.distances.push_back(hit.distance);
    sum_sq += hit.distance * hit.distance;
  }
  c.rms = std::sqrt(sum_sq / static_cast<double>(probed.size()));
  return c;
}

}  // namespace

double observability_ratio(std::span<const Vec3> surface_points, std::span<const Vec3> normals) {
  Vec3 c = Vec3::Zero();
  for (const auto& q : surface_points) c += q;
  c /= static_cast<double>(surface_points.size());
  double spread = 0.0;
  for (const auto& q : surface_points) spread += (q - c).squaredNorm();
  const double scale = std::sqrt(spread / static_cast<double>(surface_points.size()));
  if (scale <= 0.0) return 0.0;

  Eigen::Matrix<double, 6, 6> info = Eigen::Matrix<double, 6, 6>::Zero();
  for (std::size_t i = 0; i < surface_points.size(); ++i) {
    Eigen::Matrix<double, 6, 1> row;
    row.head<3>() = normals[i];
    row.tail<3>() = ((surface_points[i] - c) / scale).cross(normals[i]);
    info += row * row.transpose();
  }
  const auto ev = Eigen::SelfAdjointEigenSolver<Eigen::Matrix<double, 6, 6>>(info).eigenvalues();
  if (ev(5) <= 0.0) return 0.0;
  return std::max(0.0, ev(0)) / ev(5);
}

RegistrationResult icp_register(std::span<const Vec3> probed, const SurfaceModel& surface,
                                const geom::RigidTransform& init, const IcpParams& params) {
  if (probed.size() < kMinIcpPoints) {
    throw Error(ErrorCode::TooFewPoints, "ICP needs at least 10 probed points");
  }
  const SurfaceIndex index(surface);

  geom::RigidTransform current = init;
  Correspondences corr = correspond(index, probed, current);
  std::vector<double> history{corr.rms};
  bool converged = false;
  int iterations = 0;

  while (iterations < params.max_iter) {
    const RegistrationResult step = fit_rigid(corr.points, probed);
    Correspondences next = correspond(index, probed, step.transform);
    ++iterations;
    if (next.rms > corr.rms) {
      // Only round-off can raise the residual; keep the better estimate.
      converged = true;
      break;
    }
    const double change = corr.rms - next.rms;
    current = step.transform;
    corr = std::move(next);
    history.push_back(corr.rms);
    if (change < params.tol_mm) {
      converged = true;
      break;
    }
  }

  RegistrationResult out;
  out.transform = current;
  out.n_points = probed.size();
  out.per_point_residuals = corr.distances;
  out.fre_rms = corr.rms;
  out.iterations = iterations;
  out.converged = converged;
  out.residual_history = std::move(history);
  out.ambiguous = observability_ratio(corr.points, corr.normals) < params.ambiguity_ratio;
  if (out.ambiguous && params.throw_on_ambiguous) {
    throw Error(ErrorCode::DegenerateGeometry, "surface symmetry leaves the pose unobservable");
  }
  return out;
}

}  // namespace igss::reg
