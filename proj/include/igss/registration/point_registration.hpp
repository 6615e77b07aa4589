#pragma once

#include "igss/registration/fiducials.hpp"

#include <span>
#include <string>
#include <variant>
#include <vector>

namespace igss::reg {

/// Singular-value ratio (2nd / 1st) below which a point set counts as collinear.
inline constexpr double kCollinearityRatio = 1e-6;
/// Default acceptance bound for verify_registration (mm).
inline constexpr double kDefaultAcceptThresholdMm = 2.0;

struct RegistrationResult {
  geom::RigidTransform transform;  // moving -> fixed
  double fre_rms = 0.0;            // mm
  std::vector<double> per_point_residuals;  // mm, in correspondence order
  std::size_t n_points = 0;

  // Populated by iterative methods only.
  int iterations = 0;
  bool converged = true;
  bool ambiguous = false;
  std::vector<double> residual_history;
};

/// Closed-form least-squares rigid fit of `moving` onto `fixed` (index-paired).
/// Throws TooFewPoints (<3) or DegenerateGeometry (collinear).
RegistrationResult fit_rigid(std::span<const Vec3> fixed, std::span<const Vec3> moving);

/// Pairs by label, then fit_rigid. Throws LabelMismatch on label disagreement.
RegistrationResult register_points(const FiducialSet& fixed, const FiducialSet& moving);

/// sqrt(mean squared distance) over matching labels.
double rmse_paired(const FiducialSet& a, const FiducialSet& b);

/// Ratio of the 2nd to 1st singular value of the demeaned point matrix.
double collinearity_ratio(std::span<const Vec3> points);

struct Accept {};
struct Reject {
  double fre_rms;
  std::string reason;
};
using Verdict = std::variant<Accept, Reject>;

/// Accepts iff fre_rms <= threshold (closed bound).
Verdict verify_registration(const RegistrationResult& result,
                            double threshold_mm = kDefaultAcceptThresholdMm);

inline bool accepted(const Verdict& v) { return std::holds_alternative<Accept>(v); }

}  // namespace igss::reg
