#include "igss/planning/screw.hpp"

#include "igss/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace igss::plan {

void validate(const ScrewPlan& screw) {
  if (!screw.entry.allFinite() || std::abs(screw.direction.norm() - 1.0) > 1e-9) {
    throw Error(ErrorCode::InvalidArgument, "screw '" + screw.level + "' direction must be unit");
  }
  if (screw.diameter < 2.0 || screw.diameter > 10.0) {
    throw Error(ErrorCode::InvalidArgument, "screw diameter outside [2, 10] mm");
  }
  if (screw.length < 20.0 || screw.length > 100.0) {
    throw Error(ErrorCode::InvalidArgument, "screw length outside [20, 100] mm");
  }
}

double PedicleModel::radius_at(double s) const {
  const auto& k = radius_profile;
  if (s <= k.front().s) return k.front().radius;
  if (s >= k.back().s) return k.back().radius;
  for (std::size_t i = 1; i < k.size(); ++i) {
    if (s <= k[i].s) {
      const double f = (s - k[i - 1].s) / (k[i].s - k[i - 1].s);
      return k[i - 1].radius + f * (k[i].radius - k[i - 1].radius);
    }
  }
  return k.back().radius;
}

double PedicleModel::max_radius() const {
  double r = 0.0;
  for (const auto& k : radius_profile) r = std::max(r, k.radius);
  return r;
}

double PedicleModel::min_radius() const {
  double r = std::numeric_limits<double>::infinity();
  for (const auto& k : radius_profile) r = std::min(r, k.radius);
  return r;
}

void validate(const PedicleModel& pedicle) {
  const auto& k = pedicle.radius_profile;
  if (k.size() < 2 || k.front().s != 0.0 || k.back().s != 1.0) {
    throw Error(ErrorCode::InvalidArgument, "radius profile must run from s=0 to s=1");
  }
  for (std::size_t i = 0; i < k.size(); ++i) {
    if (!(k[i].radius > 0.0)) throw Error(ErrorCode::InvalidArgument, "corridor radius must be positive");
    if (i > 0 && !(k[i].s > k[i - 1].s)) {
      throw Error(ErrorCode::InvalidArgument, "radius profile s must increase strictly");
    }
  }
  if ((pedicle.p1 - pedicle.p0).norm() <= 0.0) {
    throw Error(ErrorCode::InvalidArgument, "pedicle axis has zero length");
  }
}

namespace {

// Distance between the infinite screw line and the pedicle segment (sampled, adequate as a gate).
double line_segment_gap(const ScrewPlan& screw, const PedicleModel& ped) {
  const Vec3 d = screw.direction;
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i <= 64; ++i) {
    const Vec3 p = ped.p0 + (ped.p1 - ped.p0) * (i / 64.0);
    const Vec3 w = p - screw.entry;
    best = std::min(best, (w - w.dot(d) * d).norm());
  }
  return best;
}

struct ShaftScan {
  bool spans = false;
  double worst_excess = -std::numeric_limits<double>::infinity();  // surface - corridor radius
};

ShaftScan scan_shaft(const ScrewPlan& screw, const PedicleModel& ped) {
  const Vec3 axis = ped.p1 - ped.p0;
  const double axis_len = axis.norm();
  const Vec3 u = axis / axis_len;
  const double screw_radius = 0.5 * screw.diameter;
  const int n = std::max(1, static_cast<int>(std::ceil(screw.length / kBreachSampleSpacingMm)));
  ShaftScan scan;
  for (int i = 0; i <= n; ++i) {
    const Vec3 c = screw.entry + screw.direction * (screw.length * i / n);
    const Vec3 w = c - ped.p0;
    const double along = w.dot(u);
    const double s = along / axis_len;
    if (s < 0.0 || s > 1.0) continue;
    scan.spans = true;
    const double radial = (w - along * u).norm();
    scan.worst_excess = std::max(scan.worst_excess, radial + screw_radius - ped.radius_at(s));
  }
  return scan;
}

}  // namespace

double breach_depth(const ScrewPlan& screw, const PedicleModel& pedicle) {
  validate(screw);
  validate(pedicle);
  const double gap = line_segment_gap(screw, pedicle);
  const ShaftScan scan = scan_shaft(screw, pedicle);
  if (gap > 3.0 * pedicle.max_radius() || !scan.spans) return gap + 0.5 * screw.diameter;
  return std::max(0.0, scan.worst_excess);
}

double min_clearance(const ScrewPlan& screw, const PedicleModel& pedicle) {
  validate(screw);
  validate(pedicle);
  const ShaftScan scan = scan_shaft(screw, pedicle);
  if (!scan.spans) return -(line_segment_gap(screw, pedicle) + 0.5 * screw.diameter);
  return -scan.worst_excess;
}

char to_char(GradeValue g) { return kGradeLetters[static_cast<std::size_t>(g)]; }

Grade grade_gertzbein(double breach_mm) {
  if (!(breach_mm >= 0.0)) throw Error(ErrorCode::NegativeBreach, "breach must be >= 0");
  GradeValue v = GradeValue::E;
  if (breach_mm == 0.0) {
    v = GradeValue::A;
  } else if (breach_mm < 2.0) {
    v = GradeValue::B;
  } else if (breach_mm < 4.0) {
    v = GradeValue::C;
  } else if (breach_mm < 6.0) {
    v = GradeValue::D;
  }
  return {v, breach_mm};
}

Deviation plan_deviation(const ScrewPlan& plan, const ScrewPlan& achieved) {
  if (plan.level != achieved.level) {
    throw Error(ErrorCode::LevelMismatch, "'" + plan.level + "' vs '" + achieved.level + "'");
  }
  Deviation d;
  d.entry_offset = (achieved.entry - plan.entry).norm();
  const double c = std::clamp(plan.direction.dot(achieved.direction), -1.0, 1.0);
  const double s = plan.direction.cross(achieved.direction).norm();
  d.angle_deg = std::atan2(s, c) * 180.0 / std::numbers::pi;
  d.tip_offset = (achieved.tip() - plan.tip()).norm();
  return d;
}

PlanVerdict validate_plan(const ScrewPlan& plan, const PedicleModel& pedicle, double safety_margin_mm) {
  const double breach = breach_depth(plan, pedicle);
  const double clearance = min_clearance(plan, pedicle);
  if (breach == 0.0 && clearance >= safety_margin_mm) return PlanAccepted{clearance};
  return PlanRejected{breach, clearance};
}

}  // namespace igss::plan
