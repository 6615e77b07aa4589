#pragma once

#include "igss/geom/transform.hpp"

#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace igss::plan {

using geom::Vec3;

/// Planned or achieved screw: a cylinder from `entry` along `direction`.
struct ScrewPlan {
  std::string level;  // e.g. "L3-left"
  Vec3 entry = Vec3::Zero();          // mm, patient frame
  Vec3 direction = Vec3::UnitZ();     // unit
  double diameter = 6.0;              // mm, in [2, 10]
  double length = 45.0;               // mm, in [20, 100]

  Vec3 tip() const { return entry + length * direction; }
};

/// Throws InvalidArgument when the direction is not unit or the size is out of range.
void validate(const ScrewPlan& screw);

struct RadiusKnot {
  double s = 0.0;       // fraction along the axis, 0..1
  double radius = 0.0;  // mm
};

/// Tapered circular corridor around a centerline segment; radius is linear between knots.
struct PedicleModel {
  std::string level;
  Vec3 p0 = Vec3::Zero();  // mm
  Vec3 p1 = Vec3::Zero();  // mm
  std::vector<RadiusKnot> radius_profile;

  double radius_at(double s) const;
  double max_radius() const;
  double min_radius() const;
};

void validate(const PedicleModel& pedicle);

/// Sample spacing along the screw shaft.
inline constexpr double kBreachSampleSpacingMm = 0.25;

/// Deepest penetration (mm, >= 0) of the screw surface through the corridor wall
/// over the in-pedicle portion of the shaft. A screw whose axis passes farther
/// than 3x the widest corridor radius, or that never spans the corridor, is
/// charged its full radial clearance.
double breach_depth(const ScrewPlan& screw, const PedicleModel& pedicle);

/// Smallest (corridor radius - screw surface distance) over the in-pedicle shaft; negative means breach.
double min_clearance(const ScrewPlan& screw, const PedicleModel& pedicle);

enum class GradeValue { A, B, C, D, E };

struct Grade {
  GradeValue value = GradeValue::A;
  double breach_mm = 0.0;
};

inline constexpr std::string_view kGradeLetters = "ABCDE";
char to_char(GradeValue g);

/// Gertzbein-Robbins: A no breach, B < 2 mm, C < 4 mm, D < 6 mm, E >= 6 mm.
/// A boundary value falls into the worse grade. Throws NegativeBreach.
Grade grade_gertzbein(double breach_mm);

struct Deviation {
  double entry_offset = 0.0;  // mm
  double angle_deg = 0.0;
  double tip_offset = 0.0;    // mm
};

/// Throws LevelMismatch.
Deviation plan_deviation(const ScrewPlan& plan, const ScrewPlan& achieved);

struct PlanAccepted {
  double clearance_mm;
};
struct PlanRejected {
  double breach_mm;
  double clearance_mm;
};
using PlanVerdict = std::variant<PlanAccepted, PlanRejected>;

/// Accepts iff the plan does not breach and keeps at least `safety_margin_mm` clearance.
PlanVerdict validate_plan(const ScrewPlan& plan, const PedicleModel& pedicle, double safety_margin_mm);

}  // namespace igss::plan
