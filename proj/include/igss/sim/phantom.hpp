#pragma once

#include "igss/planning/screw.hpp"
#include "igss/registration/fiducials.hpp"
#include "igss/registration/surface.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace igss::sim {

using geom::Vec3;

/// Patient frame: x to the patient's left, y anterior, z cranial; the spine
/// runs along z through the origin.
struct PhantomSpec {
  std::vector<std::string> levels = {"L1", "L2", "L3", "L4", "L5"};
  int fiducial_count = 6;
  double extent_mm = 120.0;  // craniocaudal span of the registration fiducials
  bool operator==(const PhantomSpec&) const = default;
};

inline constexpr double kLevelSpacingMm = 35.0;
inline constexpr double kMinWaistRadiusMm = 2.0;
inline constexpr double kMaxWaistRadiusMm = 4.5;
inline constexpr double kMinFiducialSeparationMm = 15.0;

struct Phantom {
  reg::FiducialSet fiducials;  // skin/bone markers for point-based registration
  reg::SurfaceModel surface;   // vertebral bodies and spinous processes
  std::vector<plan::PedicleModel> pedicles;  // "<level>-left", "<level>-right"
  reg::FiducialSet targets;    // held-out verification targets at the pedicle waists
  reg::FiducialSet jig;        // radiopaque markers of the tracked jig, patient frame
  reg::FiducialSet jig_array;  // optical markers that carry the jig pose to the tracker
};

/// Deterministic in (spec, seed). Throws DegenerateSpec.
Phantom generate_phantom(const PhantomSpec& spec, std::uint64_t seed);

/// Vertebral level of a pedicle or screw id: "L3-left" -> "L3".
std::string level_of(const std::string& id);

}  // namespace igss::sim
