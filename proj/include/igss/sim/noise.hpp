#pragma once

#include "igss/geom/transform.hpp"

#include <cstdint>
#include <initializer_list>
#include <random>

namespace igss::sim {

using geom::Vec3;
using Rng = std::mt19937_64;

struct NoiseModel {
  double tracker_sigma0 = 0.19;     // mm per axis at distance_ref
  double depth_anisotropy = 3.0;    // factor on the viewing-axis component
  double distance_ref = 1000.0;     // mm
  double distance_growth = 5e-4;    // per mm beyond distance_ref
  double detector_sigma = 0.25;     // mm on the detector
  double kinematic_sigma = 0.45;    // mm per axis at the robot tool
  std::uint64_t seed = 20240611;

  /// All three sigmas multiplied by k.
  NoiseModel scaled(double k) const;
  bool operator==(const NoiseModel&) const = default;
};

/// Throws InvalidArgument on negative or non-finite parameters.
void validate(const NoiseModel& noise);

/// sigma(d) = tracker_sigma0 * (1 + distance_growth * (d - distance_ref)), floored at 0.
double tracker_sigma_at(const NoiseModel& noise, double distance_mm);

/// Per-axis Gaussian tracker noise; the component along `view_axis` is
/// scaled by depth_anisotropy.
Vec3 sample_noisy_measurement(const NoiseModel& noise, const Vec3& true_point, double distance_mm,
                              const Vec3& view_axis, Rng& rng);

/// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x);
/// Order-sensitive combination of a base seed with stream identifiers.
std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> parts);

}  // namespace igss::sim
