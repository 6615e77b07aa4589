#include "igss/sim/noise.hpp"

#include "igss/error.hpp"

#include <cmath>

namespace igss::sim {

NoiseModel NoiseModel::scaled(double k) const {
  NoiseModel n = *this;
  n.tracker_sigma0 *= k;
  n.detector_sigma *= k;
  n.kinematic_sigma *= k;
  return n;
}

void validate(const NoiseModel& n) {
  for (double v : {n.tracker_sigma0, n.depth_anisotropy, n.distance_ref, n.distance_growth, n.detector_sigma,
                   n.kinematic_sigma}) {
    if (!std::isfinite(v) || v < 0.0) throw Error(ErrorCode::InvalidArgument, "noise parameters must be finite and >= 0");
  }
}

double tracker_sigma_at(const NoiseModel& n, double d) {
  if (!(d > 0.0)) throw Error(ErrorCode::InvalidArgument, "tracker distance must be > 0");
  return std::max(0.0, n.tracker_sigma0 * (1.0 + n.distance_growth * (d - n.distance_ref)));
}

Vec3 sample_noisy_measurement(const NoiseModel& n, const Vec3& p, double d, const Vec3& view_axis, Rng& rng) {
  const double sigma = tracker_sigma_at(n, d);
  std::normal_distribution<double> g(0.0, 1.0);
  Vec3 e(g(rng), g(rng), g(rng));
  if (sigma == 0.0) return p;
  const double len = view_axis.norm();
  if (len > 0.0) {
    const Vec3 v = view_axis / len;
    e += (n.depth_anisotropy - 1.0) * e.dot(v) * v;
  }
  return p + sigma * e;
}

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> parts) {
  std::uint64_t h = mix64(base);
  for (auto p : parts) h = mix64(h ^ mix64(p + 0x632be59bd9b4e019ULL));
  return h;
}

}  // namespace igss::sim
