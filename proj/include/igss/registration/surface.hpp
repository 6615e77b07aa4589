#pragma once

#include "igss/geom/frame_graph.hpp"

#include <array>
#include <iosfwd>
#include <string>
#include <vector>

namespace igss::reg {

using geom::Vec3;

/// Triangle mesh in one frame. Indices are in range and no triangle is degenerate.
struct SurfaceModel {
  geom::Frame frame = geom::Frame::PreOpImage;
  std::vector<Vec3> vertices;                    // mm
  std::vector<std::array<int, 3>> triangles;
};

/// Minimum triangle area (mm^2) accepted by validate().
inline constexpr double kMinTriangleArea = 1e-12;

void validate(const SurfaceModel& surface);

struct ClosestPoint {
  Vec3 point;
  Vec3 normal;  // unit face normal of the triangle hit
  double distance = 0.0;
  std::size_t triangle = 0;
};

Vec3 closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c);

/// Exhaustive point-to-mesh query; cached per-triangle bounds prune the scan.
class SurfaceIndex {
 public:
  explicit SurfaceIndex(const SurfaceModel& surface);
  ClosestPoint closest(const Vec3& p) const;

 private:
  struct Tri {
    Vec3 a, b, c, normal, center;
    double radius;
  };
  std::vector<Tri> tris_;
};

/// ASCII STL. The solid name is ignored on read; shared vertices are not merged.
SurfaceModel read_stl_ascii(std::istream& in, geom::Frame frame);
void write_stl_ascii(std::ostream& out, const SurfaceModel& surface,
                     const std::string& solid_name = "surface");

}  // namespace igss::reg
