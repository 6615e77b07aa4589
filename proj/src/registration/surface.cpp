#include "igss/registration/surface.hpp"

#include "igss/error.hpp"

#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

namespace igss::reg {

void validate(const SurfaceModel& surface) {
  const auto nv = static_cast<int>(surface.vertices.size());
  if (surface.triangles.empty()) throw Error(ErrorCode::InvalidArgument, "surface has no triangles");
  for (const auto& v : surface.vertices) {
    if (!v.allFinite()) throw Error(ErrorCode::InvalidArgument, "non-finite vertex");
  }
  for (std::size_t i = 0; i < surface.triangles.size(); ++i) {
    const auto& t = surface.triangles[i];
    for (int idx : t) {
      if (idx < 0 || idx >= nv) {
        throw Error(ErrorCode::InvalidArgument, "triangle " + std::to_string(i) + " index out of range");
      }
    }
    const Vec3& a = surface.vertices[t[0]];
    const double area = 0.5 * (surface.vertices[t[1]] - a).cross(surface.vertices[t[2]] - a).norm();
    if (area < kMinTriangleArea) {
      throw Error(ErrorCode::InvalidArgument, "triangle " + std::to_string(i) + " is degenerate");
    }
  }
}

// Region-based closest point (Ericson, Real-Time Collision Detection 5.1.5).
Vec3 closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
  const Vec3 ab = b - a;
  const Vec3 ac = c - a;
  const Vec3 ap = p - a;
  const double d1 = ab.dot(ap);
  const double d2 = ac.dot(ap);
  if (d1 <= 0.0 && d2 <= 0.0) return a;

  const Vec3 bp = p - b;
  const double d3 = ab.dot(bp);
  const double d4 = ac.dot(bp);
  if (d3 >= 0.0 && d4 <= d3) return b;

  const double vc = d1 * d4 - d3 * d2;
  if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) return a + ab * (d1 / (d1 - d3));

  const Vec3 cp = p - c;
  const double d5 = ab.dot(cp);
  const double d6 = ac.dot(cp);
  if (d6 >= 0.0 && d5 <= d6) return c;

  const double vb = d5 * d2 - d1 * d6;
  if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) return a + ac * (d2 / (d2 - d6));

  const double va = d3 * d6 - d5 * d4;
  if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0) {
    return b + (c - b) * ((d4 - d3) / ((d4 - d3) + (d5 - d6)));
  }

  const double denom = 1.0 / (va + vb + vc);
  return a + ab * (vb * denom) + ac * (vc * denom);
}

SurfaceIndex::SurfaceIndex(const SurfaceModel& surface) {
  validate(surface);
  tris_.reserve(surface.triangles.size());
  for (const auto& t : surface.triangles) {
    Tri tri;
    tri.a = surface.vertices[t[0]];
    tri.b = surface.vertices[t[1]];
    tri.c = surface.vertices[t[2]];
    tri.normal = (tri.b - tri.a).cross(tri.c - tri.a).normalized();
    tri.center = (tri.a + tri.b + tri.c) / 3.0;
    tri.radius = std::max({(tri.a - tri.center).norm(), (tri.b - tri.center).norm(),
                           (tri.c - tri.center).norm()});
    tris_.push_back(tri);
  }
}

ClosestPoint SurfaceIndex::closest(const Vec3& p) const {
  ClosestPoint best;
  double best_sq = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < tris_.size(); ++i) {
    const Tri& t = tris_[i];
    const double lower = (p - t.center).norm() - t.radius;
    if (lower > 0.0 && lower * lower >= best_sq) continue;
    const Vec3 q = closest_point_on_triangle(p, t.a, t.b, t.c);
    const double d_sq = (p - q).squaredNorm();
    if (d_sq < best_sq) {
      best_sq = d_sq;
      best.point = q;
      best.normal = t.normal;
      best.triangle = i;
    }
  }
  best.distance = std::sqrt(best_sq);
  return best;
}

SurfaceModel read_stl_ascii(std::istream& in, geom::Frame frame) {
  SurfaceModel out;
  out.frame = frame;
  std::string token;
  if (!(in >> token) || token != "solid") {
    throw Error(ErrorCode::ParseError, "ASCII STL must start with 'solid'");
  }
  std::string line;
  std::getline(in, line);
  std::vector<Vec3> facet;
  while (in >> token) {
    if (token == "vertex") {
      Vec3 v;
      if (!(in >> v.x() >> v.y() >> v.z())) throw Error(ErrorCode::ParseError, "bad vertex line");
      facet.push_back(v);
    } else if (token == "endloop") {
      if (facet.size() != 3) throw Error(ErrorCode::ParseError, "facet without 3 vertices");
      const int base = static_cast<int>(out.vertices.size());
      out.vertices.insert(out.vertices.end(), facet.begin(), facet.end());
      out.triangles.push_back({base, base + 1, base + 2});
      facet.clear();
    } else if (token == "endsolid") {
      break;
    }
  }
  validate(out);
  return out;
}

void write_stl_ascii(std::ostream& out, const SurfaceModel& surface, const std::string& solid_name) {
  validate(surface);
  std::ostringstream buf;
  buf.precision(17);
  buf << "solid " << solid_name << "\n";
  for (const auto& t : surface.triangles) {
    const Vec3& a = surface.vertices[t[0]];
    const Vec3& b = surface.vertices[t[1]];
    const Vec3& c = surface.vertices[t[2]];
    const Vec3 n = (b - a).cross(c - a).normalized();
    buf << "  facet normal " << n.x() << ' ' << n.y() << ' ' << n.z() << "\n    outer loop\n";
    for (const Vec3* v : {&a, &b, &c}) {
      buf << "      vertex " << v->x() << ' ' << v->y() << ' ' << v->z() << "\n";
    }
    buf << "    endloop\n  endfacet\n";
  }
  buf << "endsolid " << solid_name << "\n";
  out << buf.str();
}

}  // namespace igss::reg
