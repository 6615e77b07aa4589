#pragma once

#include "igss/geom/frame_graph.hpp"

#include <Eigen/Dense>

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace igss::calib {

using geom::Vec3;
using Vec2 = Eigen::Vector2d;
using Mat34 = Eigen::Matrix<double, 3, 4>;

enum class View { AP, LP };

std::string_view to_string(View v);
View parse_view(std::string_view name);

/// 3x4 projective map from homogeneous CArm-frame mm to homogeneous detector mm.
struct ProjectionModel {
  Mat34 matrix = Mat34::Zero();
  View view = View::AP;
  geom::Frame frame = geom::Frame::CArm;
};

/// Rescales so the third row's leading 3-vector has unit norm, with positive
/// depth along the viewing direction. Throws DegenerateGeometry unless rank 3.
ProjectionModel normalized(const ProjectionModel& model);

/// Perspective division of P [p; 1]. Throws PointAtInfinity when |w| <= 1e-9.
Vec2 project(const ProjectionModel& model, const Vec3& p);

/// Camera (X-ray source) position: the right null vector of P.
Vec3 camera_center(const ProjectionModel& model);
/// Unit direction of the back-projected ray through detector point uv.
Vec3 back_projection_direction(const ProjectionModel& model, const Vec2& uv);

/// Ideal isocentric C-arm. The beam rotates about the CArm z axis; gantry_angle 0
/// places the source at -y (AP), pi/2 at +x (LP). Principal point is (0, 0).
struct CArmGeometry {
  double gantry_angle_rad = 0.0;
  double source_to_detector_mm = 1000.0;
  double source_to_iso_mm = 600.0;
};

ProjectionModel pinhole_view(View view, const CArmGeometry& geometry);
/// Rotation whose rows are the camera axes (x, y, z = beam) in CArm coordinates.
geom::Mat3 camera_axes(const CArmGeometry& geometry);
/// Source position in CArm coordinates.
Vec3 source_position(const CArmGeometry& geometry);

struct LabeledPoint3 {
  std::string label;
  Vec3 position;
};

struct Detection {
  std::string label;
  Vec2 uv;  // detector mm
  double confidence = 1.0;
};

/// Labeled 2D detections for one view. Labels are unique; confidence in [0, 1].
struct Detection2D {
  View view = View::AP;
  std::vector<Detection> points;
  std::vector<std::string> missing_labels;  // pattern labels with no blob
  std::vector<Vec2> unmatched;              // blobs dropped with confidence 0

  const Detection* find(const std::string& label) const;
};

void validate(const Detection2D& d);

struct DltResult {
  ProjectionModel model;
  double reprojection_rms = 0.0;  // detector mm
  std::size_t n_points = 0;
};

inline constexpr std::size_t kMinDltPoints = 6;
inline constexpr double kCoplanarityRatio = 1e-6;

/// Direct linear transform (11 dof, Hartley-normalized) from labeled world points to
/// detections of the same labels. Throws TooFewPoints or CoplanarPoints.
DltResult dlt_calibrate(std::span<const LabeledPoint3> world, const Detection2D& image);

}  // namespace igss::calib
