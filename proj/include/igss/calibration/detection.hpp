#pragma once

#include "igss/calibration/projection.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace igss::calib {

/// Synthetic fluoroscopy raster: Gaussian fiducial blobs on a zero background.
/// Pixel (col, row) has its centre at origin_mm + mm_per_pixel * (col, row).
struct SyntheticProjectionImage {
  View view = View::AP;
  int width = 0;
  int height = 0;
  double mm_per_pixel = 0.5;
  Vec2 origin_mm = Vec2::Zero();
  double blob_sigma_mm = 0.6;
  std::vector<float> pixels;  // row-major

  float at(int col, int row) const { return pixels[static_cast<std::size_t>(row) * width + col]; }
  Vec2 pixel_center(double col, double row) const {
    return origin_mm + mm_per_pixel * Vec2(col, row);
  }
};

struct RasterSpec {
  double half_extent_mm = 150.0;
  double mm_per_pixel = 0.5;
  double blob_sigma_mm = 0.6;
  double amplitude = 60000.0;
};

/// Renders a blob at each uv inside the detector; points off the detector are skipped.
SyntheticProjectionImage render_blobs(View view, const std::vector<Vec2>& uvs,
                                      const RasterSpec& spec = {});

/// Expected detector positions of the jig fiducials in one view.
struct JigPattern {
  std::vector<std::string> labels;
  std::vector<Vec2> uv;
};

JigPattern project_pattern(const ProjectionModel& model, const std::vector<LabeledPoint3>& jig);

inline constexpr double kPatternToleranceMm = 0.5;

/// Extracts intensity-weighted blob centroids and labels them by matching
/// pairwise distances against the pattern.
/// Throws TooFewBlobs (<3 usable blobs) or PatternAmbiguous (several labelings fit).
Detection2D detect_fiducials(const SyntheticProjectionImage& image, const JigPattern& pattern,
                             double tolerance_mm = kPatternToleranceMm);

/// Blob centroids only, in detector mm, ordered by (row, col) of each blob's peak.
/// Blobs whose windows overlap are fitted jointly with the known blob width.
std::vector<Vec2> extract_blob_centroids(const SyntheticProjectionImage& image);

/// 16-bit binary PGM (P5, big-endian) and its JSON sidecar.
void write_pgm16(std::ostream& out, const SyntheticProjectionImage& image);
SyntheticProjectionImage read_pgm16(std::istream& in);
std::string sidecar_json(const SyntheticProjectionImage& image);
void apply_sidecar(SyntheticProjectionImage& image, const std::string& json_text);

}  // namespace igss::calib
