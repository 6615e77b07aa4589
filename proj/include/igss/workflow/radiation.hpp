#pragma once

#include "igss/calibration/projection.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace igss::workflow {

enum class Purpose { Registration, Navigation, Verification };
std::string_view to_string(Purpose p);
Purpose parse_purpose(std::string_view s);

inline constexpr std::string_view kSessionSubject = "session";

/// One C-arm shot. `subject` is a screw id (e.g. "L3-left"), a vertebral level
/// ("L3"), or "session"; images are shared equally among the screws it covers.
struct AcquisitionEntry {
  std::string subject;
  Purpose purpose = Purpose::Verification;
  calib::View view = calib::View::AP;
  double timestamp_s = 0.0;

  bool operator==(const AcquisitionEntry&) const = default;
};

/// Append-only.
struct AcquisitionLog {
  std::vector<AcquisitionEntry> entries;
  bool operator==(const AcquisitionLog&) const = default;
};

/// Returns the log with `entry` appended; the input is untouched.
AcquisitionLog record_acquisition(const AcquisitionLog& log, AcquisitionEntry entry);

struct ScrewRef {
  std::string id;     // "L3-left"
  std::string level;  // "L3"
  bool operator==(const ScrewRef&) const = default;
};

struct RadiationRow {
  std::string level;
  std::string screw;
  double registration_images = 0.0;
  double navigation_images = 0.0;
  double verification_images = 0.0;
  double total = 0.0;
};

struct RadiationReport {
  std::vector<RadiationRow> rows;
  double mean_per_screw = 0.0;  // 0 when there are no screws
  double unattributed = 0.0;    // shots whose subject matches no screw
};

RadiationReport radiation_report(const AcquisitionLog& log, const std::vector<ScrewRef>& screws);

/// CSV: level,screw,registration_images,verification_images,total (navigation
/// shots count toward total only).
std::string radiation_csv(const RadiationReport& report);

/// Shots taken per session. Registration pairs apply only to the intra-op 2D modality.
struct AcquisitionPolicy {
  int registration_pairs_per_level = 1;
  int verification_pairs_per_screw = 1;
  int navigation_images_per_screw = 0;
};

}  // namespace igss::workflow
