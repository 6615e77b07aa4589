#include "igss/workflow/radiation.hpp"

#include "igss/error.hpp"

#include <fmt/format.h>

namespace igss::workflow {

std::string_view to_string(Purpose p) {
  switch (p) {
    case Purpose::Registration: return "Registration";
    case Purpose::Navigation: return "Navigation";
    case Purpose::Verification: return "Verification";
  }
  return "?";
}

Purpose parse_purpose(std::string_view s) {
  if (s == "Registration") return Purpose::Registration;
  if (s == "Navigation") return Purpose::Navigation;
  if (s == "Verification") return Purpose::Verification;
  throw Error(ErrorCode::ParseError, "unknown acquisition purpose '" + std::string(s) + "'");
}

AcquisitionLog record_acquisition(const AcquisitionLog& log, AcquisitionEntry entry) {
  if (entry.subject.empty()) throw Error(ErrorCode::InvalidArgument, "acquisition needs a subject");
  AcquisitionLog out = log;
  out.entries.push_back(std::move(entry));
  return out;
}

RadiationReport radiation_report(const AcquisitionLog& log, const std::vector<ScrewRef>& screws) {
  RadiationReport report;
  if (screws.empty()) {
    report.unattributed = static_cast<double>(log.entries.size());
    return report;
  }
  for (const auto& s : screws) report.rows.push_back({s.level, s.id, 0.0, 0.0, 0.0, 0.0});

  for (const auto& e : log.entries) {
    std::vector<std::size_t> covered;
    for (std::size_t i = 0; i < screws.size(); ++i) {
      if (e.subject == kSessionSubject || e.subject == screws[i].id || e.subject == screws[i].level) {
        covered.push_back(i);
      }
    }
    if (covered.empty()) {
      report.unattributed += 1.0;
      continue;
    }
    const double share = 1.0 / static_cast<double>(covered.size());
    for (std::size_t i : covered) {
      auto& row = report.rows[i];
      switch (e.purpose) {
        case Purpose::Registration: row.registration_images += share; break;
        case Purpose::Navigation: row.navigation_images += share; break;
        case Purpose::Verification: row.verification_images += share; break;
      }
      row.total += share;
    }
  }
  double sum = 0.0;
  for (const auto& r : report.rows) sum += r.total;
  report.mean_per_screw = sum / static_cast<double>(screws.size());
  return report;
}

std::string radiation_csv(const RadiationReport& report) {
  std::string out = "level,screw,registration_images,verification_images,total\n";
  for (const auto& r : report.rows) {
    out += fmt::format("{},{},{:.4f},{:.4f},{:.4f}\n", r.level, r.screw, r.registration_images,
                       r.verification_images, r.total);
  }
  return out;
}

}  // namespace igss::workflow
