#include "igss/sim/report.hpp"

#include "igss/error.hpp"
#include "igss/io/files.hpp"

#include <fmt/format.h>

namespace igss::sim {

namespace {

using Json = nlohmann::json;

Json stats_json(const StudyStats& s) {
  return {{"n", s.n},
          {"mean_mm", s.mean},
          {"sd_mm", s.sd},
          {"ci_mu_plus_1sigma_mm", s.ci_mu_plus_1sigma},
          {"ci95_mu_plus_1p96sigma_mm", s.ci95}};
}

Json provenance_json(const Provenance& p) {
  return {{"tool_version", p.tool_version}, {"seed", p.seed}, {"config_hash", p.config_hash}};
}

}  // namespace

std::string fnv1a_hex(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return fmt::format("{:016x}", h);
}

std::string config_hash(const StudyConfig& config) { return fnv1a_hex(to_json(config).dump()); }

std::string csv_header(const Provenance& p) {
  return fmt::format("# tool_version={}\n# seed={}\n# config_hash={}\n", p.tool_version, p.seed, p.config_hash);
}

std::string table1_csv(const StudyResult& result, const Provenance& p) {
  std::string out = csv_header(p) + "method,modality,n,mean_mm,sd_mm,ci95_mm\n";
  for (const auto& m : result.methods) {
    out += fmt::format("{},{},{},{:.6f},{:.6f},{:.6f}\n", m.method.name, workflow::to_string(m.method.modality),
                       m.pooled.n, m.pooled.mean, m.pooled.sd, m.pooled.ci95);
  }
  return out;
}

std::string table1_json(const StudyResult& result, const StudyConfig& config, const Provenance& p) {
  Json methods = Json::array();
  for (const auto& m : result.methods) {
    Json cells = Json::array();
    for (std::size_t c = 0; c < m.per_cell.size(); ++c) {
      const CellValues v = cell_values(config.factors, c);
      Json cell = stats_json(m.per_cell[c]);
      cell["user_multiplier"] = v.user_multiplier;
      cell["tool_angle_deg"] = v.tool_angle_deg;
      cell["tracker_distance_mm"] = v.tracker_distance_mm;
      cell["detector_distance_mm"] = v.detector_distance_mm;
      cells.push_back(cell);
    }
    Json row = stats_json(m.pooled);
    row["method"] = m.method.name;
    row["modality"] = std::string(workflow::to_string(m.method.modality));
    row["robot_assisted"] = m.method.robot_assisted;
    row["failed"] = m.failed;
    row["cells"] = cells;
    methods.push_back(row);
  }
  Json j = {{"provenance", provenance_json(p)},
            {"samples_per_method", config.samples_per_method},
            {"methods", methods},
            {"navigation_pooled", stats_json(result.navigation_pooled)},
            {"failed_trials", result.failed()},
            {"total_trials", result.trials.size()}};
  return j.dump(2) + "\n";
}

std::string table2_csv(const PlacementResult& result, const Provenance& p) {
  std::string out = csv_header(p) + "grade";
  for (const auto& a : result.arms) out += "," + a.method.name + "_pct";
  out += "\n";
  for (std::size_t g = 0; g < 5; ++g) {
    out += plan::kGradeLetters[g];
    for (const auto& a : result.arms) {
      std::size_t ok = 0;
      for (auto c : a.grade_counts) ok += c;
      const double pct = ok == 0 ? 0.0 : 100.0 * static_cast<double>(a.grade_counts[g]) / static_cast<double>(ok);
      out += fmt::format(",{:.2f}", pct);
    }
    out += "\n";
  }
  return out;
}

std::string placement_json(const PlacementResult& result, const Provenance& p) {
  Json arms = Json::array();
  for (const auto& a : result.arms) {
    Json grades = Json::object();
    for (std::size_t g = 0; g < 5; ++g) grades[std::string(1, plan::kGradeLetters[g])] = a.grade_counts[g];
    Json screws = Json::array();
    for (const auto& s : a.screws) {
      Json row = {{"screw", s.screw}, {"level", s.level}, {"ok", s.ok}};
      if (s.ok) {
        row["breach_mm"] = s.breach_mm;
        row["grade"] = std::string(1, plan::to_char(s.grade));
      } else {
        row["error"] = s.error;
      }
      screws.push_back(row);
    }
    arms.push_back({{"method", a.method.name},
                    {"modality", std::string(workflow::to_string(a.method.modality))},
                    {"robot_assisted", a.method.robot_assisted},
                    {"grade_counts", grades},
                    {"failed", a.failed},
                    {"radiation_mean_per_screw", a.radiation.mean_per_screw},
                    {"screws", screws}});
  }
  Json j = {{"provenance", provenance_json(p)}, {"arms", arms}};
  return j.dump(2) + "\n";
}

void summarize(const StudyResult& result, const StudyConfig& config, const Provenance& p,
               const std::filesystem::path& out_dir) {
  if (result.trials.empty() || result.methods.empty()) {
    throw Error(ErrorCode::InvalidArgument, "no study results to summarize");
  }
  const std::string csv = table1_csv(result, p);
  const std::string json = table1_json(result, config, p);
  io::write_file_atomic(out_dir / "table1.csv", csv);
  io::write_file_atomic(out_dir / "table1.json", json);
}

}  // namespace igss::sim
