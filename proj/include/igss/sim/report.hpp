#pragma once

#include "igss/sim/study.hpp"

#include <cstdint>
#include <filesystem>
#include <string>

namespace igss::sim {

struct Provenance {
  std::string tool_version;
  std::uint64_t seed = 0;
  std::string config_hash;  // hex FNV-1a of the canonical config JSON
};

/// FNV-1a 64 of `text`, as 16 hex digits.
std::string fnv1a_hex(const std::string& text);
/// Hash of the canonical (sorted-key, compact) config JSON.
std::string config_hash(const StudyConfig& config);

/// Comment lines ("# key=value") placed at the top of every CSV.
std::string csv_header(const Provenance& p);

/// Columns: method, modality, n, mean_mm, sd_mm, ci95_mm (mean + 1.96 sd).
std::string table1_csv(const StudyResult& result, const Provenance& p);
/// Adds both CI readings, failures, per-cell stats and the pooled navigation row.
std::string table1_json(const StudyResult& result, const StudyConfig& config, const Provenance& p);

/// One row per grade A..E, one percentage column per arm.
std::string table2_csv(const PlacementResult& result, const Provenance& p);
std::string placement_json(const PlacementResult& result, const Provenance& p);

/// Writes table1.csv and table1.json into `out_dir` atomically.
/// Throws InvalidArgument on an empty result (nothing is written) or IOFailure.
void summarize(const StudyResult& result, const StudyConfig& config, const Provenance& p,
               const std::filesystem::path& out_dir);

}  // namespace igss::sim
