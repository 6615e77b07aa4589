#pragma once

#include "igss/workflow/session.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace igss::workflow {

inline constexpr int kSessionSchemaVersion = 1;

/// Atomic write of {"schema_version", "session"}. Throws IOFailure.
void save_session(const std::filesystem::path& path, const SessionState& state);

/// Throws IOFailure, ParseError, or SchemaVersionMismatch. Never returns a partial state.
SessionState load_session(const std::filesystem::path& path);

std::string session_json(const SessionState& state);
SessionState session_from_json(const std::string& text);

/// One JSON object per line; parsing skips blank lines and '#' comment lines.
std::string trace_jsonl(const std::vector<TraceRecord>& trace);
std::vector<TraceRecord> parse_trace_jsonl(const std::string& text);

}  // namespace igss::workflow
