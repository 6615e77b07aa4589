#include "igss/workflow/persistence.hpp"

#include "igss/error.hpp"
#include "igss/io/files.hpp"
#include "igss/io/json.hpp"

#include <sstream>

namespace igss::workflow {

std::string session_json(const SessionState& state) {
  io::Json j = {{"schema_version", kSessionSchemaVersion}, {"session", io::to_json(state)}};
  return j.dump(2) + "\n";
}

SessionState session_from_json(const std::string& text) {
  const io::Json j = io::parse(text);
  if (!j.is_object() || !j.contains("schema_version") || !j["schema_version"].is_number_integer()) {
    throw Error(ErrorCode::SchemaVersionMismatch, "session file has no schema_version");
  }
  const int version = j["schema_version"].get<int>();
  if (version != kSessionSchemaVersion) {
    throw Error(ErrorCode::SchemaVersionMismatch,
                "schema_version " + std::to_string(version) + ", expected " + std::to_string(kSessionSchemaVersion));
  }
  if (!j.contains("session")) throw Error(ErrorCode::ParseError, "missing 'session'");
  return io::from_json<SessionState>(j["session"]);
}

void save_session(const std::filesystem::path& path, const SessionState& state) {
  io::write_file_atomic(path, session_json(state));
}

SessionState load_session(const std::filesystem::path& path) { return session_from_json(io::read_file(path)); }

std::string trace_jsonl(const std::vector<TraceRecord>& trace) {
  std::string out;
  for (const auto& r : trace) out += io::to_json(r).dump() + "\n";
  return out;
}

std::vector<TraceRecord> parse_trace_jsonl(const std::string& text) {
  std::vector<TraceRecord> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    out.push_back(io::from_json<TraceRecord>(io::parse(line)));
  }
  return out;
}

}  // namespace igss::workflow
