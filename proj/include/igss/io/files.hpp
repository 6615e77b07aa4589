#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace igss::io {

/// Whole-file read. Throws IOFailure.
std::string read_file(const std::filesystem::path& path);

/// Writes to a sibling temporary file and renames it over `path`, so readers
/// see either the old content or the new content. Throws IOFailure.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

}  // namespace igss::io
