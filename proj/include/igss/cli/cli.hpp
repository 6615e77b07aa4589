#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace igss::cli {

inline constexpr std::uint64_t kDefaultSeed = 20240611;

enum ExitCode : int {
  kOk = 0,
  kUnexpected = 1,
  kBadInput = 2,
  kNumericalFailure = 3,
  kTooManyFailures = 4,
};

/// Runs one command line (without the program name). Reports go to --out;
/// errors go to `err` as one JSON object per line.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Exit code for an error code name, per the 0/2/3/4 contract.
int exit_code_for(const std::string& error_code);

}  // namespace igss::cli
