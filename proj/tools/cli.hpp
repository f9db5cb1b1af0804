#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace greenspoof::cli {

enum ExitCode : int { kOk = 0, kUsage = 2, kData = 3, kRuntime = 4 };

inline constexpr const char* kVersion = "1.0.0";

/// Runs one command line (args[0] is the program name). Output and
/// diagnostics go to the given streams.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace greenspoof::cli
