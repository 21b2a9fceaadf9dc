#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace dnt::cli {

inline constexpr const char* kToolVersion = "0.3.0";

/// Exit codes: 0 success, 1 runtime failure, 2 usage or configuration error.
inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

/// Runs the `dntlab` command line. `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace dnt::cli
