#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace grnr::cli {

// Process exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitIo = 3;
inline constexpr int kExitBackend = 4;
inline constexpr int kExitDataset = 5;

/// Runs the tool on `args` (args[0] is the program name). All output goes
/// to `out` and `err`; nothing touches the process streams.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace grnr::cli
