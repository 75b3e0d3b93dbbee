#pragma once

#include <string>
#include <vector>

namespace lt3lssl::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitRuntime = 2;

// Runs the command line `args` (args[0] is the program name).
int run(const std::vector<std::string>& args);

}  // namespace lt3lssl::cli
