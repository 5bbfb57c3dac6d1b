#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace fvsim {

// Exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitScenario = 3;
inline constexpr int kExitNotBroken = 4;

// Runs one CLI invocation. args excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace fvsim
