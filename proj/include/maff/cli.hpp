#ifndef MAFF_CLI_HPP
#define MAFF_CLI_HPP

#include <string>
#include <vector>

namespace maff::cli {

// Exit codes shared by every subcommand.
constexpr int kOk = 0;
constexpr int kUsage = 2;      // unknown flags, bad flag values
constexpr int kIo = 3;         // missing or malformed files
constexpr int kConfig = 4;     // structurally valid but infeasible settings
constexpr int kNumerical = 5;  // estimation failed

// Entry point: parses argv, runs one subcommand, reports errors on stderr.
int run(int argc, const char *const *argv);

// Convenience overload for tests: args excludes the program name.
int run(const std::vector<std::string> &args);

}  // namespace maff::cli

#endif
