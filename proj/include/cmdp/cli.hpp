#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace cmdp {

inline constexpr const char* kToolVersion = "0.1.0";

// Exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitNumerical = 3;
inline constexpr int kExitCheckFailed = 4;

// Runs one subcommand. `args` excludes the program name. Every run that
// completes writes its data files plus manifest.json into --out.
int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err);

// "0..9", "1,4,7" or a single integer.
std::vector<std::uint64_t> parse_seed_list(const std::string& text);

// "log:lo:hi:n", "lin:lo:hi:n" or a comma separated list of magnitudes.
std::vector<double> parse_grid(const std::string& text);

}  // namespace cmdp
