#pragma once

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace bipipe::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;       // bad input file, infeasible mapping, ...
inline constexpr int kExitUsage = 2;       // command-line parse failure
inline constexpr int kExitValidation = 3;  // a mapping, simulation or update check failed

// Runs the `bipipe` command line; `args` excludes the program name.
// Output files go to --out-dir, else $BIPIPE_OUT_DIR, else the working
// directory. `--config FILE` supplies key=value defaults for any long option
// of the chosen subcommand; flags given on the command line win.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// key=value lines; `#` starts a comment; keys may carry leading dashes.
std::vector<std::pair<std::string, std::string>> read_config(const std::string& path);

}  // namespace bipipe::cli
