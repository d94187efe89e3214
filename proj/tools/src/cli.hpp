#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace limescope::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitDomain = 1;
inline constexpr int kExitUsage = 2;

/// Runs one subcommand. `args` excludes the program name. Usage errors and
/// domain errors are reported on `err` as a single JSON line.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// --threads when positive, else LIMESCOPE_THREADS, else hardware concurrency.
/// Throws std::invalid_argument on a malformed environment value.
int resolve_threads(int flag);

}  // namespace limescope::cli
