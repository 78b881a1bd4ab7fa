#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace spsiv::cli {

inline constexpr const char* kCodeVersion = "0.1.0";

/// Runs one `sps-iv` invocation. `args` excludes the program name.
/// Returns 0 on success, 2 on usage errors, 1 on runtime failures.
int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace spsiv::cli
