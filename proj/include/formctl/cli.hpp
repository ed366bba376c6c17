#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace formctl {

// Entry point of the formctl command line; args excludes the program name.
// Returns the process exit code.
int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err);

// Applies FORMCTL_LOG (trace, debug, info, warn, error, off) to the logger.
void configure_logging();

// Name of the active log level, e.g. "warning".
std::string log_level();

}  // namespace formctl
