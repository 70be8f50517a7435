#pragma once

#include <iosfwd>

namespace fdaguard {

/// Runs the command line. Returns 0 on success, 2 for invalid input or
/// configuration, 1 for internal failures.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace fdaguard
