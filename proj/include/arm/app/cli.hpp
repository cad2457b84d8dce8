#pragma once

#include <iosfwd>

namespace arm::app {

// The `arm` command line. Returns the process exit code.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace arm::app
