#pragma once

#include <iosfwd>

namespace fairl {

/// Command-line entry point. Results go to `out` (or files under --out),
/// diagnostics to `err`. Returns the process exit code.
int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace fairl
