#pragma once

#include <ostream>

namespace penscore::cli {

// Runs one command line. Data goes to `out` or files, diagnostics to `err`.
// Returns the process exit code.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace penscore::cli
