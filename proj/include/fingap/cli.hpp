#pragma once

// Command-line front end. Every subcommand reads a JSON config, computes all
// results in memory and only then writes its JSON report and CSV table(s)
// into the output directory, so a failing run leaves no partial files.
//
// Exit codes: 0 success, 1 invariant violation (or a numerical failure that
// prevents a certified answer), 2 bad input, 3 missing config or upstream file.

#include <iosfwd>

namespace fingap {

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int run_cli(int argc, const char* const* argv);

}  // namespace fingap
