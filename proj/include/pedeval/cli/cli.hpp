#pragma once

#include <ostream>
#include <span>
#include <string>

namespace pedeval::cli {

// Runs one command line (args excludes the program name). Errors are
// reported on `err` as a single "error[<category>]: <detail>" line and give
// a nonzero status. No output file is written unless every input loaded.
int run(std::span<const std::string> args, std::ostream& out, std::ostream& err);

// Same, for main().
int run_main(int argc, char** argv);

}  // namespace pedeval::cli
