// commands.hpp
// The mclpbeam command-line tool: enhance, train-mask, simulate, eval.

#pragma once

namespace mclpbeam::cli {

enum ExitCode : int {
    kExitOk = 0,
    kExitInputError = 2,
    kExitNumericalFailure = 3,
};

// Parses argv and runs one subcommand. Diagnostics go to stderr and the
// optional --summary JSON line to stdout.
int Run(int argc, const char *const *argv);

}  // namespace mclpbeam::cli
