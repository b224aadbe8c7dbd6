#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace difflab::cli {

enum ExitCode : int {
  kOk = 0,
  kFailure = 1,  // unexpected error, or a reproduction whose hashes differ
  kUsage = 2,
  kInputMissing = 3,
  kMismatch = 4,
  kNumeric = 5,
};

/// Runs one command line (without the program name). Never throws; errors
/// are written to `err` and mapped onto an ExitCode.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Output root used when a command gets no --out: $DIFFLAB_OUT, else "runs".
std::string default_output_root();

}  // namespace difflab::cli
