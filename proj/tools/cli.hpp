#pragma once

#include <iosfwd>

namespace qnpg::cli {

/// Process exit codes. These are a stable contract.
enum ExitCode : int {
  kOk = 0,
  kUsage = 2,
  kMaxIters = 3,
  kNumeric = 4,
  kInsufficientData = 5,
};

/// Runs one `qnpg` command line. Normal output goes to `out`, warnings and
/// errors to `err`.
int run(int argc, const char* const* argv, std::ostream& out,
        std::ostream& err);

}  // namespace qnpg::cli
