#pragma once

// Command-line front end. Exit codes: 0 ok, 2 I/O, 3 config, 4 runtime abort,
// 5 stage-order violation.

#include <iosfwd>

namespace promptevo::cli {

enum ExitCode : int {
  kOk = 0,
  kIoError = 2,
  kConfigError = 3,
  kRuntimeAbort = 4,
  kStageOrder = 5,
};

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace promptevo::cli
