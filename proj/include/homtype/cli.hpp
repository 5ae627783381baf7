#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace homtype::cli {

enum ExitCode : int {
  kOk = 0,
  kRuntimeError = 1,
  kValidationFailure = 2,
  kCertificationFailure = 3,
};

/// Entry point of the `homtype` executable. Diagnostics go to `err`,
/// printed results (norm values, summaries) to `out`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, char** argv);

}  // namespace homtype::cli
