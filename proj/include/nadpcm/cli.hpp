#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace nadpcm::cli {

enum ExitCode : int {
  kOk = 0,
  kUsageError = 1,
  kIoError = 2,
  kMalformedBitstream = 3,
};

/// Runs one invocation. args excludes the program name. "-" as a path means
/// standard input/output (in/out streams below).
int run(const std::vector<std::string>& args, std::istream& in, std::ostream& out,
        std::ostream& err);

}  // namespace nadpcm::cli
