#ifndef TOPVIEW_TOOLS_CLI_HPP
#define TOPVIEW_TOOLS_CLI_HPP

#include <iosfwd>
#include <string>
#include <vector>

namespace topview::cli {

/// Process exit codes.
enum ExitCode : int {
  kOk = 0,
  kEstimationFailure = 2,
  kSchemaError = 3,
  kReferenceError = 4,
};

/// Runs the `topview` command line. args[0] is the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace topview::cli

#endif  // TOPVIEW_TOOLS_CLI_HPP
