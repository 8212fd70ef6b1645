#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace treemart::cli {

/// Exit codes.
constexpr int kOk = 0;
constexpr int kValidationError = 1;
constexpr int kCheckFailed = 2;

/// Entry point for the treemart executable.
int run(int argc, char** argv);

/// Same as above with explicit streams; args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace treemart::cli
