#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace texrd::cli {

enum ExitCode : int { kOk = 0, kValidation = 1, kPartial = 2, kIo = 3 };

/// Entry point shared by the executable and in-process callers. `args`
/// excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, char** argv);

}  // namespace texrd::cli
