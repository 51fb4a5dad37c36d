#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace grinn {

/// Entry point behind the `grinn` executable. `args` excludes the program
/// name. Returns the process exit status; failures print one line
///   error kind=<kind> module=<module> message="<text>"
/// to `err`.
int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace grinn
