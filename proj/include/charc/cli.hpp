#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace charc {

/// Entry point of the charc command. Returns the process exit code:
/// 0 success, 2 configuration error, 3 data error, 4 numerical failure.
int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err);

/// Same, with arguments excluding the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace charc
