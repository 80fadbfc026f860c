#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace advlab {

// Exit codes: 0 success, 1 usage error, 2 data/config error,
// 3 oracle-check found a dominance violation.
int run_cli(int argc, char** argv);
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace advlab
