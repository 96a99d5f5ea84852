#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace ddkit::cli {

// Runs one ddkit invocation. args[0] is the program name. Reports go to
// `out`, diagnostics to `err`. Exit codes: 0 ok, 1 validation, 2 IO,
// 3 numerical failure.
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace ddkit::cli
