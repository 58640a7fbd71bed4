#pragma once

#include <iosfwd>

namespace ldsc::cli {

/// Exit codes: 0 success, 1 usage error, 2 data, parse or IO error,
/// 3 numeric or degenerate input. Errors print one line to `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace ldsc::cli
