#pragma once

// Command-line front end. Exit codes: 0 pass, 1 verification failed,
// 2 malformed input, 3 numerical failure (report carries the failing point).

#include <iosfwd>

namespace obata::cli {

inline constexpr const char* kToolVersion = "1.0.0";

int run(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace obata::cli
