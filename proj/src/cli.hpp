#pragma once

#include <ostream>

namespace ltpi {

inline constexpr const char* kVersion = "0.1.0";

// Exit codes: 0 success, 2 usage error, 3 data or feasibility error.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace ltpi
