#pragma once

#include "structrag/config.hpp"

#include <ostream>
#include <string_view>

namespace structrag::cli {

inline constexpr std::string_view kVersion = "0.1.0";

// Entry point behind the `structrag` binary. Returns the process exit code:
// 0 on success, 1 on a domain error, 2 on a usage error.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err,
        const EnvLookup& env = process_env());

}  // namespace structrag::cli
