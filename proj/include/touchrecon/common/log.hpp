#pragma once

#include <spdlog/spdlog.h>

namespace touchrecon {

// Shared logger for library code; defaults to stderr, warnings and above.
spdlog::logger& log();

}  // namespace touchrecon
