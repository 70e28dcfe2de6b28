#pragma once

#include <string>

namespace osal {

// Verbosity comes from the OSAL_LOG environment variable
// (quiet | info | debug); info is the default. Log lines go to stderr so
// result output stays clean.
enum class LogLevel { quiet = 0, info = 1, debug = 2 };

LogLevel log_level();
void log_info(const std::string& message);
void log_debug(const std::string& message);

}  // namespace osal
