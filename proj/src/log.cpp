#include "osal/log.hpp"

#include <cstdio>
#include <cstdlib>
#include <cstring>

namespace osal {

LogLevel log_level() {
    static const LogLevel level = [] {
        const char* value = std::getenv("OSAL_LOG");
        if (value == nullptr) return LogLevel::info;
        if (std::strcmp(value, "quiet") == 0) return LogLevel::quiet;
        if (std::strcmp(value, "debug") == 0) return LogLevel::debug;
        return LogLevel::info;
    }();
    return level;
}

void log_info(const std::string& message) {
    if (log_level() >= LogLevel::info) std::fprintf(stderr, "[osal] %s\n", message.c_str());
}

void log_debug(const std::string& message) {
    if (log_level() >= LogLevel::debug) std::fprintf(stderr, "[osal] %s\n", message.c_str());
}

}  // namespace osal
