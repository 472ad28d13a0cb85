#include "xag/log.hpp"

#include <cstdio>
#include <cstdlib>
#include <string>

namespace xag {

LogLevel log_level() {
  static LogLevel level = [] {
    const char* env = std::getenv("XAG_LOG");
    if (!env) return LogLevel::Info;
    std::string v(env);
    if (v == "quiet") return LogLevel::Quiet;
    if (v == "debug") return LogLevel::Debug;
    return LogLevel::Info;
  }();
  return level;
}

void log_info(std::string_view msg) {
  if (log_level() >= LogLevel::Info) {
    std::fprintf(stderr, "[xag] %.*s\n", static_cast<int>(msg.size()), msg.data());
  }
}

void log_debug(std::string_view msg) {
  if (log_level() >= LogLevel::Debug) {
    std::fprintf(stderr, "[xag:debug] %.*s\n", static_cast<int>(msg.size()), msg.data());
  }
}

}  // namespace xag
