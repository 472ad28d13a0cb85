#pragma once

#include <string_view>

namespace xag {

enum class LogLevel { Quiet = 0, Info = 1, Debug = 2 };

/// Current level, read once from the XAG_LOG environment variable
/// (quiet|info|debug, default info).
LogLevel log_level();

void log_info(std::string_view msg);
void log_debug(std::string_view msg);

}  // namespace xag
