#pragma once

// Single-line JSON records. Diagnostics go to stderr filtered by
// AQD_LOG_LEVEL (debug, info, warn, error; default info); stage summaries
// always go to stdout.

#include <string_view>

#include "json.hpp"

namespace aqd::cli {

enum class LogLevel { debug = 0, info = 1, warn = 2, error = 3 };

LogLevel log_level();
void log(LogLevel level, std::string_view msg, nlohmann::ordered_json fields = nlohmann::ordered_json::object());
void summary(std::string_view stage, nlohmann::ordered_json fields);

}  // namespace aqd::cli
