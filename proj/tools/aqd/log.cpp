#include "log.hpp"

#include <cstdlib>
#include <iostream>
#include <mutex>
#include <string>

namespace aqd::cli {

namespace {

std::mutex g_out;

const char* level_name(LogLevel l) {
  switch (l) {
    case LogLevel::debug: return "debug";
    case LogLevel::info: return "info";
    case LogLevel::warn: return "warn";
    case LogLevel::error: return "error";
  }
  return "info";
}

LogLevel parse_level() {
  const char* env = std::getenv("AQD_LOG_LEVEL");
  if (!env) return LogLevel::info;
  const std::string v(env);
  if (v == "debug") return LogLevel::debug;
  if (v == "warn" || v == "warning") return LogLevel::warn;
  if (v == "error") return LogLevel::error;
  return LogLevel::info;
}

}  // namespace

LogLevel log_level() {
  static const LogLevel level = parse_level();
  return level;
}

void log(LogLevel level, std::string_view msg, nlohmann::ordered_json fields) {
  if (level < log_level()) return;
  nlohmann::ordered_json rec;
  rec["level"] = level_name(level);
  rec["msg"] = std::string(msg);
  for (auto& [k, v] : fields.items()) rec[k] = v;
  std::lock_guard lock(g_out);
  std::cerr << rec.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace) << '\n';
}

void summary(std::string_view stage, nlohmann::ordered_json fields) {
  nlohmann::ordered_json rec;
  rec["stage"] = std::string(stage);
  for (auto& [k, v] : fields.items()) rec[k] = v;
  std::lock_guard lock(g_out);
  std::cout << rec.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace) << std::endl;
}

}  // namespace aqd::cli
