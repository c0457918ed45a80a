#pragma once

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <string_view>

namespace fcsum::log {

// FCSUM_LOG_LEVEL: 0 silent, 1 info (default), 2 debug.
inline int level() {
  static const int lvl = [] {
    const char* env = std::getenv("FCSUM_LOG_LEVEL");
    return env ? std::atoi(env) : 1;
  }();
  return lvl;
}

inline void write(std::string_view tag, std::string_view msg) {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream line;
  line << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ") << ' ' << tag << ' ' << msg << '\n';
  std::cerr << line.str();
}

inline void info(std::string_view msg) {
  if (level() >= 1) write("INFO", msg);
}

inline void debug(std::string_view msg) {
  if (level() >= 2) write("DEBUG", msg);
}

}  // namespace fcsum::log
