#pragma once

#include <cstdlib>
#include <iostream>
#include <string>
#include <string_view>

namespace pdn::log {

enum class Level { Error = 0, Info = 1, Debug = 2 };

/// Level from the PDN_LOG environment variable (error|info|debug), default error.
inline Level threshold() {
  static const Level level = [] {
    const char* env = std::getenv("PDN_LOG");
    if (!env) return Level::Error;
    const std::string_view v(env);
    if (v == "debug") return Level::Debug;
    if (v == "info") return Level::Info;
    return Level::Error;
  }();
  return level;
}

inline void write(Level level, std::string_view msg) {
  if (static_cast<int>(level) > static_cast<int>(threshold())) return;
  static constexpr std::string_view names[] = {"error", "info", "debug"};
  std::cerr << "[pdn " << names[static_cast<int>(level)] << "] " << msg << '\n';
}

inline void error(std::string_view msg) { write(Level::Error, msg); }
inline void info(std::string_view msg) { write(Level::Info, msg); }
inline void debug(std::string_view msg) { write(Level::Debug, msg); }

}  // namespace pdn::log
