#pragma once

#include <iostream>
#include <sstream>
#include <string_view>

namespace locjepa::log {

enum class Level { quiet = 0, info = 1, debug = 2 };

/// Read once from LOCJEPA_LOG (quiet|info|debug); defaults to info.
Level level();
void set_level(Level lvl);

template <class... Args>
void write(Level lvl, std::string_view tag, const Args&... args) {
  if (static_cast<int>(lvl) > static_cast<int>(level())) return;
  std::ostringstream out;
  out << "[" << tag << "] ";
  (out << ... << args);
  out << '\n';
  std::cerr << out.str();
}

template <class... Args>
void info(const Args&... args) { write(Level::info, "info", args...); }

template <class... Args>
void debug(const Args&... args) { write(Level::debug, "debug", args...); }

}  // namespace locjepa::log
