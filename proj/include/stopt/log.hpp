#pragma once

#include <optional>
#include <sstream>
#include <string_view>

namespace stopt::log {

enum class Level { Error = 0, Warn = 1, Info = 2, Debug = 3 };

std::optional<Level> parse_level(std::string_view text);

/// Defaults to the STO_LOG environment variable, else warn.
Level level();
void set_level(Level level);
void write(Level level, std::string_view message);

template <class... Args>
void emit(Level lvl, const Args&... args) {
  if (static_cast<int>(lvl) > static_cast<int>(level())) return;
  std::ostringstream os;
  (os << ... << args);
  write(lvl, os.str());
}

template <class... Args>
void error(const Args&... args) { emit(Level::Error, args...); }
template <class... Args>
void warn(const Args&... args) { emit(Level::Warn, args...); }
template <class... Args>
void info(const Args&... args) { emit(Level::Info, args...); }
template <class... Args>
void debug(const Args&... args) { emit(Level::Debug, args...); }

}  // namespace stopt::log
